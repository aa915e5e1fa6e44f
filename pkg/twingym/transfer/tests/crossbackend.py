from io import StringIO
import os
import shutil
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from twingym.core.env import ComparisonMode, ConfigurationError
from twingym.core.management.twin_command import EXIT_FAILED, EXIT_USAGE
from twingym.envs.registry import get_backend
from twingym.transfer.crossbackend import cross_backend_transfer
from twingym.transfer.tost import TostConfig
from twingym.utils import load_report
from twingym.verify import gate
from twingym.verify.rollout import compare_rollouts


class CrossBackendTest(SimpleTestCase):

    def setUp(self):
        self.pong_ref = get_backend('pong-ref')
        self.pong_perf = get_backend('pong-perf')

    def test_tracker_transfers(self):
        for train_on in ('ref', 'perf'):
            row = cross_backend_transfer(self.pong_ref, self.pong_perf, train_on,
                                         TostConfig(50.0), n_seeds=3, policy='tracker',
                                         episodes=1)
            self.assertTrue(row.bit_identical)
            self.assertTrue(row.equivalent)
            self.assertEqual(0.0, row.gap)
            data = row.to_dict()
            self.assertEqual({'kind': 'tracker'}, data['policy'])
            self.assertEqual(3, len(data['eval_ref']))
            self.assertNotIn('hint', data)
        self.assertEqual('pong-perf', row.train_backend)
        self.assertEqual('pong-ref', row.eval_backend)

    def test_cem_on_perf(self):
        row = cross_backend_transfer(get_backend('cartpole-ref'), get_backend('cartpole-perf'),
                                     'perf', TostConfig(25.0), n_seeds=3, episodes=2,
                                     cem_options={'generations': 2, 'population': 8})
        data = row.to_dict()
        self.assertEqual('linear', data['policy']['kind'])
        self.assertEqual('cartpole-perf', data['train_backend'])
        self.assertIn('tost', data)
        self.assertEqual(3, data['tost']['n_a'])

    def test_pregate_stops_drift(self):
        row = cross_backend_transfer(self.pong_ref, get_backend('pong-vx-decay'), 'ref',
                                     TostConfig(1.0), n_seeds=3, policy='tracker',
                                     episodes=1, pregate_episodes=2,
                                     mode=ComparisonMode.exact())
        self.assertEqual('L3', row.failed_gate)
        self.assertFalse(row.equivalent)
        self.assertIsNone(row.gap)
        data = row.to_dict()
        self.assertEqual(1, data['divergence']['step_index'])
        self.assertNotIn('tost', data)

    def test_configuration_errors(self):
        config = TostConfig(1.0)
        with self.assertRaises(ConfigurationError):
            cross_backend_transfer(self.pong_ref, self.pong_perf, 'both', config)
        with self.assertRaises(ConfigurationError):
            cross_backend_transfer(self.pong_ref, self.pong_perf, 'ref', config,
                                   policy='greedy')
        with self.assertRaises(ConfigurationError):
            cross_backend_transfer(get_backend('cartpole-ref'), get_backend('cartpole-perf'),
                                   'ref', config, policy='tracker')
        with self.assertRaises(ConfigurationError):
            cross_backend_transfer(self.pong_ref, get_backend('cartpole-perf'), 'ref', config)


class TransferCommandTest(SimpleTestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='twingym-transfer')
        self.gate_dir = os.path.join(self.tmpdir, 'gates')
        self.override = override_settings(TWINGYM_REPORT_DIR=self.tmpdir,
                                          TWINGYM_GATE_DIR=self.gate_dir,
                                          TWINGYM_WORKERS=1)
        self.override.enable()

    def tearDown(self):
        self.override.disable()
        shutil.rmtree(self.tmpdir)

    def run_transfer(self, **options):
        stdout = StringIO()
        options.setdefault('n_seeds', 3)
        options.setdefault('episodes', 1)
        call_command('transfer', stdout=stdout, stderr=StringIO(), **options)
        return stdout.getvalue()

    def record_gate(self):
        result = compare_rollouts(get_backend('pong-ref'), get_backend('pong-perf'), 1, 0,
                                  ComparisonMode.exact())
        gate.write_gate(self.gate_dir, 'pong', result)

    def test_refused_without_gate(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_transfer(env='pong')
        self.assertEqual(EXIT_FAILED, ctx.exception.returncode)
        self.assertIn('run verify first', str(ctx.exception))
        self.assertFalse(os.path.exists(os.path.join(self.tmpdir, 'transfer-pong.json')))

    def test_with_gate(self):
        self.record_gate()
        output = self.run_transfer(env='pong', delta=50.0)
        self.assertIn('bit-identical', output)
        report = load_report(os.path.join(self.tmpdir, 'transfer-pong.json'))
        self.assertEqual('pass', report['status'])
        self.assertEqual('L3', report['gate'])
        self.assertEqual('tracker', report['policy'])
        self.assertEqual(['ref', 'perf'], [row['train_on'] for row in report['rows']])
        self.assertEqual(50.0, report['margin_delta'])
        self.assertIn('train_on_ref_seconds', report['timing'])

    def test_forced(self):
        self.run_transfer(env='pong', delta=50.0, force=True)
        report = load_report(os.path.join(self.tmpdir, 'transfer-pong.json'))
        self.assertEqual('forced', report['gate'])

    def test_pregate_failure(self):
        path = os.path.join(self.tmpdir, 'drift.json')
        with self.assertRaises(CommandError) as ctx:
            self.run_transfer(env='pong', backend_b='pong-vx-decay', force=True, pregate=2,
                              json_path=path)
        self.assertEqual(EXIT_FAILED, ctx.exception.returncode)
        report = load_report(path)
        self.assertEqual('fail', report['status'])
        self.assertEqual(['L3', 'L3'], [row['failed_gate'] for row in report['rows']])

    def test_usage_errors(self):
        for options in ({}, {'env': 'chess'}, {'env': 'pong', 'delta': -1.0},
                        {'env': 'pong', 'backend_b': 'pong-turbo'},
                        {'env': 'cartpole', 'policy': 'tracker', 'force': True}):
            with self.assertRaises(CommandError) as ctx:
                self.run_transfer(**options)
            self.assertEqual(EXIT_USAGE, ctx.exception.returncode, options)

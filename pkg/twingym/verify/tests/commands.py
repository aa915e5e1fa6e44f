from io import StringIO
import os
import shutil
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from mock import patch

from twingym.core.management.twin_command import EXIT_FAILED, EXIT_USAGE
from twingym.utils import load_report
from twingym.verify.rollout import compare_rollouts


class VerifyCommandTest(SimpleTestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='twingym-verify')
        self.gate_dir = os.path.join(self.tmpdir, 'gates')
        self.override = override_settings(TWINGYM_REPORT_DIR=self.tmpdir,
                                          TWINGYM_GATE_DIR=self.gate_dir,
                                          TWINGYM_WORKERS=1)
        self.override.enable()

    def tearDown(self):
        self.override.disable()
        shutil.rmtree(self.tmpdir)

    def run_verify(self, *args, **options):
        stdout = StringIO()
        options.setdefault('episodes', 2)
        call_command('verify', *args, stdout=stdout, stderr=StringIO(), **options)
        return stdout.getvalue()

    def test_twins_pass(self):
        output = self.run_verify(env='pong')
        self.assertIn('All gates passed for pong-ref vs pong-perf', output)
        report = load_report(os.path.join(self.tmpdir, 'verify-pong.json'))
        self.assertEqual('pass', report['status'])
        self.assertEqual(['pass'] * 3, [report['phases'][level]['status']
                                        for level in ('L1', 'L2', 'L3')])
        self.assertEqual({'kind': 'exact', 'epsilon': 0.0}, report['mode'])
        self.assertIn('L3_seconds', report['timing'])
        self.assertTrue(os.path.exists(os.path.join(self.gate_dir,
                                                    'pong--pong-ref--pong-perf.json')))

    @override_settings(TWINGYM_WORKERS=None)
    def test_rollouts_use_cpu_count(self):
        with patch('twingym.core.parallel.os.cpu_count', return_value=2), \
                patch('twingym.verify.management.commands.verify.compare_rollouts',
                      wraps=compare_rollouts) as rollouts:
            self.run_verify(env='pong')
        self.assertEqual(2, rollouts.call_args[1]['workers'])

    def test_epsilon_mode_default(self):
        self.run_verify(env='cartpole')
        report = load_report(os.path.join(self.tmpdir, 'verify-cartpole.json'))
        self.assertEqual('epsilon', report['mode']['kind'])
        self.assertEqual('pass', report['status'])

    def test_l1_failure_skips_later_levels(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_verify(env='pong', backend_b='pong-wall-sign')
        self.assertEqual(EXIT_FAILED, ctx.exception.returncode)
        report = load_report(os.path.join(self.tmpdir,
                                          'verify-pong-ref--pong-wall-sign.json'))
        self.assertEqual('fail', report['status'])
        self.assertEqual('fail', report['phases']['L1']['status'])
        self.assertEqual('skipped', report['phases']['L2']['status'])
        self.assertEqual('skipped', report['phases']['L3']['status'])
        self.assertFalse(os.path.exists(self.gate_dir))

    def test_l3_failure_prints_repair(self):
        path = os.path.join(self.tmpdir, 'drift.json')
        stdout = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command('verify', env='pong', backend_b='pong-vx-decay', episodes=2,
                         json_path=path, stdout=stdout, stderr=StringIO())
        self.assertEqual(EXIT_FAILED, ctx.exception.returncode)
        self.assertIn('Level 3 rollout comparison failed at step 1.', stdout.getvalue())
        l3 = load_report(path)['phases']['L3']
        self.assertEqual('fail', l3['status'])
        self.assertEqual(1, l3['step_index'])
        self.assertEqual('observation.ball_vx', l3['field_path'])
        self.assertIn('Diagnosis checklist:', l3['repair'])

    def test_usage_errors(self):
        for options in ({'env': 'chess'},
                        {'env': 'pong', 'backend_b': 'pong-turbo'},
                        {'env': 'pong', 'backend_b': 'cartpole-perf'},
                        {'env': 'pong', 'episodes': 0},
                        {}):
            with self.assertRaises(CommandError) as ctx:
                self.run_verify(**options)
            self.assertEqual(EXIT_USAGE, ctx.exception.returncode, options)

    def test_env_from_backend(self):
        self.run_verify(backend_b='cartpole-perf-ordered', mode='exact')
        report = load_report(os.path.join(
            self.tmpdir, 'verify-cartpole-ref--cartpole-perf-ordered.json'))
        self.assertEqual('cartpole', report['env'])
        self.assertEqual('pass', report['status'])

    def test_config_file(self):
        config = os.path.join(self.tmpdir, 'run.yml')
        with open(config, 'w') as outfile:
            outfile.write('env: pong\nepisodes: 1\nseed: 5\nreference-pairs: 4\n')
        self.run_verify(config=config, episodes=3)
        report = load_report(os.path.join(self.tmpdir, 'verify-pong.json'))
        # the flag wins over the file
        self.assertEqual(3, report['episodes'])
        self.assertEqual(5, report['base_seed'])
        self.assertEqual(len(report['phases']['L1']['suites'][0]['cases']),
                         report['phases']['L1']['cases'])
        with open(config, 'w') as outfile:
            outfile.write('env: pong\nspeed: 3\n')
        with self.assertRaises(CommandError) as ctx:
            self.run_verify(config=config)
        self.assertEqual(EXIT_USAGE, ctx.exception.returncode)

    @override_settings(TWINGYM_EPISODES=1)
    def test_episodes_setting(self):
        call_command('verify', env='pong', stdout=StringIO(), stderr=StringIO())
        report = load_report(os.path.join(self.tmpdir, 'verify-pong.json'))
        self.assertEqual(1, report['episodes'])

    def test_report_deterministic(self):
        reports = []
        for name in ('first.json', 'second.json'):
            path = os.path.join(self.tmpdir, name)
            self.run_verify(env='cartpole', json_path=path, seed=9)
            report = load_report(path)
            del report['timing']
            reports.append(report)
        self.assertEqual(reports[0], reports[1])

    def test_mutants(self):
        output = self.run_verify(mutants=True, episodes=10)
        self.assertIn('pong-vx-decay', output)
        report = load_report(os.path.join(self.tmpdir, 'verify-mutants.json'))
        self.assertEqual('mutants', report['command'])
        self.assertEqual(['ok'] * 8, [row['status'] for row in report['mutants']])

import os
import shutil
import tempfile

from django.test import SimpleTestCase
import numpy as np

from twingym.core.env import ComparisonMode, ConfigurationError
from twingym.core.rng import derive_stream
from twingym.envs.registry import get_backend
from twingym.transfer.policies import RandomPolicy, TrackerPolicy
from twingym.utils import write_json
from twingym.verify import gate
from twingym.verify.repair import repair_text
from twingym.verify.rollout import (DivergenceReport, compare_rollouts,
    record_trace, replay_batch, replay_divergence)


class RolloutTest(SimpleTestCase):

    def setUp(self):
        self.pong_ref = get_backend('pong-ref')
        self.pong_perf = get_backend('pong-perf')

    def test_record_trace(self):
        policy = RandomPolicy(3).for_stream(0, 0)
        trace = record_trace(self.pong_ref, derive_stream(0, 0), policy)
        self.assertEqual(len(trace.actions) + 1, len(trace.observations))
        self.assertTrue(trace.dones[-1])
        self.assertFalse(trace.dones[:-1].any())
        self.assertEqual(0, trace.state(0)['step_count'])
        self.assertEqual(len(trace), trace.state(len(trace))['step_count'])

    def test_replay_batch_matches_scalar(self):
        streams = [derive_stream(1, i) for i in range(3)]
        scalar = [record_trace(self.pong_ref, s, RandomPolicy(3).for_stream(1, i))
                  for i, s in enumerate(streams)]
        batched = replay_batch(self.pong_perf, streams, [t.actions for t in scalar], [0, 1, 2])
        for a, b in zip(scalar, batched):
            np.testing.assert_array_equal(a.observations, b.observations)
            np.testing.assert_array_equal(a.rewards, b.rewards)
            np.testing.assert_array_equal(a.dones, b.dones)
            self.assertEqual(a.state(len(a)), b.state(len(b)))

    def test_twins_pass(self):
        result = compare_rollouts(self.pong_ref, self.pong_perf, 3, 0, ComparisonMode.exact())
        self.assertTrue(result.passed)
        self.assertEqual(3, result.episodes)
        self.assertGreater(result.steps, 0)
        self.assertEqual('pass', result.to_dict()['status'])

        result = compare_rollouts(get_backend('cartpole-ref'), get_backend('cartpole-perf'),
                                  5, 0, ComparisonMode.within(1e-5))
        self.assertTrue(result.passed)

    def test_hundred_episodes(self):
        for ids, mode in ((('pong-ref', 'pong-perf'), ComparisonMode.exact()),
                          (('cartpole-ref', 'cartpole-perf'), ComparisonMode.within(1e-5))):
            result = compare_rollouts(get_backend(ids[0]), get_backend(ids[1]), 100, 0, mode)
            self.assertTrue(result.passed, ids)
            self.assertEqual(100, result.episodes)
            # every episode lasts at least one step
            self.assertGreaterEqual(result.steps, 100)

    def test_scripted_policy(self):
        result = compare_rollouts(self.pong_ref, self.pong_perf, 2, 4, ComparisonMode.exact(),
                                  policy=lambda episode: TrackerPolicy())
        self.assertTrue(result.passed)

    def test_process_workers(self):
        serial = compare_rollouts(self.pong_ref, get_backend('pong-vx-decay'), 4, 2,
                                  ComparisonMode.exact())
        parallel = compare_rollouts(self.pong_ref, get_backend('pong-vx-decay'), 4, 2,
                                    ComparisonMode.exact(), workers=2)
        self.assertEqual(serial.to_dict(), parallel.to_dict())

    def test_drift_divergence(self):
        report = compare_rollouts(self.pong_ref, get_backend('pong-vx-decay'), 5, 0,
                                  ComparisonMode.exact())
        self.assertFalse(report.passed)
        self.assertEqual(0, report.episode_index)
        self.assertEqual(1, report.step_index)
        self.assertEqual('observation.ball_vx', report.field_path)
        self.assertEqual(-1.0, report.value_a)
        self.assertEqual(0, report.last_matching_state['step_count'])
        self.assertIn(report.action_taken, (0, 1, 2))
        self.assertEqual(report.to_dict(), DivergenceReport.from_dict(report.to_dict()).to_dict())

    def test_reset_divergence(self):
        report = compare_rollouts(get_backend('cartpole-ref'),
                                  get_backend('cartpole-reset-order'), 3, 0,
                                  ComparisonMode.within(1e-5))
        self.assertEqual(0, report.step_index)
        self.assertIsNone(report.last_matching_state)
        self.assertIsNone(report.action_taken)
        self.assertEqual('observation.x', report.field_path)

    def test_replay_is_minimal(self):
        # the divergence reproduces from the last matching state in one step
        for backend_b, mode in (('pong-vx-decay', ComparisonMode.exact()),
                                ('cartpole-xdot-damping', ComparisonMode.within(1e-5)),
                                ('pong-reset-skip', ComparisonMode.exact())):
            env_b = get_backend(backend_b)
            env_a = get_backend(env_b.env_id + '-ref')
            report = compare_rollouts(env_a, env_b, 10, 0, mode)
            self.assertFalse(report.passed, backend_b)
            diffs = replay_divergence(env_a, env_b, report)
            self.assertEqual(report.diffs, diffs)

    def test_configuration_errors(self):
        with self.assertRaises(ConfigurationError):
            compare_rollouts(self.pong_ref, get_backend('cartpole-ref'), 1, 0,
                             ComparisonMode.exact())
        with self.assertRaises(ConfigurationError):
            compare_rollouts(self.pong_ref, self.pong_perf, 0, 0, ComparisonMode.exact())


class RepairTextTest(SimpleTestCase):

    def test_step_divergence(self):
        env_a = get_backend('pong-ref')
        report = compare_rollouts(env_a, get_backend('pong-vx-decay'), 1, 0,
                                  ComparisonMode.exact())
        text = repair_text(report, env_a.action_labels)
        self.assertTrue(text.startswith('Level 3 rollout comparison failed at step 1.\n'))
        for heading in ('Divergence:', 'State at step 0 (last matching):',
                        'Action taken at step 1: %d (%s)' % (
                            report.action_taken, env_a.action_labels[report.action_taken]),
                        'All steps 0-0 matched.', 'Diagnosis checklist:',
                        '  Field: observation.ball_vx', '  pong-ref: -1.0',
                        '  Mode: exact'):
            self.assertIn(heading, text)
        self.assertIn('  step_count = 0', text)

    def test_reset_divergence(self):
        report = compare_rollouts(get_backend('pong-ref'), get_backend('pong-reset-skip'), 1,
                                  0, ComparisonMode.exact())
        text = repair_text(report)
        self.assertIn('failed at step 0.', text)
        self.assertIn('Action taken at step 0: none (reset)', text)
        self.assertIn('No steps matched.', text)


class GateTest(SimpleTestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='twingym-gate')

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_write_and_read(self):
        self.assertIsNone(gate.read_gate(self.tmpdir, 'pong', 'pong-ref', 'pong-perf'))
        result = compare_rollouts(get_backend('pong-ref'), get_backend('pong-perf'), 1, 0,
                                  ComparisonMode.exact())
        path = gate.write_gate(self.tmpdir, 'pong', result)
        self.assertEqual(os.path.join(self.tmpdir, 'pong--pong-ref--pong-perf.json'), path)
        data = gate.read_gate(self.tmpdir, 'pong', 'pong-ref', 'pong-perf')
        self.assertEqual('pass', data['status'])
        self.assertEqual('L3', data['level'])
        self.assertIsNone(gate.read_gate(self.tmpdir, 'pong', 'pong-ref', 'pong-vx-decay'))

    def test_failed_gate_ignored(self):
        write_json(gate.gate_path(self.tmpdir, 'pong', 'pong-ref', 'pong-perf'),
                   {'status': 'fail'})
        self.assertIsNone(gate.read_gate(self.tmpdir, 'pong', 'pong-ref', 'pong-perf'))

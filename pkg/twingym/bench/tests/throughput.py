import itertools
import tracemalloc

from django.test import SimpleTestCase
import numpy as np
from mock import patch

from twingym.bench.breakdown import measure_breakdown, synthetic_shape
from twingym.bench.tables import breakdown_table, speedup, throughput_table
from twingym.bench.throughput import (ThroughputReport, action_block,
    measure_sps, prepare, run_steps, sweep_batches)
from twingym.core.env import ConfigurationError
from twingym.core.parallel import ChunkPool
from twingym.envs.cartpole import CartPoleVector
from twingym.envs.pong import PongVector
from twingym.envs.registry import get_backend


class FakeTimer(object):
    '''Clock advancing by the given increments in turn on every call.'''

    def __init__(self, *increments):
        self.increments = itertools.cycle(increments)
        self.now = 0.0

    def __call__(self):
        value = self.now
        self.now += next(self.increments)
        return value


def report(backend_id, batch_size, mean_sps, cv=0.01):
    return ThroughputReport(backend_id, batch_size, 100, [mean_sps, mean_sps], mean_sps,
                            mean_sps * cv, cv, 100)


class ThroughputTest(SimpleTestCase):

    def setUp(self):
        self.backend = get_backend('pong-perf')

    def test_sps_from_timer(self):
        result = measure_sps(self.backend, 256, 1000, n_runs=3, timer=FakeTimer(0.5))
        self.assertEqual([512000.0] * 3, result.run_samples)
        self.assertEqual(512000.0, result.mean_sps)
        self.assertEqual(0.0, result.cv)
        self.assertTrue(result.stable)
        self.assertEqual(1000, result.warmup_steps)
        self.assertEqual([0.5] * 3, result.run_seconds)

    def test_unstable(self):
        result = measure_sps(self.backend, 16, 10, n_runs=4, timer=FakeTimer(0.5, 0.5, 0.8, 0.8),
                             min_run_seconds=0.1)
        self.assertGreater(result.cv, 0.03)
        self.assertFalse(result.stable)
        self.assertFalse(result.to_dict()['timing']['stable'])

    def test_timer_guard(self):
        with self.assertRaisesRegex(ConfigurationError, 'timing guard'):
            measure_sps(self.backend, 16, 10, timer=FakeTimer(0.01))

    def test_invalid_sizes(self):
        for args in ((0, 10, 5), (16, 0, 5), (16, 10, 1)):
            with self.assertRaises(ConfigurationError):
                measure_sps(self.backend, *args, timer=FakeTimer(1.0))

    def test_sweep(self):
        done = []
        reports = sweep_batches(self.backend, [8, 32], 5, n_runs=2, timer=FakeTimer(1.0),
                                progress=done.append)
        self.assertEqual([8, 32], [r.batch_size for r in reports])
        self.assertEqual([40.0, 160.0], [r.mean_sps for r in reports])
        self.assertEqual([1, 2], done)
        with self.assertRaises(ConfigurationError):
            sweep_batches(self.backend, [], 5)
        with self.assertRaises(ConfigurationError):
            sweep_batches(self.backend, [32, 8], 5)

    def test_action_block(self):
        block = action_block(3, 2048, 5000, 0)
        self.assertEqual((512, 2048), block.shape)
        self.assertTrue(((block >= 0) & (block < 3)).all())
        np.testing.assert_array_equal(block, action_block(3, 2048, 5000, 0))
        self.assertEqual((7, 4), action_block(2, 4, 7, 0).shape)

    def test_report_from_dict(self):
        result = measure_sps(self.backend, 8, 5, n_runs=2, timer=FakeTimer(1.0))
        data = result.to_dict()
        self.assertNotIn('mean_sps', data)
        self.assertEqual(result, ThroughputReport.from_dict(data))

    def test_step_loop_allocation_free(self):
        backend = PongVector(pool=ChunkPool(workers=1))
        batch_size = 2 ** 17
        batch = prepare(backend, batch_size, 0)
        actions = action_block(backend.action_count, batch_size, 8, 0)
        run_steps(backend, batch, actions, 4)
        tracemalloc.start()
        try:
            run_steps(backend, batch, actions, 16)
            _, peak = tracemalloc.get_traced_memory()
        finally:
            tracemalloc.stop()
        # a single float32 temporary of the batch would be 512 KiB
        self.assertLess(peak, 256 * 1024)


class BreakdownTest(SimpleTestCase):

    def test_synthetic_shape(self):
        self.assertEqual((1024, 2), synthetic_shape(2000000))
        self.assertEqual((1024, 191), synthetic_shape(200000000))
        self.assertEqual((1, 1), synthetic_shape(1))
        self.assertEqual((3, 2), synthetic_shape(10))

    def test_fractions(self):
        # start, middle and end of each step: 0.3 s stepping, 0.1 s policy
        result = measure_breakdown(get_backend('pong-perf'), 8, 100, 4,
                                   timer=FakeTimer(0.3, 0.1, 0.0))
        self.assertAlmostEqual(1.2, result.env_seconds)
        self.assertAlmostEqual(0.4, result.policy_seconds)
        self.assertAlmostEqual(0.75, result.env_time_fraction)
        self.assertAlmostEqual(0.25, result.policy_time_fraction)
        self.assertEqual(0.75, round(result.to_dict()['timing']['env_time_fraction'], 6))

    def test_real_clock(self):
        result = measure_breakdown(get_backend('cartpole-perf'), 16, 4096, 3)
        self.assertAlmostEqual(1.0, result.env_time_fraction + result.policy_time_fraction)
        self.assertEqual((64, 1), (result.width, result.reps))

    def test_zero_elapsed(self):
        result = measure_breakdown(get_backend('pong-perf'), 8, 100, 2, timer=FakeTimer(0.0))
        self.assertEqual(0.0, result.env_time_fraction)
        self.assertEqual(1.0, result.policy_time_fraction)

    def test_env_fraction_falls_with_policy_size(self):
        backend = CartPoleVector(pool=ChunkPool(workers=1))
        fractions = [measure_breakdown(backend, 8, count, 20).env_time_fraction
                     for count in (100, 10 ** 5, 10 ** 7)]
        self.assertEqual(sorted(fractions, reverse=True), fractions)
        self.assertLess(fractions[-1], 0.5)

    def test_invalid(self):
        backend = get_backend('pong-perf')
        with self.assertRaises(ConfigurationError):
            measure_breakdown(backend, 8, 0, 4)
        with self.assertRaises(ConfigurationError):
            measure_breakdown(backend, 8, 100, 0)


class TablesTest(SimpleTestCase):

    def test_speedup(self):
        baseline = report('pong-ref', 64, 1000.0)
        self.assertEqual(25.0, speedup(report('pong-perf', 512, 25000.0), baseline))
        self.assertIsNone(speedup(report('pong-perf', 512, 25000.0), None))

    def test_throughput_table(self):
        baseline = report('pong-ref', 64, 1000.0)
        text = throughput_table([report('pong-perf', 512, 25000.0),
                                 report('pong-perf', 2048, 90000.0, cv=0.2)], baseline)
        lines = text.splitlines()
        self.assertEqual(5, len(lines))
        self.assertTrue(lines[0].startswith('backend'))
        self.assertIn('baseline', lines[2])
        self.assertIn('25,000 +/- 250', lines[3])
        self.assertIn('25.00x', lines[3])
        self.assertTrue(lines[4].endswith('unstable'))

    def test_breakdown_table(self):
        result = measure_breakdown(get_backend('pong-perf'), 8, 2000000, 2,
                                   timer=FakeTimer(0.3, 0.1, 0.0))
        text = breakdown_table([result])
        self.assertIn('2,000,000', text)
        self.assertIn('75.0', text)


class MeasurementTest(SimpleTestCase):
    '''Timing a backend must not change what it computes.'''

    def assert_same_batch(self, expected, batch):
        for name, values in expected.state.items():
            np.testing.assert_array_equal(values, batch.state[name], err_msg=name)
        np.testing.assert_array_equal(expected.obs, batch.obs)
        np.testing.assert_array_equal(expected.rewards, batch.rewards)
        np.testing.assert_array_equal(expected.dones, batch.dones)

    def prepared_batches(self, target):
        '''Patch ``prepare`` at ``target`` and collect the batches it builds.'''
        batches = []

        def keep(*args):
            batch = prepare(*args)
            batches.append(batch)
            return batch
        return patch(target, side_effect=keep), batches

    def unmeasured(self, backend, batch_size, steps, rows):
        batch = prepare(backend, batch_size, 3)
        return run_steps(backend, batch, action_block(backend.action_count, batch_size,
                                                      rows, 3), steps)

    def test_measure_sps(self):
        for backend_id in ('pong-perf', 'cartpole-perf'):
            backend = get_backend(backend_id)
            patcher, batches = self.prepared_batches('twingym.bench.throughput.prepare')
            with patcher:
                measure_sps(backend, 32, 25, n_runs=2, base_seed=3, timer=FakeTimer(1.0))
            # warm-up plus two timed runs
            expected = self.unmeasured(backend, 32, 75, 25)
            self.assert_same_batch(expected, batches[0])

    def test_measure_breakdown(self):
        for backend_id in ('pong-perf', 'cartpole-perf'):
            backend = get_backend(backend_id)
            patcher, batches = self.prepared_batches('twingym.bench.breakdown.prepare')
            with patcher:
                measure_breakdown(backend, 32, 10 ** 4, 40, base_seed=3)
            self.assert_same_batch(self.unmeasured(backend, 32, 40, 40), batches[0])

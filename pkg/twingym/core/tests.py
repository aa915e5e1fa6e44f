import os
import shutil
import tempfile

from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from mock import patch
import numpy as np

from twingym.core.env import ComparisonMode, ConfigurationError, ContractViolation
from twingym.core.management.twin_command import (EXIT_USAGE, TwinCommand,
    parse_int_list)
from twingym.core.parallel import ChunkPool, default_pool, worker_count
from twingym.core.rng import (MASK64, RngState, counters, derive_stream, rng_next,
    rng_next_batch, rng_uniform, rng_uniform_batch, splitmix_mix)
from twingym.envs.registry import get_backend
from twingym.utils import ReportError, dumps, load_report, load_run_config, write_json


class RngTest(SimpleTestCase):

    def test_counter_masked(self):
        self.assertEqual(MASK64, RngState(-1).counter)
        self.assertEqual(0, RngState(1 << 64).counter)

    def test_splitmix_outputs(self):
        # first outputs of splitmix64 seeded with 0
        state, first = rng_next(RngState(0))
        state, second = rng_next(state)
        self.assertEqual(0xE220A8397B1DCDAF, first)
        self.assertEqual(0x6E789E6AA1B965F4, second)

    def test_uniform_range(self):
        state = derive_stream(0, 0)
        for _ in range(1000):
            state, u = rng_uniform(state)
            self.assertIsInstance(u, np.float32)
            self.assertTrue(0 <= u < 1)

    def test_derive_stream_distinct(self):
        streams = set(derive_stream(7, i).counter for i in range(5000))
        self.assertEqual(5000, len(streams))
        # same arguments, same stream
        self.assertEqual(derive_stream(7, 3), derive_stream(7, 3))
        self.assertNotEqual(derive_stream(7, 3), derive_stream(8, 3))

    def test_splitmix_mix_masks_input(self):
        self.assertEqual(splitmix_mix(5), splitmix_mix(5 + (1 << 64)))

    def test_batch_matches_scalar(self):
        streams = [derive_stream(3, i) for i in range(64)]
        counter = counters(streams)
        out = np.empty(64, dtype=np.float32)
        for _ in range(20):
            rng_uniform_batch(counter, out=out)
            draws = []
            for i, stream in enumerate(streams):
                streams[i], u = rng_uniform(stream)
                draws.append(u)
            np.testing.assert_array_equal(np.array(draws, dtype=np.float32), out)
        self.assertEqual([s.counter for s in streams], [int(c) for c in counter])

    def test_next_batch_outputs(self):
        counter = counters([RngState(0), RngState(5)])
        outputs = rng_next_batch(counter)
        self.assertEqual(rng_next(RngState(0))[1], int(outputs[0]))
        self.assertEqual(rng_next(RngState(5))[1], int(outputs[1]))

    def test_million_draws(self):
        # 1000 streams x 1000 steps
        counter = counters([derive_stream(0, i) for i in range(1000)])
        outputs = np.empty((1000, 1000), dtype=np.uint64)
        for row in outputs:
            rng_next_batch(counter, out=row)
        self.assertEqual(outputs.size, len(np.unique(outputs)))
        uniforms = (outputs >> np.uint64(40)).astype(np.float64) / (1 << 24)
        # standard error of the mean is about 0.0003
        self.assertAlmostEqual(0.5, uniforms.mean(), delta=0.002)
        counts, _ = np.histogram(uniforms, bins=10, range=(0, 1))
        self.assertTrue((np.abs(counts - 100000) < 2000).all(), counts)


class ComparisonModeTest(SimpleTestCase):

    def test_exact(self):
        mode = ComparisonMode.exact()
        self.assertTrue(mode.matches(np.float32(0.1), np.float32(0.1)))
        self.assertFalse(mode.matches(np.float32(0.1), np.nextafter(np.float32(0.1),
                                                                     np.float32(1))))
        self.assertTrue(mode.matches(3, 3))
        self.assertTrue(mode.matches(True, True))
        self.assertFalse(mode.matches(True, False))

    def test_epsilon(self):
        mode = ComparisonMode.within(1e-3)
        self.assertEqual(ComparisonMode.EPSILON, mode.kind)
        self.assertTrue(mode.matches(1.0, 1.0005))
        self.assertFalse(mode.matches(1.0, 1.002))

    def test_mismatches(self):
        mode = ComparisonMode.within(1e-3)
        mask = mode.mismatches([0.0, 1.0, np.nan], [0.0005, 1.1, np.nan])
        self.assertEqual([False, True, True], mask.tolist())

    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            ComparisonMode('bitwise')
        with self.assertRaises(ConfigurationError):
            ComparisonMode.within(-1)

    def test_dict(self):
        mode = ComparisonMode.within(1e-5)
        self.assertEqual(mode, ComparisonMode.from_dict(mode.to_dict()))
        self.assertEqual('exact', ComparisonMode.exact().label)


class EnvContractTest(SimpleTestCase):

    def test_make_state_unknown_field(self):
        backend = get_backend('pong-ref')
        with self.assertRaises(ConfigurationError):
            backend.make_state(ball_z=0.5)

    def test_invalid_action(self):
        for backend_id in ('pong-ref', 'pong-perf', 'cartpole-ref', 'cartpole-perf'):
            backend = get_backend(backend_id)
            state, _ = backend.reset(derive_stream(0, 0))
            with self.assertRaises(ContractViolation):
                backend.step(state, backend.action_count)
            with self.assertRaises(ContractViolation):
                backend.step(state, 'left')

    def test_batch_length_mismatch(self):
        for backend_id in ('pong-ref', 'pong-perf'):
            backend = get_backend(backend_id)
            batch = backend.allocate(4)
            backend.reset_batch(batch, [derive_stream(0, i) for i in range(4)])
            with self.assertRaises(ContractViolation):
                backend.step_batch(batch, np.zeros(3, dtype=np.int64))
            with self.assertRaises(ContractViolation):
                backend.step_batch(batch, np.array([0, 1, 2, 3]))

    def test_state_dict(self):
        backend = get_backend('cartpole-ref')
        state, _ = backend.reset(derive_stream(1, 2))
        self.assertEqual(state, backend.state_from_dict(backend.state_to_dict(state)))

    def test_schema(self):
        self.assertEqual(get_backend('pong-ref').schema(), get_backend('pong-perf').schema())
        self.assertNotEqual(get_backend('pong-ref').schema(),
                            get_backend('cartpole-ref').schema())


class ChunkPoolTest(SimpleTestCase):

    def test_slices(self):
        pool = ChunkPool(workers=4, min_chunk=10)
        self.assertEqual([slice(0, 5)], pool.slices(5))
        slices = pool.slices(100)
        self.assertEqual(4, len(slices))
        self.assertEqual(list(range(100)),
                         [i for s in slices for i in range(s.start, s.stop)])
        self.assertEqual([], pool.slices(0))

    def test_run(self):
        pool = ChunkPool(workers=3, min_chunk=1)
        data = np.zeros(9)
        try:
            pool.run(lambda s: data.__setitem__(s, 1), pool.slices(9))
        finally:
            pool.shutdown()
        self.assertTrue((data == 1).all())

    def test_run_reraises(self):
        pool = ChunkPool(workers=2, min_chunk=1)

        def fail(chunk):
            if chunk.start:
                raise ValueError('chunk %s' % chunk)
        try:
            with self.assertRaises(ValueError):
                pool.run(fail, pool.slices(4))
        finally:
            pool.shutdown()

    def test_chunked_batch_matches_single(self):
        # a batch split over several threads steps exactly like one chunk
        single = get_backend('pong-perf')
        single.pool = ChunkPool(workers=1)
        chunked = get_backend('pong-perf')
        chunked.pool = ChunkPool(workers=4, min_chunk=8)
        streams = [derive_stream(11, i) for i in range(64)]
        actions = np.random.default_rng(0).integers(0, 3, size=(200, 64))
        batches = []
        try:
            for backend in (single, chunked):
                batch = backend.allocate(64)
                backend.reset_batch(batch, streams)
                for row in actions:
                    backend.step_batch(batch, row)
                    backend.reset_done(batch)
                batches.append(batch)
        finally:
            chunked.pool.shutdown()
        np.testing.assert_array_equal(batches[0].obs, batches[1].obs)
        for name in batches[0].state:
            np.testing.assert_array_equal(batches[0].state[name], batches[1].state[name])

    def test_worker_count(self):
        self.assertEqual(3, worker_count(3))
        with patch('twingym.core.parallel.os.cpu_count', return_value=6):
            self.assertEqual(6, worker_count(None))
            self.assertEqual(6, worker_count(0))
            self.assertEqual(6, ChunkPool().workers)
        with patch('twingym.core.parallel.os.cpu_count', return_value=None):
            self.assertEqual(1, worker_count(None))


class UtilsTest(SimpleTestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='twingym-test')

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_dumps_canonical(self):
        self.assertEqual(dumps({'b': 1, 'a': [1, 2]}), dumps({'a': [1, 2], 'b': 1}))
        self.assertTrue(dumps({}).endswith('\n'))

    def test_write_and_load(self):
        path = os.path.join(self.tmpdir, 'nested', 'report.json')
        write_json(path, {'command': 'verify'})
        self.assertEqual({'command': 'verify'}, load_report(path))

    def test_load_malformed(self):
        path = os.path.join(self.tmpdir, 'bad.json')
        with open(path, 'w') as outfile:
            outfile.write('{"command": ')
        with self.assertRaisesRegex(ReportError, 'bad.json: malformed JSON'):
            load_report(path)
        with self.assertRaisesRegex(ReportError, 'missing.json'):
            load_report(os.path.join(self.tmpdir, 'missing.json'))
        with open(path, 'w') as outfile:
            outfile.write('[1, 2]')
        with self.assertRaisesRegex(ReportError, 'expected a JSON object'):
            load_report(path)

    def test_run_config(self):
        path = os.path.join(self.tmpdir, 'run.yml')
        with open(path, 'w') as outfile:
            outfile.write('env: pong\nbackend-b: pong-vx-decay\nepisodes: 5\n')
        self.assertEqual({'env': 'pong', 'backend_b': 'pong-vx-decay', 'episodes': 5},
                         load_run_config(path, ('env', 'backend_b', 'episodes')))
        with self.assertRaisesRegex(ReportError, 'unknown option\\(s\\) episodes'):
            load_run_config(path, ('env', 'backend_b'))

        with open(path, 'w') as outfile:
            outfile.write('')
        self.assertEqual({}, load_run_config(path, ()))
        with open(path, 'w') as outfile:
            outfile.write('- pong\n')
        with self.assertRaises(ReportError):
            load_run_config(path, ('env', ))


class TwinCommandTest(SimpleTestCase):

    def test_parse_int_list(self):
        self.assertEqual([32, 128], parse_int_list('32,128'))
        self.assertEqual([32, 128], parse_int_list([32, '128']))
        self.assertEqual([2000000, 20000000], parse_int_list('2e6, 2e7'))
        with self.assertRaises(CommandError) as ctx:
            parse_int_list('32,many')
        self.assertEqual(EXIT_USAGE, ctx.exception.returncode)

    @override_settings(TWINGYM_EPISODES=7)
    def test_option_precedence(self):
        cmd = TwinCommand()
        cmd.config = {'episodes': 3}
        # flag, then config file, then setting, then default
        self.assertEqual(9, cmd.option({'episodes': 9}, 'episodes', 'TWINGYM_EPISODES', 1))
        self.assertEqual(3, cmd.option({'episodes': None}, 'episodes', 'TWINGYM_EPISODES', 1))
        cmd.config = {}
        self.assertEqual(7, cmd.option({}, 'episodes', 'TWINGYM_EPISODES', 1))
        self.assertEqual(1, cmd.option({}, 'episodes', 'TWINGYM_NO_SUCH_SETTING', 1))
        self.assertEqual(1, cmd.option({}, 'episodes', default=1))

    def test_no_progressbar_for_small_totals(self):
        cmd = TwinCommand()
        cmd.verbosity = 1
        self.assertIsNone(cmd.get_progressbar('work', 2))

    @override_settings(TWINGYM_WORKERS=None)
    def test_workers_default_to_cpu_count(self):
        cmd = TwinCommand()
        with patch('twingym.core.parallel.os.cpu_count', return_value=5):
            cmd.setup()
        self.assertEqual(5, cmd.workers)
        self.assertEqual(5, default_pool().workers)

    @override_settings(TWINGYM_WORKERS=2)
    def test_workers_setting(self):
        cmd = TwinCommand()
        cmd.setup()
        self.assertEqual(2, cmd.workers)
        self.assertEqual(2, default_pool().workers)

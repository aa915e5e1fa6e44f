from django.test import SimpleTestCase
import numpy as np

from twingym.core.parallel import ChunkPool
from twingym.core.rng import derive_stream
from twingym.envs import cartpole
from twingym.envs.cartpole import CartPoleReference, CartPoleVector, draw_component
from twingym.envs.tests.pong import batch_rollout, scalar_rollout


class CartPoleReferenceTest(SimpleTestCase):

    def setUp(self):
        self.env = CartPoleReference()

    def test_reset(self):
        stream = derive_stream(0, 3)
        state, obs = self.env.reset(stream)
        rng = stream
        for name in ('x', 'x_dot', 'theta', 'theta_dot'):
            rng, value = draw_component(rng)
            self.assertEqual(value, getattr(state, name))
            self.assertTrue(-0.05 <= value < 0.05)
        self.assertEqual(rng, state.rng)
        self.assertEqual(0, state.step_count)
        np.testing.assert_array_equal(
            np.array([state.x, state.x_dot, state.theta, state.theta_dot], dtype=np.float32),
            obs)

    def test_push_from_rest(self):
        state, outcome = self.env.step(self.env.make_state(), cartpole.PUSH_RIGHT)
        self.assertEqual(0, state.x)
        self.assertAlmostEqual(0.195122, float(state.x_dot), places=5)
        self.assertAlmostEqual(-0.292683, float(state.theta_dot), places=5)
        self.assertEqual(1, outcome.reward)
        self.assertFalse(outcome.done)
        state, _ = self.env.step(self.env.make_state(), cartpole.PUSH_LEFT)
        self.assertAlmostEqual(-0.195122, float(state.x_dot), places=5)
        self.assertAlmostEqual(0.292683, float(state.theta_dot), places=5)

    def test_euler_uses_previous_velocity(self):
        state, _ = self.env.step(self.env.make_state(x_dot=1.0, theta_dot=1.0),
                                 cartpole.PUSH_RIGHT)
        self.assertEqual(cartpole.TAU * np.float32(1.0), state.x)
        self.assertEqual(cartpole.TAU * np.float32(1.0), state.theta)

    def test_termination(self):
        _, outcome = self.env.step(self.env.make_state(theta=0.205, theta_dot=0.5),
                                   cartpole.PUSH_RIGHT)
        self.assertTrue(outcome.done)
        self.assertEqual(1, outcome.reward)
        _, outcome = self.env.step(self.env.make_state(x=2.39, x_dot=1.0),
                                   cartpole.PUSH_RIGHT)
        self.assertTrue(outcome.done)
        _, outcome = self.env.step(self.env.make_state(x=2.3, x_dot=1.0),
                                   cartpole.PUSH_RIGHT)
        self.assertFalse(outcome.done)

    def test_horizon(self):
        state, outcome = self.env.step(self.env.make_state(step_count=499), cartpole.PUSH_LEFT)
        self.assertEqual(cartpole.MAX_EPISODE, state.step_count)
        self.assertTrue(outcome.done)

    def test_reset_distribution(self):
        states = np.array([[getattr(state, name) for name in ('x', 'x_dot', 'theta', 'theta_dot')]
                           for state, _ in (self.env.reset(derive_stream(0, i))
                                            for i in range(1000))], dtype=np.float64)
        self.assertTrue((np.abs(states) <= cartpole.RESET_BOUND).all())
        # uniform on [-0.05, 0.05): sd 0.0289, sd of the mean 0.0009
        for column in states.T:
            self.assertAlmostEqual(0.0, column.mean(), delta=0.005)
            self.assertAlmostEqual(0.0289, column.std(), delta=0.003)
        self.assertGreater(len(np.unique(states[:, 0])), 990)

    def test_mirror_symmetry(self):
        # negating the state and the push negates the next state
        rng = np.random.default_rng(11)
        for backend in (self.env, CartPoleVector(pool=ChunkPool(workers=1))):
            for _ in range(300):
                values = dict(x=rng.uniform(-2.3, 2.3), x_dot=rng.uniform(-2, 2),
                              theta=rng.uniform(-0.2, 0.2), theta_dot=rng.uniform(-2, 2))
                action = int(rng.integers(0, 2))
                state = backend.make_state(**values)
                mirrored = backend.make_state(**dict((k, -np.float32(v))
                                                     for k, v in values.items()))
                _, outcome = backend.step(state, action)
                _, mirror_outcome = backend.step(mirrored, 1 - action)
                np.testing.assert_allclose(-outcome.observation, mirror_outcome.observation,
                                           rtol=1e-6, atol=1e-7)
                self.assertEqual(outcome.done, mirror_outcome.done)
                self.assertEqual(outcome.reward, mirror_outcome.reward)


class CartPoleVectorTest(SimpleTestCase):

    def setUp(self):
        self.ref = CartPoleReference()
        self.ordered = CartPoleVector(ordered=True, pool=ChunkPool(workers=1))
        self.fast = CartPoleVector(pool=ChunkPool(workers=1))

    def test_ids(self):
        self.assertEqual('cartpole-perf', self.fast.backend_id)
        self.assertEqual('cartpole-perf-ordered', self.ordered.backend_id)

    def test_ordered_batch_is_bit_exact(self):
        streams = [derive_stream(4, i) for i in range(16)]
        actions = np.random.default_rng(3).integers(0, 2, size=(300, 16))
        expected = scalar_rollout(self.ref, streams, actions)
        observations, rewards, dones, _ = batch_rollout(self.ordered, streams, actions)
        self.assertTrue(dones.any())
        np.testing.assert_array_equal(expected[0], observations)
        np.testing.assert_array_equal(expected[1], rewards)
        np.testing.assert_array_equal(expected[2], dones)

    def test_reassociated_step_within_epsilon(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            values = rng.uniform(-0.2, 0.2, size=4)
            state = self.ref.make_state(x=values[0], x_dot=values[1] * 5,
                                        theta=values[2], theta_dot=values[3] * 5)
            action = int(rng.integers(0, 2))
            _, out_ref = self.ref.step(state, action)
            _, out_fast = self.fast.step(state, action)
            self.assertLessEqual(np.abs(out_ref.observation.astype(np.float64) -
                                        out_fast.observation).max(), 1e-5)
            self.assertEqual(out_ref.done, out_fast.done)

    def test_reset_matches_reference(self):
        for i in range(10):
            stream = derive_stream(8, i)
            state_ref, obs_ref = self.ref.reset(stream)
            state_fast, obs_fast = self.fast.reset(stream)
            self.assertEqual(self.ref.state_to_dict(state_ref),
                             self.fast.state_to_dict(state_fast))
            np.testing.assert_array_equal(obs_ref, obs_fast)

'''Twin CartPole backends: classic discrete-action cart-pole dynamics with
explicit Euler integration.

The performance backend multiplies by precomputed reciprocals instead of
dividing, so its results agree with the reference within a small epsilon
rather than bit for bit; ``CartPoleVector(ordered=True)`` evaluates every
expression in the reference order and is bit-exact.
'''

from dataclasses import dataclass, replace
import logging
import math

import numpy as np

from twingym.core.env import EnvBackend, EnvBatch, StepOutcome
from twingym.core.parallel import default_pool
from twingym.core.rng import RngState, counters, rng_uniform, rng_uniform_batch


logger = logging.getLogger(__name__)

ZERO = np.float32(0.0)
ONE = np.float32(1.0)
TWO = np.float32(2.0)

GRAVITY = np.float32(9.8)
MASSCART = np.float32(1.0)
MASSPOLE = np.float32(0.1)
TOTAL_MASS = MASSPOLE + MASSCART
LENGTH = np.float32(0.5)
POLEMASS_LENGTH = MASSPOLE * LENGTH
FORCE_MAG = np.float32(10.0)
TAU = np.float32(0.02)
FOUR_THIRDS = np.float32(4.0 / 3.0)
X_LIMIT = np.float32(2.4)
THETA_LIMIT = np.float32(12 * 2 * math.pi / 360)
MAX_EPISODE = 500
RESET_BOUND = np.float32(0.05)

PUSH_LEFT, PUSH_RIGHT = 0, 1
#: force by action
ACTION_FORCE = np.array([-FORCE_MAG, FORCE_MAG], dtype=np.float32)

#: reciprocal constants for the reassociated batch step
INV_TOTAL_MASS = ONE / TOTAL_MASS
INV_LENGTH = ONE / LENGTH
MASSPOLE_OVER_TOTAL = MASSPOLE * INV_TOTAL_MASS
POLEMASS_LENGTH_OVER_TOTAL = POLEMASS_LENGTH * INV_TOTAL_MASS


@dataclass(frozen=True)
class CartPoleState:
    x: np.float32 = ZERO
    x_dot: np.float32 = ZERO
    theta: np.float32 = ZERO
    theta_dot: np.float32 = ZERO
    step_count: int = 0
    rng: RngState = RngState(0)


def draw_component(rng):
    '''Uniform draw in ``[-RESET_BOUND, RESET_BOUND)``.'''
    rng, u = rng_uniform(rng)
    return rng, (TWO * u - ONE) * RESET_BOUND


class CartPoleBackend(EnvBackend):
    env_id = 'cartpole'
    obs_fields = ('x', 'x_dot', 'theta', 'theta_dot')
    action_labels = ('push-left', 'push-right')
    state_type = CartPoleState
    float_fields = ('x', 'x_dot', 'theta', 'theta_dot')

    #: order in which reset draws the four components
    reset_order = ('x', 'x_dot', 'theta', 'theta_dot')

    def default_state(self):
        return CartPoleState()


class CartPoleReference(CartPoleBackend):
    '''Scalar reference CartPole.'''
    backend_id = 'cartpole-ref'
    description = 'scalar reference CartPole'

    #: mass in the denominators of the dynamics
    total_mass = TOTAL_MASS

    def reset(self, stream):
        rng = stream
        values = {}
        for name in self.reset_order:
            rng, values[name] = draw_component(rng)
        state = CartPoleState(step_count=0, rng=rng, **values)
        return state, self.observe(state)

    def observe(self, state):
        return np.array([state.x, state.x_dot, state.theta, state.theta_dot],
                        dtype=np.float32)

    def accelerations(self, state, force):
        '''Cart and pole accelerations; returns (xacc, thetaacc).'''
        costheta = np.cos(state.theta)
        sintheta = np.sin(state.theta)
        temp = (force + POLEMASS_LENGTH * state.theta_dot * state.theta_dot * sintheta) / self.total_mass
        thetaacc = (GRAVITY * sintheta - costheta * temp) / \
            (LENGTH * (FOUR_THIRDS - MASSPOLE * costheta * costheta / self.total_mass))
        xacc = temp - POLEMASS_LENGTH * thetaacc * costheta / self.total_mass
        return xacc, thetaacc

    def integrate(self, state, action):
        xacc, thetaacc = self.accelerations(state, ACTION_FORCE[action])
        # explicit Euler: positions use the pre-update velocities
        return replace(state,
                       x=state.x + TAU * state.x_dot,
                       x_dot=state.x_dot + TAU * xacc,
                       theta=state.theta + TAU * state.theta_dot,
                       theta_dot=state.theta_dot + TAU * thetaacc,
                       step_count=state.step_count + 1)

    def is_terminal(self, state):
        return bool(abs(state.x) > X_LIMIT or abs(state.theta) > THETA_LIMIT or
                    state.step_count >= MAX_EPISODE)

    def terminal(self, previous, state):
        return self.is_terminal(state)

    def step(self, state, action):
        action = self.check_action(action)
        new_state = self.integrate(state, action)
        done = self.terminal(state, new_state)
        return new_state, StepOutcome(self.observe(new_state), ONE, done)


CARTPOLE_SCRATCH = (
    ('force', np.float32), ('cos', np.float32), ('sin', np.float32),
    ('temp', np.float32), ('thetaacc', np.float32), ('xacc', np.float32),
    ('f0', np.float32), ('f1', np.float32), ('u', np.float32),
    ('m0', np.bool_), ('rng', np.uint64), ('bits', np.uint64), ('u64', np.uint64),
)


class CartPoleVector(CartPoleBackend):
    '''Batched CartPole over struct-of-arrays state with pre-allocated
    scratch buffers.

    :param ordered: evaluate in the reference arithmetic order (bit-exact)
        instead of the reassociated, reciprocal-multiplying order
    :param pool: :class:`~twingym.core.parallel.ChunkPool`; defaults to the
        process-wide pool
    '''
    backend_id = 'cartpole-perf'
    description = 'batched CartPole (reassociated arithmetic)'
    vectorized = True

    def __init__(self, ordered=False, pool=None):
        self.ordered = ordered
        self.pool = pool
        if ordered:
            self.backend_id = 'cartpole-perf-ordered'
            self.description = 'batched CartPole (reference arithmetic order)'

    def allocate(self, batch_size):
        batch = EnvBatch(batch_size, self.state_dtypes(), self.obs_len,
                         scratch_dtypes=CARTPOLE_SCRATCH)
        batch.partition((self.pool or default_pool()).slices(batch_size))
        return batch

    def _run(self, fn, batch, actions=None):
        if actions is None:
            work = [chunk for _, chunk in batch.chunks]
        else:
            work = [(chunk, actions[window]) for window, chunk in batch.chunks]
        (self.pool or default_pool()).run(fn, work)
        return batch

    def reset(self, stream):
        batch = self.allocate(1)
        self.reset_batch(batch, [stream])
        return self.state_at(batch, 0), batch.obs[0].copy()

    def step(self, state, action):
        action = self.check_action(action)
        batch = self.allocate(1)
        self.load_states(batch, [state])
        self.step_batch(batch, np.array([action], dtype=np.int64))
        return self.state_at(batch, 0), StepOutcome(
            batch.obs[0].copy(), batch.rewards[0], bool(batch.dones[0]))

    def observe(self, state):
        return np.array([state.x, state.x_dot, state.theta, state.theta_dot],
                        dtype=np.float32)

    def load_states(self, batch, states, outcomes=None):
        self.check_streams(batch, states)
        for i, state in enumerate(states):
            self.store(batch, i, state)
        if outcomes is None:
            self._observe(batch)
        else:
            for i, outcome in enumerate(outcomes):
                self.store_outcome(batch, i, outcome)

    def reset_batch(self, batch, streams):
        self.check_streams(batch, streams)
        batch.state['rng'][...] = counters(streams)
        batch.dones[...] = True
        self.reset_done(batch)
        batch.dones[...] = False
        batch.rewards[...] = ZERO
        return batch

    def reset_done(self, batch):
        return self._run(self._reset_chunk, batch)

    def step_batch(self, batch, actions):
        self.check_batch(batch, actions)
        actions = np.asarray(actions)
        if actions.size and (actions.min() < 0 or actions.max() >= self.action_count):
            self.check_action(actions[(actions < 0) | (actions >= self.action_count)][0])
        return self._run(self._step_chunk, batch, actions)

    def _reset_chunk(self, chunk):
        s, t, mask = chunk.state, chunk.scratch, chunk.dones
        np.copyto(t['rng'], s['rng'])
        for name in self.reset_order:
            rng_uniform_batch(t['rng'], out=t['u'], bits=t['bits'], scratch=t['u64'])
            np.multiply(t['u'], TWO, out=t['u'])
            np.subtract(t['u'], ONE, out=t['u'])
            np.multiply(t['u'], RESET_BOUND, out=t['u'])
            np.copyto(s[name], t['u'], where=mask)
        np.copyto(s['rng'], t['rng'], where=mask)
        np.copyto(s['step_count'], 0, where=mask)
        self._observe(chunk)

    def _accelerations_ordered(self, s, t):
        force, cos, sin = t['force'], t['cos'], t['sin']
        temp, thetaacc, xacc, f0, f1 = t['temp'], t['thetaacc'], t['xacc'], t['f0'], t['f1']
        td = s['theta_dot']
        # temp = (force + PML * td * td * sin) / M
        np.multiply(td, POLEMASS_LENGTH, out=f0)
        np.multiply(f0, td, out=f0)
        np.multiply(f0, sin, out=f0)
        np.add(force, f0, out=temp)
        np.divide(temp, TOTAL_MASS, out=temp)
        # thetaacc = (G * sin - cos * temp) / (L * (4/3 - mp * cos * cos / M))
        np.multiply(sin, GRAVITY, out=f0)
        np.multiply(cos, temp, out=f1)
        np.subtract(f0, f1, out=thetaacc)
        np.multiply(cos, MASSPOLE, out=f0)
        np.multiply(f0, cos, out=f0)
        np.divide(f0, TOTAL_MASS, out=f0)
        np.subtract(FOUR_THIRDS, f0, out=f0)
        np.multiply(f0, LENGTH, out=f0)
        np.divide(thetaacc, f0, out=thetaacc)
        # xacc = temp - PML * thetaacc * cos / M
        np.multiply(thetaacc, POLEMASS_LENGTH, out=f0)
        np.multiply(f0, cos, out=f0)
        np.divide(f0, TOTAL_MASS, out=f0)
        np.subtract(temp, f0, out=xacc)

    def _accelerations_fast(self, s, t):
        force, cos, sin = t['force'], t['cos'], t['sin']
        temp, thetaacc, xacc, f0, f1 = t['temp'], t['thetaacc'], t['xacc'], t['f0'], t['f1']
        td = s['theta_dot']
        np.multiply(td, td, out=f0)
        np.multiply(f0, sin, out=f0)
        np.multiply(f0, POLEMASS_LENGTH, out=f0)
        np.add(force, f0, out=temp)
        np.multiply(temp, INV_TOTAL_MASS, out=temp)
        np.multiply(sin, GRAVITY, out=f0)
        np.multiply(cos, temp, out=f1)
        np.subtract(f0, f1, out=thetaacc)
        np.multiply(thetaacc, INV_LENGTH, out=thetaacc)
        np.multiply(cos, cos, out=f0)
        np.multiply(f0, MASSPOLE_OVER_TOTAL, out=f0)
        np.subtract(FOUR_THIRDS, f0, out=f0)
        np.divide(thetaacc, f0, out=thetaacc)
        np.multiply(thetaacc, cos, out=f0)
        np.multiply(f0, POLEMASS_LENGTH_OVER_TOTAL, out=f0)
        np.subtract(temp, f0, out=xacc)

    def _step_chunk(self, work):
        chunk, actions = work
        s, t = chunk.state, chunk.scratch
        np.take(ACTION_FORCE, actions, out=t['force'], mode='clip')
        np.cos(s['theta'], out=t['cos'])
        np.sin(s['theta'], out=t['sin'])
        if self.ordered:
            self._accelerations_ordered(s, t)
        else:
            self._accelerations_fast(s, t)

        f0 = t['f0']
        np.multiply(s['x_dot'], TAU, out=f0)
        np.add(s['x'], f0, out=s['x'])
        np.multiply(t['xacc'], TAU, out=f0)
        np.add(s['x_dot'], f0, out=s['x_dot'])
        np.multiply(s['theta_dot'], TAU, out=f0)
        np.add(s['theta'], f0, out=s['theta'])
        np.multiply(t['thetaacc'], TAU, out=f0)
        np.add(s['theta_dot'], f0, out=s['theta_dot'])
        np.add(s['step_count'], 1, out=s['step_count'])

        chunk.rewards.fill(ONE)
        dones, m0 = chunk.dones, t['m0']
        np.abs(s['x'], out=f0)
        np.greater(f0, X_LIMIT, out=dones)
        np.abs(s['theta'], out=f0)
        np.greater(f0, THETA_LIMIT, out=m0)
        np.logical_or(dones, m0, out=dones)
        np.greater_equal(s['step_count'], MAX_EPISODE, out=m0)
        np.logical_or(dones, m0, out=dones)
        self._observe(chunk)

    @staticmethod
    def _observe(chunk):
        s, obs = chunk.state, chunk.obs
        for column, name in enumerate(('x', 'x_dot', 'theta', 'theta_dot')):
            obs[:, column] = s[name]

'''Twin Pong backends.

The field is the unit square.  The opponent paddle guards the left plane
(``x = 0``), the player paddle guards the right plane (``x = 1``); action 1
moves the player paddle up (increasing ``y``), action 2 moves it down.

Within a step events are resolved in a fixed order: player paddle,
opponent paddle, ball advance, wall reflection, paddle contact, scoring,
terminal test.
'''

from dataclasses import dataclass, replace
import functools
import logging

import numpy as np

from twingym.core.env import EnvBackend, EnvBatch, StepOutcome
from twingym.core.parallel import default_pool
from twingym.core.rng import RngState, counters, rng_uniform, rng_uniform_batch


logger = logging.getLogger(__name__)

ZERO = np.float32(0.0)
HALF = np.float32(0.5)
ONE = np.float32(1.0)
TWO = np.float32(2.0)

BALL_VX = np.float32(0.025)
VY0 = np.float32(0.01)
VY_MAX = np.float32(0.03)
VY_GAIN = np.float32(0.03)
PADDLE_HALF = np.float32(0.1)
PADDLE_SPEED = np.float32(0.04)
OPP_SPEED = np.float32(0.03)
WIN_SCORE = 5
MAX_STEPS = 2000

#: paddle centre limits and the normalization denominator
PADDLE_LO = PADDLE_HALF
PADDLE_HI = ONE - PADDLE_HALF
PADDLE_RANGE = PADDLE_HI - PADDLE_LO
WIN_SCORE_F = np.float32(WIN_SCORE)

STAY, UP, DOWN = 0, 1, 2
#: paddle displacement by action
ACTION_DELTA = np.array([ZERO, PADDLE_SPEED, -PADDLE_SPEED], dtype=np.float32)


@dataclass(frozen=True)
class PongState:
    ball_x: np.float32 = HALF
    ball_y: np.float32 = HALF
    ball_vx: np.float32 = -BALL_VX
    ball_vy: np.float32 = ZERO
    player_y: np.float32 = HALF
    opponent_y: np.float32 = HALF
    player_points: int = 0
    opponent_points: int = 0
    step_count: int = 0
    rng: RngState = RngState(0)


def serve_vy(rng):
    '''Draw a serve vertical velocity uniformly in ``[-VY0, VY0)``.'''
    rng, u = rng_uniform(rng)
    return rng, (TWO * u - ONE) * VY0


class PongBackend(EnvBackend):
    '''Shared schema of both Pong backends.'''
    env_id = 'pong'
    obs_fields = ('ball_x', 'ball_y', 'ball_vx', 'ball_vy', 'player_y',
                  'opponent_y', 'player_points', 'opponent_points')
    action_labels = ('stay', 'up', 'down')
    state_type = PongState
    float_fields = ('ball_x', 'ball_y', 'ball_vx', 'ball_vy', 'player_y',
                    'opponent_y')

    def default_state(self):
        return PongState()


class PongReference(PongBackend):
    '''Scalar, readability-first Pong.  Each event of a step is a separate
    method so variant backends can override exactly one of them.'''
    backend_id = 'pong-ref'
    description = 'scalar reference Pong'

    def reset(self, stream):
        rng, vy = serve_vy(stream)
        state = PongState(ball_x=HALF, ball_y=HALF, ball_vx=-BALL_VX,
                          ball_vy=vy, player_y=HALF, opponent_y=HALF,
                          player_points=0, opponent_points=0, step_count=0,
                          rng=rng)
        return state, self.observe(state)

    def observe(self, state):
        return np.array([
            state.ball_x,
            state.ball_y,
            state.ball_vx / BALL_VX,
            state.ball_vy / VY_MAX,
            (state.player_y - PADDLE_LO) / PADDLE_RANGE,
            (state.opponent_y - PADDLE_LO) / PADDLE_RANGE,
            np.float32(state.player_points) / WIN_SCORE_F,
            np.float32(state.opponent_points) / WIN_SCORE_F,
        ], dtype=np.float32)

    def clamp_paddle(self, y):
        return min(max(y, PADDLE_LO), PADDLE_HI)

    def move_player(self, player_y, action):
        return self.clamp_paddle(player_y + ACTION_DELTA[action])

    def move_opponent(self, opponent_y, ball_y):
        delta = min(max(ball_y - opponent_y, -OPP_SPEED), OPP_SPEED)
        return self.clamp_paddle(opponent_y + delta)

    def reflect_walls(self, ball_y, ball_vy):
        if ball_y < ZERO:
            return -ball_y, -ball_vy
        if ball_y > ONE:
            return TWO - ball_y, -ball_vy
        return ball_y, ball_vy

    def deflect(self, ball_y, paddle_y):
        '''Vertical velocity after contact, proportional to the offset from
        the paddle centre.'''
        return VY_GAIN * ((ball_y - paddle_y) / PADDLE_HALF)

    def resolve_planes(self, state):
        '''Paddle contact and scoring for a ball that has crossed one of the
        planes.  Returns (state, reward).'''
        reward = ZERO
        if state.ball_x <= ZERO:
            if abs(state.ball_y - state.opponent_y) <= PADDLE_HALF:
                return replace(state, ball_x=-state.ball_x,
                               ball_vx=-state.ball_vx,
                               ball_vy=self.deflect(state.ball_y, state.opponent_y)), reward
            return self.score(state, player_scored=True), ONE
        if state.ball_x >= ONE:
            if abs(state.ball_y - state.player_y) <= PADDLE_HALF:
                return replace(state, ball_x=TWO - state.ball_x,
                               ball_vx=-state.ball_vx,
                               ball_vy=self.deflect(state.ball_y, state.player_y)), reward
            return self.score(state, player_scored=False), -ONE
        return state, reward

    def score(self, state, player_scored):
        '''Credit the scorer and re-centre the ball; ``ball_vx`` keeps its
        direction.'''
        rng, vy = serve_vy(state.rng)
        if player_scored:
            state = replace(state, player_points=state.player_points + 1)
        else:
            state = replace(state, opponent_points=state.opponent_points + 1)
        return replace(state, ball_x=HALF, ball_y=HALF, ball_vy=vy, rng=rng)

    def transition(self, state, action):
        '''Every event of a step except the terminal test.
        Returns (state, reward).'''
        player_y = self.move_player(state.player_y, action)
        opponent_y = self.move_opponent(state.opponent_y, state.ball_y)
        ball_x = state.ball_x + state.ball_vx
        ball_y, ball_vy = self.reflect_walls(state.ball_y + state.ball_vy,
                                             state.ball_vy)
        state = replace(state, player_y=player_y, opponent_y=opponent_y,
                        ball_x=ball_x, ball_y=ball_y, ball_vy=ball_vy)
        state, reward = self.resolve_planes(state)
        return replace(state, step_count=state.step_count + 1), reward

    def is_terminal(self, state):
        return (state.player_points >= WIN_SCORE or
                state.opponent_points >= WIN_SCORE or
                state.step_count >= MAX_STEPS)

    def step(self, state, action):
        action = self.check_action(action)
        state, reward = self.transition(state, action)
        return state, StepOutcome(self.observe(state), reward,
                                  bool(self.is_terminal(state)))


#: scratch buffers used by :class:`PongVector`
PONG_SCRATCH = (
    ('f0', np.float32), ('f1', np.float32), ('u', np.float32),
    ('m0', np.bool_), ('left', np.bool_), ('right', np.bool_), ('hit', np.bool_),
    ('rng', np.uint64), ('bits', np.uint64), ('u64', np.uint64),
)


class PongVector(PongBackend):
    '''Batched, branchless Pong over struct-of-arrays state.

    Every step writes into buffers allocated by :meth:`allocate`;
    conditionals are computed as masks and applied with
    ``numpy.copyto(..., where=mask)``.  Large batches are split into
    contiguous chunks stepped on a :class:`~twingym.core.parallel.ChunkPool`.
    '''
    backend_id = 'pong-perf'
    description = 'batched branchless Pong'
    vectorized = True

    def __init__(self, pool=None):
        self.pool = pool

    def allocate(self, batch_size):
        batch = EnvBatch(batch_size, self.state_dtypes(), self.obs_len,
                         scratch_dtypes=PONG_SCRATCH)
        batch.partition((self.pool or default_pool()).slices(batch_size))
        return batch

    def _run(self, fn, batch, actions=None):
        if actions is None:
            work = [chunk for _, chunk in batch.chunks]
        else:
            work = [(chunk, actions[window]) for window, chunk in batch.chunks]
        (self.pool or default_pool()).run(fn, work)
        return batch

    # scalar API through a batch of one

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
        batch = self.allocate(1)
        self.store(batch, 0, state)
        self._observe(batch)
        return batch.obs[0].copy()

    def load_states(self, batch, states, outcomes=None):
        self.check_streams(batch, states)
        for i, state in enumerate(states):
            self.store(batch, i, state)
        if outcomes is None:
            self._observe(batch)
        else:
            for i, outcome in enumerate(outcomes):
                self.store_outcome(batch, i, outcome)

    # batch API

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
        rng_uniform_batch(t['rng'], out=t['u'], bits=t['bits'], scratch=t['u64'])
        np.copyto(s['rng'], t['rng'], where=mask)
        self._serve(t['u'], t['f0'])
        np.copyto(s['ball_vy'], t['f0'], where=mask)
        for name in ('ball_x', 'ball_y', 'player_y', 'opponent_y'):
            np.copyto(s[name], HALF, where=mask)
        np.copyto(s['ball_vx'], -BALL_VX, where=mask)
        for name in ('player_points', 'opponent_points', 'step_count'):
            np.copyto(s[name], 0, where=mask)
        self._observe(chunk)

    @staticmethod
    def _serve(u, out):
        np.multiply(u, TWO, out=out)
        np.subtract(out, ONE, out=out)
        np.multiply(out, VY0, out=out)

    @staticmethod
    def _clamp(y):
        np.maximum(y, PADDLE_LO, out=y)
        np.minimum(y, PADDLE_HI, out=y)

    def _step_chunk(self, work):
        chunk, actions = work
        s, t = chunk.state, chunk.scratch
        bx, by, vx, vy = s['ball_x'], s['ball_y'], s['ball_vx'], s['ball_vy']
        py, oy = s['player_y'], s['opponent_y']
        f0, f1, m0 = t['f0'], t['f1'], t['m0']
        left, right, hit = t['left'], t['right'], t['hit']

        # player, via lookup table
        np.take(ACTION_DELTA, actions, out=f0, mode='clip')
        np.add(py, f0, out=py)
        self._clamp(py)

        # opponent tracks the pre-step ball
        np.subtract(by, oy, out=f0)
        np.maximum(f0, -OPP_SPEED, out=f0)
        np.minimum(f0, OPP_SPEED, out=f0)
        np.add(oy, f0, out=oy)
        self._clamp(oy)

        # ball
        np.add(bx, vx, out=bx)
        np.add(by, vy, out=by)

        # walls
        np.less(by, ZERO, out=m0)
        np.negative(by, out=f0)
        np.copyto(by, f0, where=m0)
        np.negative(vy, out=f0)
        np.copyto(vy, f0, where=m0)
        np.greater(by, ONE, out=m0)
        np.subtract(TWO, by, out=f0)
        np.copyto(by, f0, where=m0)
        np.negative(vy, out=f0)
        np.copyto(vy, f0, where=m0)

        # planes
        np.less_equal(bx, ZERO, out=left)
        np.greater_equal(bx, ONE, out=right)
        for crossed, paddle, reflect in ((left, oy, False), (right, py, True)):
            np.subtract(by, paddle, out=f0)
            np.abs(f0, out=f1)
            np.less_equal(f1, PADDLE_HALF, out=hit)
            np.logical_and(hit, crossed, out=hit)
            np.divide(f0, PADDLE_HALF, out=f1)
            np.multiply(f1, VY_GAIN, out=f1)
            np.copyto(vy, f1, where=hit)
            if reflect:
                np.subtract(TWO, bx, out=f0)
            else:
                np.negative(bx, out=f0)
            np.copyto(bx, f0, where=hit)
            np.negative(vx, out=f0)
            np.copyto(vx, f0, where=hit)
            # crossed without contact
            np.logical_xor(crossed, hit, out=crossed)

        # scoring
        rewards = chunk.rewards
        rewards.fill(ZERO)
        np.copyto(rewards, ONE, where=left)
        np.copyto(rewards, -ONE, where=right)
        np.add(s['player_points'], left, out=s['player_points'])
        np.add(s['opponent_points'], right, out=s['opponent_points'])
        np.logical_or(left, right, out=m0)
        np.copyto(t['rng'], s['rng'])
        rng_uniform_batch(t['rng'], out=t['u'], bits=t['bits'], scratch=t['u64'])
        np.copyto(s['rng'], t['rng'], where=m0)
        self._serve(t['u'], f0)
        np.copyto(vy, f0, where=m0)
        np.copyto(bx, HALF, where=m0)
        np.copyto(by, HALF, where=m0)

        # terminal
        np.add(s['step_count'], 1, out=s['step_count'])
        dones = chunk.dones
        np.greater_equal(s['player_points'], WIN_SCORE, out=dones)
        np.greater_equal(s['opponent_points'], WIN_SCORE, out=m0)
        np.logical_or(dones, m0, out=dones)
        np.greater_equal(s['step_count'], MAX_STEPS, out=m0)
        np.logical_or(dones, m0, out=dones)

        self._observe(chunk)

    @staticmethod
    def _observe(chunk):
        s, obs = chunk.state, chunk.obs
        obs[:, 0] = s['ball_x']
        obs[:, 1] = s['ball_y']
        np.divide(s['ball_vx'], BALL_VX, out=obs[:, 2])
        np.divide(s['ball_vy'], VY_MAX, out=obs[:, 3])
        for column, name in ((4, 'player_y'), (5, 'opponent_y')):
            np.subtract(s[name], PADDLE_LO, out=obs[:, column])
            np.divide(obs[:, column], PADDLE_RANGE, out=obs[:, column])
        for column, name in ((6, 'player_points'), (7, 'opponent_points')):
            np.copyto(obs[:, column], s[name], casting='unsafe')
            np.divide(obs[:, column], WIN_SCORE_F, out=obs[:, column])

'''Deliberately bugged variants of the reference backends.

Each mutant overrides exactly one event of the reference step and records
the bug class it belongs to and the verification level expected to catch
it (see :mod:`twingym.verify.mutation`).
'''

from dataclasses import replace

import numpy as np

from twingym.core.rng import rng_uniform
from twingym.envs import cartpole, pong


ARITHMETIC = 'arithmetic'
ORDERING = 'ordering'
DRIFT = 'drift'
RESET = 'reset'


class Mutant(object):
    '''Mixin carrying the mutant metadata.'''
    bug_class = None
    expected_catch_level = None


class PongWallSign(Mutant, pong.PongReference):
    backend_id = 'pong-wall-sign'
    bug_class = ARITHMETIC
    expected_catch_level = 'L1'
    description = 'wall reflection mirrors the position but keeps the sign of ball_vy'

    def reflect_walls(self, ball_y, ball_vy):
        if ball_y < pong.ZERO:
            return -ball_y, ball_vy
        if ball_y > pong.ONE:
            return pong.TWO - ball_y, ball_vy
        return ball_y, ball_vy


class PongScoreFirst(Mutant, pong.PongReference):
    backend_id = 'pong-score-first'
    bug_class = ORDERING
    expected_catch_level = 'L2'
    description = 'scoring is resolved before paddle contact, so every plane crossing scores'

    def resolve_planes(self, state):
        if state.ball_x <= pong.ZERO:
            return self.score(state, player_scored=True), pong.ONE
        if state.ball_x >= pong.ONE:
            return self.score(state, player_scored=False), -pong.ONE
        return state, pong.ZERO


class PongVxDecay(Mutant, pong.PongReference):
    backend_id = 'pong-vx-decay'
    bug_class = DRIFT
    expected_catch_level = 'L3'
    description = 'ball_vx decays by a factor 0.999 per step'

    DECAY = np.float32(0.999)

    def transition(self, state, action):
        state, reward = super(PongVxDecay, self).transition(state, action)
        return replace(state, ball_vx=state.ball_vx * self.DECAY), reward


class PongResetSkip(Mutant, pong.PongReference):
    backend_id = 'pong-reset-skip'
    bug_class = RESET
    expected_catch_level = 'L3'
    description = 'reset discards one rng draw before sampling ball_vy'

    def reset(self, stream):
        stream, _ = rng_uniform(stream)
        return super(PongResetSkip, self).reset(stream)


class CartPoleTotalMass(Mutant, cartpole.CartPoleReference):
    backend_id = 'cartpole-total-mass'
    bug_class = ARITHMETIC
    expected_catch_level = 'L1'
    description = 'uses the cart mass where the total mass belongs'

    total_mass = cartpole.MASSCART


class CartPoleTerminalFirst(Mutant, cartpole.CartPoleReference):
    backend_id = 'cartpole-terminal-first'
    bug_class = ORDERING
    expected_catch_level = 'L2'
    description = 'termination is evaluated on the pre-integration state'

    def terminal(self, previous, state):
        return self.is_terminal(previous)


class CartPoleXdotDamping(Mutant, cartpole.CartPoleReference):
    backend_id = 'cartpole-xdot-damping'
    bug_class = DRIFT
    expected_catch_level = 'L3'
    description = 'x_dot is damped by a factor (1 - 2e-5) per step'

    DAMPING = np.float32(1 - 2e-5)

    def integrate(self, state, action):
        state = super(CartPoleXdotDamping, self).integrate(state, action)
        return replace(state, x_dot=state.x_dot * self.DAMPING)


class CartPoleResetOrder(Mutant, cartpole.CartPoleReference):
    backend_id = 'cartpole-reset-order'
    bug_class = RESET
    expected_catch_level = 'L3'
    description = 'reset draws the components in the order theta, theta_dot, x, x_dot'

    reset_order = ('theta', 'theta_dot', 'x', 'x_dot')


MUTANTS = (
    PongWallSign, CartPoleTotalMass,
    PongScoreFirst, CartPoleTerminalFirst,
    PongVxDecay, CartPoleXdotDamping,
    PongResetSkip, CartPoleResetOrder,
)

'''Built-in level 1 and level 2 cases for the twin environments.

Expected values are computed by hand from the documented step rules and
compared within :data:`~twingym.verify.cases.HAND_TOLERANCE`.  Level 1 cases
exercise one component at a time; anything combining ball and paddle
(contact) or dynamics and termination is a level 2 interaction.
'''

import logging

from twingym.core.env import ConfigurationError
from twingym.core.rng import derive_stream
from twingym.verify.cases import (InteractionScenario, PropertyCase, Within,
    op_expect, op_reset, op_set, op_step)


logger = logging.getLogger(__name__)

SERVE = Within(-0.01, 0.01)
RESET_RANGE = Within(-0.05, 0.05)


PONG_PROPERTIES = [
    PropertyCase('free-flight',
                 {'ball_x': 0.5, 'ball_y': 0.5, 'ball_vx': 0.025, 'ball_vy': 0.0},
                 0, {'state.ball_x': 0.525, 'state.ball_y': 0.5,
                     'state.ball_vy': 0.0, 'reward': 0, 'done': False}),
    PropertyCase('wall-bottom',
                 {'ball_x': 0.5, 'ball_y': 0.005, 'ball_vx': 0.025, 'ball_vy': -0.01},
                 0, {'state.ball_y': 0.005, 'state.ball_vy': 0.01, 'reward': 0}),
    PropertyCase('wall-top',
                 {'ball_x': 0.5, 'ball_y': 0.995, 'ball_vx': 0.025, 'ball_vy': 0.01},
                 0, {'state.ball_y': 0.995, 'state.ball_vy': -0.01, 'reward': 0}),
    PropertyCase('player-up',
                 {'player_y': 0.5}, 1,
                 {'state.player_y': 0.54, 'observation.player_y': 0.55}),
    PropertyCase('player-clamp-top',
                 {'player_y': 0.88}, 1,
                 {'state.player_y': 0.9, 'observation.player_y': 1.0}),
    PropertyCase('player-clamp-bottom',
                 {'player_y': 0.12}, 2,
                 {'state.player_y': 0.1, 'observation.player_y': 0.0}),
    PropertyCase('opponent-tracking',
                 {'ball_y': 0.7, 'ball_vy': 0.0, 'opponent_y': 0.5}, 0,
                 {'state.opponent_y': 0.53}),
    PropertyCase('opponent-small-move',
                 {'ball_y': 0.51, 'ball_vy': 0.0, 'opponent_y': 0.5}, 0,
                 {'state.opponent_y': 0.51}),
    PropertyCase('player-scores',
                 {'ball_x': 0.01, 'ball_y': 0.9, 'ball_vx': -0.025, 'ball_vy': 0.0,
                  'opponent_y': 0.5}, 0,
                 {'reward': 1, 'state.player_points': 1, 'state.opponent_points': 0,
                  'state.ball_x': 0.5, 'state.ball_y': 0.5, 'state.ball_vy': SERVE,
                  'done': False}),
    PropertyCase('opponent-scores',
                 {'ball_x': 0.99, 'ball_y': 0.1, 'ball_vx': 0.025, 'ball_vy': 0.0,
                  'player_y': 0.9}, 0,
                 {'reward': -1, 'state.player_points': 0, 'state.opponent_points': 1,
                  'state.ball_x': 0.5, 'state.ball_y': 0.5, 'done': False}),
    PropertyCase('terminal-score',
                 {'ball_x': 0.01, 'ball_y': 0.9, 'ball_vx': -0.025, 'ball_vy': 0.0,
                  'opponent_y': 0.5, 'player_points': 4}, 0,
                 {'reward': 1, 'state.player_points': 5, 'done': True}),
    PropertyCase('horizon',
                 {'ball_x': 0.5, 'ball_y': 0.5, 'ball_vx': 0.025, 'ball_vy': 0.0,
                  'step_count': 1999}, 0,
                 {'state.step_count': 2000, 'reward': 0, 'done': True}),
    PropertyCase('observation-normalization',
                 {'ball_x': 0.5, 'ball_y': 0.5, 'ball_vx': 0.025, 'ball_vy': 0.015,
                  'player_y': 0.1, 'opponent_y': 0.5, 'player_points': 2,
                  'opponent_points': 3}, 0,
                 {'observation.ball_x': 0.525, 'observation.ball_y': 0.515,
                  'observation.ball_vy': 0.5, 'observation.player_y': 0.0,
                  'observation.opponent_y': 0.5, 'observation.player_points': 0.4,
                  'observation.opponent_points': 0.6}),
]

PONG_INTERACTIONS = [
    InteractionScenario('paddle-hit-then-score', (
        op_set(ball_x=0.99, ball_y=0.5, ball_vx=0.025, ball_vy=0.0,
               player_y=0.5, opponent_y=0.5),
        op_step(0),
        op_expect({'state.ball_vx': -0.025, 'state.ball_x': 0.985, 'reward': 0,
                   'state.opponent_points': 0}),
        op_set(ball_x=0.01, ball_y=0.95),
        op_step(0),
    ), {'reward': 1, 'state.player_points': 1, 'state.opponent_points': 0,
        'state.ball_x': 0.5, 'state.ball_vx': -0.025}),
    InteractionScenario('opponent-paddle-contact', (
        op_set(ball_x=0.02, ball_y=0.6, ball_vx=-0.025, ball_vy=0.0,
               player_y=0.5, opponent_y=0.5),
        op_step(0),
        op_expect({'state.opponent_y': 0.53, 'state.ball_x': 0.005,
                   'state.ball_vx': 0.025, 'state.ball_vy': 0.021, 'reward': 0}),
        op_step(0),
    ), {'state.ball_x': 0.03, 'state.ball_y': 0.621, 'state.player_points': 0,
        'reward': 0}),
    InteractionScenario('wall-and-paddle-same-step', (
        op_set(ball_x=0.99, ball_y=0.005, ball_vx=0.025, ball_vy=-0.01,
               player_y=0.1, opponent_y=0.5),
        op_step(0),
    ), {'state.ball_y': 0.005, 'state.ball_vy': -0.0285, 'state.ball_vx': -0.025,
        'state.ball_x': 0.985, 'reward': 0}),
    InteractionScenario('reset-then-step', (
        op_reset(seed=0, index=0),
        op_expect({'state.ball_x': 0.5, 'state.ball_y': 0.5,
                   'state.player_points': 0, 'state.opponent_points': 0,
                   'state.step_count': 0, 'state.ball_vy': SERVE,
                   'observation.ball_vx': -1.0}),
        op_step(0),
    ), {'state.step_count': 1, 'done': False, 'reward': 0}),
]

CARTPOLE_PROPERTIES = [
    PropertyCase('push-right-from-rest', {}, 1,
                 {'state.x': 0.0, 'state.x_dot': 0.195122, 'state.theta': 0.0,
                  'state.theta_dot': -0.292683, 'reward': 1.0, 'done': False}),
    PropertyCase('push-left-from-rest', {}, 0,
                 {'state.x': 0.0, 'state.x_dot': -0.195122, 'state.theta': 0.0,
                  'state.theta_dot': 0.292683, 'reward': 1.0, 'done': False}),
    PropertyCase('moving-cart', {'x_dot': 1.0}, 1,
                 {'state.x': 0.02, 'state.x_dot': 1.195122, 'state.theta': 0.0,
                  'state.theta_dot': -0.292683}),
    PropertyCase('tilted-pole', {'theta': 0.1}, 0,
                 {'state.x': 0.0, 'state.x_dot': -0.196403, 'state.theta': 0.1,
                  'state.theta_dot': 0.322484, 'observation.theta_dot': 0.322484}),
    PropertyCase('spinning-pole', {'theta_dot': 1.0}, 1,
                 {'state.theta': 0.02, 'state.theta_dot': 0.707317,
                  'state.x_dot': 0.195122, 'state.step_count': 1}),
]

CARTPOLE_INTERACTIONS = [
    InteractionScenario('terminal-then-reset', (
        op_set(theta=0.205, theta_dot=0.5),
        op_step(1),
        op_expect({'done': True, 'reward': 1.0, 'state.theta': 0.215}),
        op_reset(seed=0, index=3),
    ), {'state.step_count': 0, 'state.x': RESET_RANGE, 'state.x_dot': RESET_RANGE,
        'state.theta': RESET_RANGE, 'state.theta_dot': RESET_RANGE}),
    InteractionScenario('horizon', (
        op_set(step_count=499),
        op_step(0),
    ), {'state.step_count': 500, 'done': True}),
    InteractionScenario('cart-leaves-track', (
        op_set(x=2.39, x_dot=1.0),
        op_step(1),
    ), {'state.x': 2.41, 'done': True}),
]

PROPERTIES = {'pong': PONG_PROPERTIES, 'cartpole': CARTPOLE_PROPERTIES}
INTERACTIONS = {'pong': PONG_INTERACTIONS, 'cartpole': CARTPOLE_INTERACTIONS}


def property_cases(env_id):
    try:
        return list(PROPERTIES[env_id])
    except KeyError:
        raise ConfigurationError('No property cases for environment %r' % env_id)


def interaction_scenarios(env_id):
    try:
        return list(INTERACTIONS[env_id])
    except KeyError:
        raise ConfigurationError('No interaction scenarios for environment %r' % env_id)


def reference_pair_cases(backend, count, mode, base_seed=0, max_episodes=100):
    '''Property cases recorded from reference rollouts.

    Rolls ``backend`` out under random actions from
    ``derive_stream(base_seed, i)``, keeps every transition, then picks
    ``count`` evenly spaced transitions; each becomes a case whose setup is
    the full pre-step state and whose expectations are every state field,
    every observation component, the reward and the done flag the reference
    produced.
    '''
    from twingym.transfer.policies import RandomPolicy, action_stream

    if count <= 0:
        return []
    transitions = []
    episode = 0
    while len(transitions) < count and episode < max_episodes:
        state, _ = backend.reset(derive_stream(base_seed, episode))
        policy = RandomPolicy(backend.action_count, action_stream(base_seed, episode))
        done = False
        while not done:
            action = policy.act(None)
            next_state, outcome = backend.step(state, action)
            transitions.append((state, action, next_state, outcome))
            state, done = next_state, outcome.done
        episode += 1

    stride = max(1, len(transitions) // count)
    cases = []
    for number, (state, action, next_state, outcome) in enumerate(transitions[::stride][:count]):
        expected = dict(('state.%s' % name, value)
                        for name, value in backend.state_to_dict(next_state).items())
        expected.update(('observation.%s' % name, value)
                        for name, value in backend.observation_dict(outcome.observation).items())
        expected['reward'] = float(outcome.reward)
        expected['done'] = outcome.done
        cases.append(PropertyCase('reference-pair-%03d' % number,
                                  backend.state_to_dict(state), action, expected, mode))
    logger.debug('recorded %d reference pair cases from %d episodes', len(cases), episode)
    return cases

'''Action sources: random, scripted (Pong tracker) and linear policies.

Every policy offers a scalar :meth:`~Policy.act` and a batched
:meth:`~Policy.act_batch`; the two agree bit for bit on the same
observations.  :meth:`~Policy.for_stream` and :meth:`~Policy.for_streams`
return the acting policy for an evaluation stream index (deterministic
policies return themselves; random policies bind their own rng stream).
'''

import logging

import numpy as np

from twingym.core.env import ContractViolation
from twingym.core.rng import (MASK64, RngState, counters, derive_stream,
    rng_uniform, rng_uniform_batch)
from twingym.envs import pong


logger = logging.getLogger(__name__)

#: xor-ed into the base seed to derive action streams, so the action source
#: never shares a stream with the environment it drives
ACTION_SALT = 0x5DEECE66DA3B1C27

#: Pong tracker dead zone
TRACKER_DEADZONE = np.float32(0.01)


def action_stream(base_seed, index):
    '''Stream of the random action source for episode/seed ``index``.'''
    return derive_stream((int(base_seed) ^ ACTION_SALT) & MASK64, index)


class Policy(object):
    kind = None

    def act(self, observation):
        raise NotImplementedError

    def act_batch(self, observations, out=None):
        raise NotImplementedError

    def for_stream(self, base_seed, index):
        return self

    def for_streams(self, base_seed, indices):
        return self

    def to_dict(self):
        return {'kind': self.kind}


class RandomPolicy(Policy):
    '''Uniform random actions drawn from its own stream; :meth:`act`
    advances the stream.'''
    kind = 'random'

    def __init__(self, action_count, rng=None):
        self.action_count = action_count
        self.rng = rng if rng is not None else RngState(0)
        self._count = np.float32(action_count)

    def act(self, observation):
        self.rng, u = rng_uniform(self.rng)
        return int(u * self._count)

    def for_stream(self, base_seed, index):
        return RandomPolicy(self.action_count, action_stream(base_seed, index))

    def for_streams(self, base_seed, indices):
        return RandomBatchPolicy(self.action_count,
                                 [action_stream(base_seed, i) for i in indices])


class RandomBatchPolicy(Policy):
    '''Batched :class:`RandomPolicy`: one stream per batch element.'''
    kind = 'random'

    def __init__(self, action_count, streams):
        self.action_count = action_count
        self.counter = counters(streams)
        self._count = np.float32(action_count)
        self._u = np.empty(len(streams), dtype=np.float32)

    def act_batch(self, observations, out=None):
        if out is None:
            out = np.empty(len(self.counter), dtype=np.int64)
        rng_uniform_batch(self.counter, out=self._u)
        np.multiply(self._u, self._count, out=self._u)
        np.floor(self._u, out=self._u)
        out[...] = self._u
        return out


class TrackerPolicy(Policy):
    '''Scripted Pong policy: move the player paddle toward the ball's
    height, stay inside the dead zone.'''
    kind = 'tracker'
    obs_len = 8

    def _check(self, length):
        if length != self.obs_len:
            raise ContractViolation('tracker expects %d observation components, got %d'
                                    % (self.obs_len, length))

    def act(self, observation):
        self._check(len(observation))
        ball_y = np.float32(observation[1])
        player_y = np.float32(observation[4]) * pong.PADDLE_RANGE + pong.PADDLE_LO
        if ball_y > player_y + TRACKER_DEADZONE:
            return pong.UP
        if ball_y < player_y - TRACKER_DEADZONE:
            return pong.DOWN
        return pong.STAY

    def act_batch(self, observations, out=None):
        observations = np.asarray(observations, dtype=np.float32)
        self._check(observations.shape[1])
        if out is None:
            out = np.empty(len(observations), dtype=np.int64)
        ball_y = observations[:, 1]
        player_y = observations[:, 4] * pong.PADDLE_RANGE + pong.PADDLE_LO
        out.fill(pong.STAY)
        out[ball_y < player_y - TRACKER_DEADZONE] = pong.DOWN
        out[ball_y > player_y + TRACKER_DEADZONE] = pong.UP
        return out


def linear_scores(weights, bias, observations):
    '''Per-action scores ``b_a + sum_j w_aj * o_j`` accumulated component by
    component in float32.

    :param weights: ``(A, O)`` or ``(B, A, O)`` float32
    :param bias: ``(A,)`` or ``(B, A)`` float32
    :param observations: ``(B, O)`` float32
    '''
    batch = len(observations)
    scores = np.empty((batch, bias.shape[-1]), dtype=np.float32)
    scores[...] = bias
    for j in range(observations.shape[1]):
        if weights.ndim == 2:
            scores += observations[:, j:j + 1] * weights[:, j]
        else:
            scores += observations[:, j:j + 1] * weights[:, :, j]
    return scores


class LinearPolicy(Policy):
    '''Argmax over linear action scores; ties go to the lowest action.

    ``params`` is flat, of length ``(obs_len + 1) * action_count``: one row
    per action holding the observation weights followed by the bias.
    '''
    kind = 'linear'

    def __init__(self, params, obs_len, action_count):
        params = np.asarray(params, dtype=np.float32)
        if params.size != (obs_len + 1) * action_count:
            raise ContractViolation('linear policy needs %d parameters, got %d' %
                                    ((obs_len + 1) * action_count, params.size))
        self.params = params.reshape(-1)
        self.obs_len = obs_len
        self.action_count = action_count
        table = self.params.reshape(action_count, obs_len + 1)
        self.weights = np.ascontiguousarray(table[:, :obs_len])
        self.bias = np.ascontiguousarray(table[:, obs_len])

    @classmethod
    def zeros(cls, obs_len, action_count):
        return cls(np.zeros((obs_len + 1) * action_count, dtype=np.float32),
                   obs_len, action_count)

    def act(self, observation):
        return int(self.act_batch(np.asarray(observation, dtype=np.float32)[None, :])[0])

    def act_batch(self, observations, out=None):
        observations = np.asarray(observations, dtype=np.float32)
        if observations.ndim != 2 or observations.shape[1] != self.obs_len:
            raise ContractViolation('linear policy expects %d observation components, got %s'
                                    % (self.obs_len, observations.shape[1:]))
        actions = np.argmax(linear_scores(self.weights, self.bias, observations), axis=1)
        if out is None:
            return actions
        out[...] = actions
        return out

    def to_dict(self):
        return {'kind': self.kind, 'obs_len': self.obs_len,
                'action_count': self.action_count,
                'params': [float(p) for p in self.params]}


class PopulationLinearPolicy(LinearPolicy):
    '''One :class:`LinearPolicy` parameter vector per batch element.'''

    def __init__(self, population, obs_len, action_count):
        population = np.asarray(population, dtype=np.float32)
        if population.ndim != 2 or population.shape[1] != (obs_len + 1) * action_count:
            raise ContractViolation('population needs rows of %d parameters' %
                                    ((obs_len + 1) * action_count))
        self.obs_len = obs_len
        self.action_count = action_count
        table = population.reshape(len(population), action_count, obs_len + 1)
        self.weights = np.ascontiguousarray(table[:, :, :obs_len])
        self.bias = np.ascontiguousarray(table[:, :, obs_len])

    def act(self, observation):
        raise ContractViolation('population policies only act on batches')

    def to_dict(self):
        return {'kind': 'linear-population', 'size': len(self.bias)}


POLICY_KINDS = ('random', 'tracker', 'linear')


def policy_from_dict(data):
    kind = data.get('kind')
    if kind == 'linear':
        return LinearPolicy(data['params'], data['obs_len'], data['action_count'])
    if kind == 'tracker':
        return TrackerPolicy()
    raise ContractViolation('cannot rebuild a %r policy' % kind)

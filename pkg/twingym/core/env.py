'''The environment contract shared by reference and performance backends.

A backend is a stateless object exposing a pure scalar transition
(:meth:`EnvBackend.reset`, :meth:`EnvBackend.step`) over immutable state
dataclasses, plus a batch protocol (:meth:`EnvBackend.allocate`,
:meth:`EnvBackend.step_batch`, :meth:`EnvBackend.reset_done`) that writes
into buffers allocated once per batch.  The default batch protocol is a
serial loop over the scalar step; performance backends override it.
'''

from abc import ABC, abstractmethod
from dataclasses import dataclass, fields, replace
import logging
import operator

import numpy as np

from twingym.core.rng import RngState


logger = logging.getLogger(__name__)


class ContractViolation(Exception):
    '''A caller broke the environment contract (bad action, batch shape...).'''
    pass


class ConfigurationError(Exception):
    '''Invalid configuration: unknown field path, schema mismatch, bad
    parameters.'''
    pass


@dataclass(frozen=True)
class StepOutcome:
    '''Observation, reward and termination signal of one transition.'''
    observation: np.ndarray
    reward: np.float32
    done: bool


@dataclass(frozen=True)
class ComparisonMode:
    '''How two backends' outputs are compared: bit-identical float32
    representations (``exact``) or per-component absolute difference within
    ``epsilon`` (``epsilon``, an L-infinity tolerance).'''
    kind: str = 'exact'
    epsilon: float = 0.0

    EXACT = 'exact'
    EPSILON = 'epsilon'

    def __post_init__(self):
        if self.kind not in (self.EXACT, self.EPSILON):
            raise ConfigurationError('Unknown comparison mode %r' % self.kind)
        if not self.epsilon >= 0:
            raise ConfigurationError('epsilon must be nonnegative, got %r' % self.epsilon)

    @classmethod
    def exact(cls):
        return cls(cls.EXACT, 0.0)

    @classmethod
    def within(cls, epsilon):
        return cls(cls.EPSILON, float(np.float32(epsilon)))

    @classmethod
    def from_dict(cls, data):
        return cls(data['kind'], float(data.get('epsilon', 0.0)))

    def to_dict(self):
        return {'kind': self.kind, 'epsilon': self.epsilon}

    @property
    def label(self):
        if self.kind == self.EXACT:
            return 'exact'
        return 'epsilon (%g)' % self.epsilon

    def matches(self, a, b):
        '''Compare two scalar values (float, int or bool).'''
        if isinstance(a, (bool, np.bool_)) or isinstance(b, (bool, np.bool_)):
            return bool(a) == bool(b)
        if self.kind == self.EXACT:
            if isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer)):
                return int(a) == int(b)
            return (np.float32(a).view(np.uint32) ==
                    np.float32(b).view(np.uint32))
        return bool(abs(float(a) - float(b)) <= self.epsilon)

    def mismatches(self, a, b):
        '''Element-wise mismatch mask for two float32 arrays.'''
        a = np.asarray(a, dtype=np.float32)
        b = np.asarray(b, dtype=np.float32)
        if self.kind == self.EXACT:
            return a.view(np.uint32) != b.view(np.uint32)
        diff = np.abs(a.astype(np.float64) - b.astype(np.float64))
        # nan never matches
        return ~(diff <= self.epsilon)


class EnvBatch(object):
    '''Struct-of-arrays storage for a batch of environment states plus the
    pre-allocated output buffers a batched step writes into.

    :param size: number of environment instances
    :param state_dtypes: sequence of (field name, numpy dtype); the rng
        counter is always stored under ``rng``
    :param obs_len: observation length
    :param scratch_dtypes: optional sequence of (name, dtype) for scratch
        arrays used by branchless backends
    '''

    def __init__(self, size, state_dtypes, obs_len, scratch_dtypes=(), arrays=None):
        self.size = size
        self.obs_len = obs_len
        #: list of (slice, view) pairs; see :meth:`partition`
        self.chunks = [(slice(0, size), self)]
        if arrays is not None:
            self.state, self.obs, self.rewards, self.dones, self.scratch = arrays
            return
        self.state = dict((name, np.zeros(size, dtype=dtype))
                          for name, dtype in state_dtypes)
        self.state['rng'] = np.zeros(size, dtype=np.uint64)
        self.obs = np.zeros((size, obs_len), dtype=np.float32)
        self.rewards = np.zeros(size, dtype=np.float32)
        self.dones = np.zeros(size, dtype=bool)
        self.scratch = dict((name, np.zeros(size, dtype=dtype))
                            for name, dtype in scratch_dtypes)

    def __len__(self):
        return self.size

    def view(self, start, stop):
        '''A batch sharing memory with this one for elements
        ``start:stop``.'''
        window = slice(start, stop)
        arrays = (dict((k, v[window]) for k, v in self.state.items()),
                  self.obs[window], self.rewards[window], self.dones[window],
                  dict((k, v[window]) for k, v in self.scratch.items()))
        return EnvBatch(stop - start, None, self.obs_len, arrays=arrays)

    def partition(self, slices):
        '''Precompute chunk views over disjoint ``slices``.'''
        if len(slices) > 1:
            self.chunks = [(s, self.view(s.start, s.stop)) for s in slices]


class EnvBackend(ABC):
    '''Base class for every backend of every environment.

    Subclasses set the class attributes below and implement
    :meth:`default_state`, :meth:`reset`, :meth:`step` and :meth:`observe`.
    '''

    #: environment id shared by twin backends, e.g. ``pong``
    env_id = None
    #: registry id of this backend, e.g. ``pong-ref``
    backend_id = None
    #: human-readable description
    description = ''
    #: names of the observation components, in order
    obs_fields = ()
    #: action labels, indexed by action value
    action_labels = ()
    #: state dataclass
    state_type = None
    #: float32 state fields (everything else but ``rng`` is an integer)
    float_fields = ()
    #: batched performance backend?
    vectorized = False

    @property
    def action_count(self):
        return len(self.action_labels)

    @property
    def obs_len(self):
        return len(self.obs_fields)

    @property
    def state_fields(self):
        return tuple(f.name for f in fields(self.state_type))

    def schema(self):
        '''Observation, action and state layout; twins must agree on it.'''
        return {
            'env': self.env_id,
            'obs_fields': list(self.obs_fields),
            'actions': list(self.action_labels),
            'state_fields': list(self.state_fields),
        }

    def __repr__(self):
        return '<%s %s>' % (self.__class__.__name__, self.backend_id)

    # scalar contract

    @abstractmethod
    def default_state(self):
        '''Canonical state used as the base for hand-built test states.'''

    @abstractmethod
    def reset(self, stream):
        '''Start an episode from ``stream``; returns (state, observation).'''

    @abstractmethod
    def step(self, state, action):
        '''Pure transition; returns (state, :class:`StepOutcome`).'''

    @abstractmethod
    def observe(self, state):
        '''Observation vector (float32) for ``state``.'''

    def check_action(self, action):
        try:
            action = operator.index(action)
        except TypeError:
            raise ContractViolation('%s: action must be an integer, got %r' %
                                    (self.backend_id, action))
        if not 0 <= action < self.action_count:
            raise ContractViolation('%s: invalid action %r (expected 0-%d)' %
                                    (self.backend_id, action, self.action_count - 1))
        return action

    def coerce_field(self, name, value):
        if name == 'rng':
            return value if isinstance(value, RngState) else RngState(value)
        if name in self.float_fields:
            return np.float32(value)
        return int(value)

    def make_state(self, base=None, **values):
        '''Build a state from :meth:`default_state` (or ``base``) with the
        given field overrides.'''
        base = base if base is not None else self.default_state()
        unknown = set(values) - set(self.state_fields)
        if unknown:
            raise ConfigurationError('%s has no state field(s) %s' %
                                     (self.env_id, ', '.join(sorted(unknown))))
        return replace(base, **dict((k, self.coerce_field(k, v))
                                    for k, v in values.items()))

    def state_to_dict(self, state):
        '''JSON-friendly dictionary of a state; floats are the exact values
        of their float32 representation.'''
        data = {}
        for name in self.state_fields:
            value = getattr(state, name)
            if name == 'rng':
                data[name] = value.counter
            elif name in self.float_fields:
                data[name] = float(value)
            else:
                data[name] = int(value)
        return data

    def state_from_dict(self, data):
        return self.make_state(**dict((k, data[k]) for k in self.state_fields))

    def observation_dict(self, observation):
        return dict(zip(self.obs_fields, (float(v) for v in observation)))

    # batch protocol

    def state_dtypes(self):
        return [(name, np.float32 if name in self.float_fields else np.int64)
                for name in self.state_fields if name != 'rng']

    def allocate(self, batch_size):
        '''Allocate a batch of ``batch_size`` instances with output buffers.'''
        return EnvBatch(batch_size, self.state_dtypes(), self.obs_len)

    def check_batch(self, batch, actions):
        if len(actions) != batch.size:
            raise ContractViolation('%s: %d actions for a batch of %d' %
                                    (self.backend_id, len(actions), batch.size))

    def load_states(self, batch, states, outcomes=None):
        '''Write scalar states (and optionally outcomes) into ``batch``.'''
        self.check_streams(batch, states)
        for i, state in enumerate(states):
            self.store(batch, i, state)
        if outcomes is not None:
            for i, outcome in enumerate(outcomes):
                self.store_outcome(batch, i, outcome)
        else:
            for i, state in enumerate(states):
                batch.obs[i] = self.observe(state)

    def store(self, batch, index, state):
        for name in self.state_fields:
            value = getattr(state, name)
            batch.state[name][index] = value.counter if name == 'rng' else value

    def store_outcome(self, batch, index, outcome):
        batch.obs[index] = outcome.observation
        batch.rewards[index] = outcome.reward
        batch.dones[index] = outcome.done

    def state_at(self, batch, index):
        values = {}
        for name in self.state_fields:
            value = batch.state[name][index]
            values[name] = RngState(int(value)) if name == 'rng' else value
        return self.make_state(**values)

    def batch_states(self, batch):
        '''Scalar states of every element of ``batch``.'''
        return [self.state_at(batch, i) for i in range(batch.size)]

    def check_streams(self, batch, entries):
        if len(entries) != batch.size:
            raise ContractViolation('%s: %d entries for a batch of %d' %
                                    (self.backend_id, len(entries), batch.size))

    def reset_batch(self, batch, streams):
        '''Reset every element of ``batch`` from its stream.'''
        self.check_streams(batch, streams)
        for i, stream in enumerate(streams):
            state, obs = self.reset(stream)
            self.store(batch, i, state)
            batch.obs[i] = obs
        batch.rewards[...] = 0
        batch.dones[...] = False
        return batch

    def step_batch(self, batch, actions):
        '''Step every element; writes observations, rewards and done flags
        into the batch's buffers.  Serial loop over :meth:`step`.'''
        self.check_batch(batch, actions)
        for i in range(batch.size):
            state, outcome = self.step(self.state_at(batch, i), actions[i])
            self.store(batch, i, state)
            self.store_outcome(batch, i, outcome)
        return batch

    def reset_done(self, batch):
        '''Reset, in place, the elements whose done flag is set, each from
        its own rng (scalar equivalent: ``reset(state.rng)``).'''
        for i in np.flatnonzero(batch.dones):
            state, obs = self.reset(RngState(int(batch.state['rng'][i])))
            self.store(batch, i, state)
            batch.obs[i] = obs
        return batch


'''Property cases, interaction scenarios and the dotted field paths they
assert on.

A field path names one value of a state or step outcome:

* ``state.<field>`` -- a state dataclass field (``state.rng`` is the
  counter)
* ``observation.<name>`` -- an observation component by name
* ``reward`` and ``done``
'''

from dataclasses import dataclass
import logging

import numpy as np

from twingym.core.env import ComparisonMode, ConfigurationError


logger = logging.getLogger(__name__)

#: tolerance for expectations computed by hand
HAND_TOLERANCE = ComparisonMode.within(1e-4)

RESET, SET, STEP, EXPECT = 'reset', 'set', 'step', 'expect'
OPERATIONS = (RESET, SET, STEP, EXPECT)


@dataclass(frozen=True)
class Within:
    '''Closed-interval expectation ``lo <= value <= hi``.'''
    lo: float
    hi: float

    def check(self, value):
        return self.lo <= float(value) <= self.hi

    def to_json(self):
        return {'within': [self.lo, self.hi]}


@dataclass(frozen=True)
class PropertyCase:
    '''One L1 input/output pair: build a state from ``setup`` (field
    overrides over the backend's default state), take ``action`` and compare
    ``expected`` field paths under ``mode``.'''
    name: str
    setup: dict
    action: int
    expected: dict
    mode: ComparisonMode = HAND_TOLERANCE


@dataclass(frozen=True)
class InteractionScenario:
    '''One L2 operation sequence.  ``ops`` is a sequence of
    ``(operation, arguments)`` pairs built with :func:`op_reset`,
    :func:`op_set`, :func:`op_step` and :func:`op_expect`; ``assertions`` are
    checked once the sequence completes.'''
    name: str
    ops: tuple
    assertions: dict
    mode: ComparisonMode = HAND_TOLERANCE

    def __post_init__(self):
        if len(self.ops) < 2:
            raise ConfigurationError('Scenario %s needs at least two operations' % self.name)
        if len(set(self.assertions)) < 2:
            raise ConfigurationError('Scenario %s must assert on at least two fields' % self.name)
        for op, _ in self.ops:
            if op not in OPERATIONS:
                raise ConfigurationError('Scenario %s: unknown operation %r' % (self.name, op))


def op_reset(seed=0, index=0):
    return (RESET, {'seed': seed, 'index': index})


def op_set(**fields):
    return (SET, fields)


def op_step(action):
    return (STEP, {'action': action})


def op_expect(expected):
    return (EXPECT, expected)


@dataclass
class Snapshot:
    '''Current state plus the most recent observation, reward and done
    flag of a running case.'''
    state: object
    observation: np.ndarray
    reward: np.float32 = np.float32(0.0)
    done: bool = False


def validate_path(backend, path):
    '''Raise :class:`ConfigurationError` naming ``path`` unless it resolves
    against the backend's schema.'''
    if path in ('reward', 'done'):
        return
    prefix, _, name = path.partition('.')
    if prefix == 'state' and name in backend.state_fields:
        return
    if prefix == 'observation' and name in backend.obs_fields:
        return
    raise ConfigurationError('Unresolvable field path %r for %s' % (path, backend.env_id))


def validate_fields(backend, names):
    for name in names:
        if name not in backend.state_fields:
            raise ConfigurationError('Unresolvable field path %r for %s' %
                                     ('state.%s' % name, backend.env_id))


def resolve(backend, path, snapshot):
    '''Value of ``path`` in ``snapshot``.'''
    if path == 'reward':
        return snapshot.reward
    if path == 'done':
        return snapshot.done
    prefix, _, name = path.partition('.')
    if prefix == 'state':
        value = getattr(snapshot.state, name)
        return value.counter if name == 'rng' else value
    return snapshot.observation[backend.obs_fields.index(name)]


def to_json_value(value):
    '''Plain JSON value for an expected or actual field value.'''
    if isinstance(value, Within):
        return value.to_json()
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def check_expectations(backend, expected, snapshot, mode):
    '''Field-level diffs (``field``, ``expected``, ``actual``) for every
    expectation ``snapshot`` does not meet, in path order.'''
    diffs = []
    for path in sorted(expected):
        wanted = expected[path]
        actual = resolve(backend, path, snapshot)
        if isinstance(wanted, Within):
            ok = wanted.check(actual)
        else:
            ok = mode.matches(wanted, actual)
        if not ok:
            diffs.append({'field': path, 'expected': to_json_value(wanted),
                          'actual': to_json_value(actual)})
    return diffs

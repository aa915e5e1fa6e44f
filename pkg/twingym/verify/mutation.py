'''Mutation matrix: every registered mutant backend is run through the
level 1, 2 and 3 checks against its environment's reference backend, and
the lowest catching level is compared with the level the mutant was
written to be caught at.
'''

from dataclasses import dataclass
import logging

from twingym.core.env import ComparisonMode, ConfigurationError
from twingym.envs import mutants as mutant_backends
from twingym.envs.registry import get_backend, twin_ids
from twingym.verify.library import interaction_scenarios, property_cases
from twingym.verify.rollout import compare_rollouts
from twingym.verify.suites import run_interaction_suite, run_property_suite


logger = logging.getLogger(__name__)

LEVELS = ('L1', 'L2', 'L3')

#: matrix row status values
OK = 'ok'
KILL_GAP = 'kill-gap'
WRONG_LEVEL = 'wrong-level'

#: comparison mode kind used at level 3, per environment
DEFAULT_MODES = {
    'pong': ComparisonMode.EXACT,
    'cartpole': ComparisonMode.EPSILON,
}


@dataclass(frozen=True)
class MutantSpec:
    id: str
    environment: str
    bug_class: str
    description: str
    expected_catch_level: str

    @classmethod
    def from_backend(cls, backend_cls):
        return cls(backend_cls.backend_id, backend_cls.env_id,
                   backend_cls.bug_class, backend_cls.description,
                   backend_cls.expected_catch_level)

    def to_dict(self):
        return {
            'id': self.id,
            'environment': self.environment,
            'bug_class': self.bug_class,
            'description': self.description,
            'expected_catch_level': self.expected_catch_level,
        }


def registered_mutants():
    ''':class:`MutantSpec` for every compiled-in mutant backend, in
    registry order.'''
    return [MutantSpec.from_backend(cls) for cls in mutant_backends.MUTANTS]


def default_mode(env_id, epsilon=1e-5, modes=None):
    '''Level 3 comparison mode for ``env_id``.

    :param modes: optional mapping of environment id to mode kind
        (``exact`` or ``epsilon``), e.g. the ``TWINGYM_MODES`` setting
    '''
    kind = (modes or DEFAULT_MODES).get(env_id, ComparisonMode.EXACT)
    if kind == ComparisonMode.EPSILON:
        return ComparisonMode.within(epsilon)
    return ComparisonMode.exact()


@dataclass
class MutantResult:
    spec: MutantSpec
    #: level -> caught?
    caught: dict
    #: first detail per level that caught the mutant (failing case names or
    #: the divergence step and field)
    details: dict

    @property
    def caught_level(self):
        for level in LEVELS:
            if self.caught.get(level):
                return level
        return None

    @property
    def status(self):
        level = self.caught_level
        if level is None:
            return KILL_GAP
        if level != self.spec.expected_catch_level:
            return WRONG_LEVEL
        return OK

    def to_dict(self):
        return dict(self.spec.to_dict(), caught=dict(self.caught),
                    caught_level=self.caught_level, status=self.status,
                    details=dict(self.details))


@dataclass
class MutationMatrix:
    rows: list
    episodes: int
    base_seed: int

    @property
    def passed(self):
        return all(row.status == OK for row in self.rows)

    def to_dict(self):
        return {
            'command': 'mutants',
            'status': 'pass' if self.passed else 'fail',
            'episodes': self.episodes,
            'base_seed': self.base_seed,
            'mutants': [row.to_dict() for row in self.rows],
        }


def check_mutant(spec, episodes=10, base_seed=0, epsilon=1e-5, modes=None):
    '''Run one mutant through every level, whatever the earlier levels
    found.'''
    reference = get_backend(twin_ids(spec.environment)[0])
    mutant = get_backend(spec.id)
    caught, details = {}, {}

    report = run_property_suite(mutant, property_cases(spec.environment))
    caught['L1'] = not report.passed
    if not report.passed:
        details['L1'] = [case.name for case in report.failures()]

    report = run_interaction_suite(mutant, interaction_scenarios(spec.environment))
    caught['L2'] = not report.passed
    if not report.passed:
        details['L2'] = [case.name for case in report.failures()]

    result = compare_rollouts(reference, mutant, episodes, base_seed,
                              default_mode(spec.environment, epsilon, modes))
    caught['L3'] = not result.passed
    if not result.passed:
        details['L3'] = {'episode_index': result.episode_index,
                         'step_index': result.step_index,
                         'field_path': result.field_path}
    return MutantResult(spec, caught, details)


def run_mutation_matrix(mutants=None, episodes=10, base_seed=0, epsilon=1e-5,
                        modes=None, progress=None):
    '''Run every mutant through L1, L2 and L3.

    :param mutants: list of :class:`MutantSpec`; defaults to
        :func:`registered_mutants`
    :param progress: optional callable invoked with the number of mutants
        checked so far
    :returns: :class:`MutationMatrix`; a row whose mutant no level caught is
        a ``kill-gap``, one caught below or above its expected level is
        ``wrong-level``
    :raises ConfigurationError: if there are no mutants to run
    '''
    if mutants is None:
        mutants = registered_mutants()
    if not mutants:
        raise ConfigurationError('The mutant registry is empty')
    rows = []
    for count, spec in enumerate(mutants, 1):
        row = check_mutant(spec, episodes, base_seed, epsilon, modes)
        rows.append(row)
        if row.status == KILL_GAP:
            logger.warning('mutant %s survived every level', spec.id)
        elif row.status == WRONG_LEVEL:
            logger.warning('mutant %s caught at %s, expected %s', spec.id,
                           row.caught_level, spec.expected_catch_level)
        else:
            logger.debug('mutant %s caught at %s', spec.id, row.caught_level)
        if progress is not None:
            progress(count)
    return MutationMatrix(rows, episodes, base_seed)

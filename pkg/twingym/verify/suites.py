'''Level 1 (property) and level 2 (interaction) suite runners.'''

from dataclasses import dataclass, field
import logging

from twingym.core.rng import derive_stream
from twingym.verify.cases import (RESET, SET, STEP, EXPECT, Snapshot,
    check_expectations, validate_fields, validate_path)


logger = logging.getLogger(__name__)

PASS = 'pass'
FAIL = 'fail'


@dataclass
class CaseResult:
    name: str
    status: str
    diffs: list = field(default_factory=list)
    #: interaction scenarios: where the failure was detected
    failed_at: str = None
    #: interaction scenarios: serialized state when the failure was detected
    state: dict = None

    @property
    def passed(self):
        return self.status == PASS

    def to_dict(self):
        data = {'name': self.name, 'status': self.status, 'diffs': self.diffs}
        if self.failed_at is not None:
            data['failed_at'] = self.failed_at
            data['state'] = self.state
        return data


@dataclass
class SuiteReport:
    '''Result of one suite on one backend; cases keep their input order.'''
    suite: str
    level: str
    backend: str
    cases: list = field(default_factory=list)

    @property
    def passed_count(self):
        return sum(1 for case in self.cases if case.passed)

    @property
    def failed_count(self):
        return len(self.cases) - self.passed_count

    @property
    def passed(self):
        return self.failed_count == 0

    @property
    def status(self):
        return PASS if self.passed else FAIL

    def failures(self):
        return [case for case in self.cases if not case.passed]

    def to_dict(self):
        return {
            'suite': self.suite,
            'level': self.level,
            'backend': self.backend,
            'status': self.status,
            'passed': self.passed_count,
            'failed': self.failed_count,
            'cases': [case.to_dict() for case in self.cases],
        }


def run_property_suite(backend, cases, suite='properties'):
    '''Run every :class:`~twingym.verify.cases.PropertyCase` independently
    on ``backend``.

    :raises ConfigurationError: if any case names an unresolvable field
        path; raised before any case runs
    '''
    for case in cases:
        validate_fields(backend, case.setup)
        for path in case.expected:
            validate_path(backend, path)

    report = SuiteReport(suite, 'L1', backend.backend_id)
    for case in cases:
        state = backend.make_state(**case.setup)
        state, outcome = backend.step(state, case.action)
        snapshot = Snapshot(state, outcome.observation, outcome.reward, outcome.done)
        diffs = check_expectations(backend, case.expected, snapshot, case.mode)
        report.cases.append(CaseResult(case.name, FAIL if diffs else PASS, diffs))
        if diffs:
            logger.debug('%s: case %s failed on %s', backend.backend_id, case.name,
                         ', '.join(d['field'] for d in diffs))
    return report


def validate_scenario(backend, scenario):
    for op, args in scenario.ops:
        if op == SET:
            validate_fields(backend, args)
        elif op == EXPECT:
            for path in args:
                validate_path(backend, path)
    for path in scenario.assertions:
        validate_path(backend, path)


def run_interaction_suite(backend, scenarios, suite='interactions'):
    '''Run every :class:`~twingym.verify.cases.InteractionScenario` on
    ``backend``.  A scenario starts from the backend's default state; a
    failing checkpoint stops the scenario and reports the state reached.

    :raises ConfigurationError: if any scenario names an unresolvable field
        path; raised before any scenario runs
    '''
    for scenario in scenarios:
        validate_scenario(backend, scenario)

    report = SuiteReport(suite, 'L2', backend.backend_id)
    for scenario in scenarios:
        report.cases.append(run_scenario(backend, scenario))
    return report


def run_scenario(backend, scenario):
    state = backend.default_state()
    snapshot = Snapshot(state, backend.observe(state))
    for index, (op, args) in enumerate(scenario.ops):
        if op == RESET:
            state, observation = backend.reset(derive_stream(args['seed'], args['index']))
            snapshot = Snapshot(state, observation)
        elif op == SET:
            state = backend.make_state(base=snapshot.state, **args)
            snapshot = Snapshot(state, backend.observe(state))
        elif op == STEP:
            state, outcome = backend.step(snapshot.state, args['action'])
            snapshot = Snapshot(state, outcome.observation, outcome.reward, outcome.done)
        elif op == EXPECT:
            diffs = check_expectations(backend, args, snapshot, scenario.mode)
            if diffs:
                return CaseResult(scenario.name, FAIL, diffs,
                                  failed_at='op %d (%s)' % (index, op),
                                  state=backend.state_to_dict(snapshot.state))

    diffs = check_expectations(backend, scenario.assertions, snapshot, scenario.mode)
    if diffs:
        return CaseResult(scenario.name, FAIL, diffs, failed_at='assertions',
                          state=backend.state_to_dict(snapshot.state))
    return CaseResult(scenario.name, PASS)

'''
Verify a pair of backends through the level 1, 2 and 3 gates, in order::

    python manage.py verify --env pong
    python manage.py verify --env cartpole --backend-b cartpole-perf-ordered --mode exact
    python manage.py verify --env pong --backend-b pong-score-first

Level 2 runs only if level 1 passed on both backends, level 3 only if level
2 passed.  A level 3 pass records a gate artifact that ``transfer``
requires.  A level 3 failure prints a repair report (divergence, last
matching state, action taken) and stores the divergence in the JSON report.

With ``--mutants`` the command instead runs every registered mutant
through all three levels against its reference backend and reports the
mutation matrix.

Exit status: 0 all gates passed, 1 verification failure, 2 usage or
configuration error.

----
'''
import logging

from django.conf import settings

from twingym.core.env import ComparisonMode, ConfigurationError
from twingym.core.management.twin_command import TwinCommand
from twingym.envs.registry import (UnknownBackend, check_schemas, get_backend,
    twin_ids)
from twingym.verify import gate
from twingym.verify.library import (interaction_scenarios, property_cases,
    reference_pair_cases)
from twingym.verify.mutation import OK, registered_mutants, run_mutation_matrix
from twingym.verify.repair import repair_text
from twingym.verify.rollout import compare_rollouts
from twingym.verify.suites import (FAIL, PASS, run_interaction_suite,
    run_property_suite)

logger = logging.getLogger(__name__)

SKIPPED = 'skipped'


class Command(TwinCommand):
    '''Run the level 1-3 verification gates on two backends.'''
    help = __doc__

    report_name = 'verify'
    config_keys = ('env', 'backend_a', 'backend_b', 'episodes', 'seed', 'mode',
                   'epsilon', 'reference_pairs', 'mutants')

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--env', help='Environment id (pong or cartpole)')
        parser.add_argument('--backend-a', dest='backend_a',
            help='Backend id treated as ground truth (default: the reference twin)')
        parser.add_argument('--backend-b', dest='backend_b',
            help='Backend id under test (default: the performance twin)')
        parser.add_argument('--episodes', type=int,
            help='Level 3 episodes (default: TWINGYM_EPISODES)')
        parser.add_argument('--seed', type=int,
            help='Base seed (default: TWINGYM_BASE_SEED)')
        parser.add_argument('--mode', choices=[ComparisonMode.EXACT, ComparisonMode.EPSILON],
            help='Comparison mode (default: per environment, TWINGYM_MODES)')
        parser.add_argument('--epsilon', type=float,
            help='Tolerance for epsilon mode (default: TWINGYM_EPSILON)')
        parser.add_argument('--reference-pairs', type=int, dest='reference_pairs',
            help='Add N level 1 cases recorded from reference rollouts')
        parser.add_argument('--mutants', action='store_true', default=False,
            help='Run the mutation matrix instead of verifying one pair')

    def handle(self, *args, **options):
        self.setup(**options)
        if self.option(options, 'mutants'):
            return self.handle_mutants(options)

        env_id, backend_a, backend_b = self.resolve_backends(options)
        episodes = int(self.option(options, 'episodes', 'TWINGYM_EPISODES', 100))
        base_seed = int(self.option(options, 'seed', 'TWINGYM_BASE_SEED', 0))
        mode = self.resolve_mode(options, env_id)
        if episodes < 1:
            self.usage_error('--episodes must be at least 1, got %d' % episodes)

        report = {
            'command': 'verify',
            'env': env_id,
            'backend_a': backend_a.backend_id,
            'backend_b': backend_b.backend_id,
            'base_seed': base_seed,
            'episodes': episodes,
            'mode': mode.to_dict(),
            'phases': {},
        }
        phases = report['phases']

        # L1: hand cases, plus reference pairs if requested
        cases = property_cases(env_id)
        pairs = int(self.option(options, 'reference_pairs', default=0) or 0)
        if pairs > 0:
            source = get_backend(twin_ids(env_id)[0])
            cases.extend(self.run_phase('reference_pairs', reference_pair_cases,
                                        source, pairs, mode, base_seed))
        phases['L1'] = self.run_phase('L1', self.run_suites, run_property_suite,
                                      (backend_a, backend_b), cases)
        self.summarize('L1', phases['L1'])

        if phases['L1']['status'] == PASS:
            phases['L2'] = self.run_phase('L2', self.run_suites, run_interaction_suite,
                                          (backend_a, backend_b),
                                          interaction_scenarios(env_id))
            self.summarize('L2', phases['L2'])
        else:
            phases['L2'] = {'status': SKIPPED}

        failure_text = None
        if phases['L2']['status'] == PASS:
            result = self.run_phase('L3', compare_rollouts, backend_a, backend_b,
                                    episodes, base_seed, mode, workers=self.workers)
            phases['L3'] = result.to_dict()
            if result.passed:
                self.stdout.write('L3: pass (%d episodes, %d steps, %s)' %
                                  (result.episodes, result.steps, mode.label))
                gate_dir = getattr(settings, 'TWINGYM_GATE_DIR', 'gates')
                report['gate'] = gate.write_gate(gate_dir, env_id, result)
            else:
                failure_text = repair_text(result, backend_a.action_labels)
                phases['L3']['repair'] = failure_text
                self.stdout.write('L3: fail')
                self.stdout.write(failure_text)
        else:
            phases['L3'] = {'status': SKIPPED}

        failed = [name for name in ('L1', 'L2', 'L3') if phases[name]['status'] == FAIL]
        report['status'] = FAIL if failed else PASS
        self.write_report(self.report_path(options, self.report_suffix(
            env_id, backend_a, backend_b)), report)

        if failed:
            logger.info('verification of %s against %s failed at %s',
                        backend_b.backend_id, backend_a.backend_id, failed[0])
            self.fail('Verification failed at %s (%s vs %s)' %
                      (failed[0], backend_a.backend_id, backend_b.backend_id))
        self.stdout.write('All gates passed for %s vs %s' %
                          (backend_a.backend_id, backend_b.backend_id))

    def resolve_backends(self, options):
        env_id = self.option(options, 'env')
        names = [self.option(options, 'backend_a'), self.option(options, 'backend_b')]
        try:
            backends = [get_backend(name) if name else None for name in names]
        except UnknownBackend as err:
            self.usage_error(err)
        if env_id is None:
            known = [b for b in backends if b is not None]
            if not known:
                self.usage_error('Please specify --env or a backend id')
            env_id = known[0].env_id
        try:
            defaults = twin_ids(env_id)
        except ConfigurationError as err:
            self.usage_error(err)
        backends = [backend or get_backend(default)
                    for backend, default in zip(backends, defaults)]
        for backend in backends:
            if backend.env_id != env_id:
                self.usage_error('Backend %s does not implement %s' %
                                 (backend.backend_id, env_id))
        try:
            check_schemas(*backends)
        except ConfigurationError as err:
            self.usage_error(err)
        return env_id, backends[0], backends[1]

    def resolve_mode(self, options, env_id):
        epsilon = float(self.option(options, 'epsilon', 'TWINGYM_EPSILON', 1e-5))
        kind = (self.option(options, 'mode') or
                self.env_setting('TWINGYM_MODES', env_id, ComparisonMode.EXACT))
        try:
            if kind == ComparisonMode.EPSILON:
                return ComparisonMode.within(epsilon)
            return ComparisonMode(kind)
        except ConfigurationError as err:
            self.usage_error(err)

    def report_suffix(self, env_id, backend_a, backend_b):
        if (backend_a.backend_id, backend_b.backend_id) == twin_ids(env_id):
            return env_id
        return '%s--%s' % (backend_a.backend_id, backend_b.backend_id)

    def run_suites(self, runner, backends, cases):
        '''Run one suite on every backend; the phase passes if all do.'''
        reports = [runner(backend, cases) for backend in backends]
        passed = all(report.passed for report in reports)
        return {
            'status': PASS if passed else FAIL,
            'cases': len(cases),
            'suites': [report.to_dict() for report in reports],
        }

    def summarize(self, level, phase):
        for suite in phase['suites']:
            self.stdout.write('%s: %s %s (%d passed, %d failed)' % (
                level, suite['backend'], suite['status'], suite['passed'], suite['failed']))
            if self.verbosity >= self.v_normal:
                for case in suite['cases']:
                    if case['status'] != FAIL:
                        continue
                    fields = ', '.join(diff['field'] for diff in case['diffs'])
                    where = ' at %s' % case['failed_at'] if case.get('failed_at') else ''
                    self.stdout.write('  %s failed%s: %s' % (case['name'], where, fields))

    def handle_mutants(self, options):
        episodes = int(self.option(options, 'episodes', 'TWINGYM_MUTATION_EPISODES', 10))
        base_seed = int(self.option(options, 'seed', 'TWINGYM_BASE_SEED', 0))
        epsilon = float(self.option(options, 'epsilon', 'TWINGYM_EPSILON', 1e-5))
        modes = getattr(settings, 'TWINGYM_MODES', None)

        specs = registered_mutants()
        pbar = self.get_progressbar('Mutants', len(specs))
        matrix = self.run_phase('mutants', run_mutation_matrix, specs, episodes,
                                base_seed, epsilon, modes,
                                progress=pbar.update if pbar else None)
        if pbar:
            pbar.finish()

        self.stdout.write('%-26s %-10s %-8s %-4s %-4s %-4s %s' % (
            'mutant', 'class', 'expected', 'L1', 'L2', 'L3', 'status'))
        for row in matrix.rows:
            marks = ['x' if row.caught[level] else '-' for level in ('L1', 'L2', 'L3')]
            self.stdout.write('%-26s %-10s %-8s %-4s %-4s %-4s %s' % (
                row.spec.id, row.spec.bug_class, row.spec.expected_catch_level,
                marks[0], marks[1], marks[2], row.status))

        self.write_report(self.report_path(options, 'mutants'), matrix.to_dict())
        if not matrix.passed:
            self.fail('%d mutant(s) not caught at their expected level' %
                      sum(1 for row in matrix.rows if row.status != OK))

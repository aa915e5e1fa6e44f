'''
Cross-backend policy transfer (level 4) in both training directions::

    python manage.py transfer --env pong
    python manage.py transfer --env cartpole --delta 25 --alpha 0.05

A policy is trained (CEM) or selected (the scripted Pong tracker) on the
reference backend and on the performance backend in turn, evaluated on both
with matched seeds, and the per-seed mean returns are tested for
equivalence with a Welch TOST.  One row is reported per direction.

The pair must have passed ``verify`` (a level 3 gate artifact exists)
unless ``--force`` is given.

Exit status: 0 both directions equivalent, 1 not equivalent or no gate,
2 usage or configuration error.

----
'''
import logging

from django.conf import settings

from twingym.core.env import ComparisonMode, ConfigurationError
from twingym.core.management.twin_command import TwinCommand
from twingym.envs.registry import UnknownBackend, get_backend, twin_ids
from twingym.transfer.crossbackend import POLICIES, TRAIN_ON, cross_backend_transfer
from twingym.transfer.tost import TostConfig
from twingym.verify import gate

logger = logging.getLogger(__name__)

#: policy used when --policy is not given
DEFAULT_POLICIES = {
    'pong': 'tracker',
    'cartpole': 'cem',
}


class Command(TwinCommand):
    '''Run cross-backend policy transfer on a twin pair.'''
    help = __doc__

    report_name = 'transfer'
    config_keys = ('env', 'backend_a', 'backend_b', 'episodes', 'n_seeds', 'seed',
                   'delta', 'alpha', 'policy', 'force', 'pregate', 'cem')

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--env', help='Environment id (pong or cartpole)')
        parser.add_argument('--backend-a', dest='backend_a',
            help='Reference backend id (default: the reference twin)')
        parser.add_argument('--backend-b', dest='backend_b',
            help='Performance backend id (default: the performance twin)')
        parser.add_argument('--episodes', type=int,
            help='Evaluation episodes per seed (default: TWINGYM_EVAL_EPISODES)')
        parser.add_argument('--n-seeds', type=int, dest='n_seeds',
            help='Evaluation seeds (default: TWINGYM_N_SEEDS)')
        parser.add_argument('--seed', type=int,
            help='Base seed (default: TWINGYM_BASE_SEED)')
        parser.add_argument('--delta', type=float,
            help='Equivalence margin in return units (default: TWINGYM_DELTA)')
        parser.add_argument('--alpha', type=float,
            help='Significance level (default: TWINGYM_ALPHA)')
        parser.add_argument('--policy', choices=POLICIES,
            help='Policy to transfer (default: tracker for pong, cem otherwise)')
        parser.add_argument('--pregate', type=int,
            help='Run a level 3 comparison of N episodes before transferring')
        parser.add_argument('--force', action='store_true', default=False,
            help='Run even without a level 3 gate artifact')

    def handle(self, *args, **options):
        self.setup(**options)
        env_id = self.option(options, 'env')
        if env_id is None:
            self.usage_error('Please specify --env')
        try:
            ref_id, perf_id = twin_ids(env_id)
            env_ref = get_backend(self.option(options, 'backend_a') or ref_id)
            env_perf = get_backend(self.option(options, 'backend_b') or perf_id)
        except (UnknownBackend, ConfigurationError) as err:
            self.usage_error(err)

        base_seed = int(self.option(options, 'seed', 'TWINGYM_BASE_SEED', 0))
        episodes = int(self.option(options, 'episodes', 'TWINGYM_EVAL_EPISODES', 20))
        n_seeds = int(self.option(options, 'n_seeds', 'TWINGYM_N_SEEDS', 10))
        pregate = int(self.option(options, 'pregate', default=0) or 0)
        policy = self.option(options, 'policy') or DEFAULT_POLICIES.get(env_id, 'cem')
        delta = self.option(options, 'delta')
        if delta is None:
            delta = self.env_setting('TWINGYM_DELTA', env_id, 1.0)
        try:
            config = TostConfig(float(delta),
                                float(self.option(options, 'alpha', 'TWINGYM_ALPHA', 0.05)))
        except ConfigurationError as err:
            self.usage_error(err)
        cem_options = dict(getattr(settings, 'TWINGYM_CEM', {}))
        cem_options.update(self.option(options, 'cem', default={}) or {})
        cem_options.setdefault('episodes', episodes)

        gate_dir = getattr(settings, 'TWINGYM_GATE_DIR', 'gates')
        gate_record = gate.read_gate(gate_dir, env_id, env_ref.backend_id, env_perf.backend_id)
        force = bool(self.option(options, 'force', default=False))
        if gate_record is None and not force:
            logger.info('transfer refused: no L3 gate for %s vs %s',
                        env_ref.backend_id, env_perf.backend_id)
            self.fail('No level 3 gate for %s vs %s; run verify first or pass --force' %
                      (env_ref.backend_id, env_perf.backend_id))

        mode = ComparisonMode.exact()
        if self.env_setting('TWINGYM_MODES', env_id) == ComparisonMode.EPSILON:
            mode = ComparisonMode.within(getattr(settings, 'TWINGYM_EPSILON', 1e-5))

        rows = []
        for train_on in TRAIN_ON:
            pbar = None
            if policy == 'cem':
                pbar = self.get_progressbar('Training on %s' % train_on,
                                            int(cem_options.get('generations', 0)))
            row = self.run_phase(
                'train_on_%s' % train_on, cross_backend_transfer, env_ref, env_perf,
                train_on, config, n_seeds=n_seeds, base_seed=base_seed, policy=policy,
                episodes=episodes, cem_options=cem_options, pregate_episodes=pregate,
                mode=mode, workers=self.workers, progress=pbar.update if pbar else None)
            if pbar:
                pbar.finish()
            rows.append(row.to_dict())
            self.print_row(rows[-1])

        equivalent = all(row['equivalent'] for row in rows)
        report = {
            'command': 'transfer',
            'env': env_id,
            'backend_ref': env_ref.backend_id,
            'backend_perf': env_perf.backend_id,
            'base_seed': base_seed,
            'n_seeds': n_seeds,
            'episodes': episodes,
            'policy': policy,
            'margin_delta': config.margin_delta,
            'alpha': config.alpha,
            'gate': 'forced' if gate_record is None else 'L3',
            'rows': rows,
            'status': 'pass' if equivalent else 'fail',
        }
        self.write_report(self.report_path(options, env_id), report)
        if not equivalent:
            self.fail('Transfer not equivalent for %s (delta %g, alpha %g)' %
                      (env_id, config.margin_delta, config.alpha))

    def print_row(self, row):
        if row.get('failed_gate'):
            self.stdout.write('train on %-14s failed gate %s' % (row['train_backend'],
                                                                  row['failed_gate']))
            return
        self.stdout.write('train on %-14s eval perf %10.3f +/- %-8.3f eval ref %10.3f '
                          '+/- %-8.3f %s%s' % (
                              row['train_backend'], row['eval_perf_mean'],
                              row['eval_perf_std'], row['eval_ref_mean'],
                              row['eval_ref_std'],
                              'equivalent' if row['equivalent'] else 'NOT equivalent',
                              ' (bit-identical)' if row['bit_identical'] else ''))
        if row.get('hint') and self.verbosity >= self.v_normal:
            self.stdout.write('  %s' % row['hint'])

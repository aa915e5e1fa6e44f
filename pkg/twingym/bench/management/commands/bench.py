'''
Throughput benchmark: batch-size sweep of a backend against a serial
baseline::

    python manage.py bench --env pong
    python manage.py bench --env cartpole --batches 256,2048 --runs 5 --steps 2000
    python manage.py bench --env pong --breakdown 2e6,2e7,2e8

The baseline backend (default: the reference twin, stepped as a serial
loop) is measured once at ``TWINGYM_BENCH_BASELINE_BATCH`` x
``TWINGYM_BENCH_BASELINE_STEPS``; every sweep row reports its speedup
against it.  Rows whose coefficient of variation exceeds
``TWINGYM_CV_THRESHOLD`` are flagged unstable.

Exit status: 0 all rows stable, 2 usage or configuration error (including
runs too short for the timer guard), 3 some row unstable.

----
'''
import logging

from django.conf import settings

from twingym.bench.breakdown import measure_breakdown
from twingym.bench.tables import breakdown_table, speedup, throughput_table
from twingym.bench.throughput import measure_sps, sweep_batches
from twingym.core.env import ConfigurationError
from twingym.core.management.twin_command import (TwinCommand, EXIT_UNSTABLE,
    parse_int_list)
from twingym.envs.registry import UnknownBackend, get_backend, twin_ids

logger = logging.getLogger(__name__)


class Command(TwinCommand):
    '''Measure steps per second across batch sizes.'''
    help = __doc__

    report_name = 'bench'
    config_keys = ('env', 'backend_a', 'backend_b', 'batches', 'runs', 'steps', 'seed',
                   'breakdown', 'breakdown_batch')

    def add_arguments(self, parser):
        super(Command, self).add_arguments(parser)
        parser.add_argument('--env', help='Environment id (pong or cartpole)')
        parser.add_argument('--backend-a', dest='backend_a',
            help='Baseline backend id (default: the reference twin)')
        parser.add_argument('--backend-b', dest='backend_b',
            help='Backend id to sweep (default: the performance twin)')
        parser.add_argument('--batches',
            help='Comma-separated ascending batch sizes (default: TWINGYM_BENCH_BATCHES)')
        parser.add_argument('--runs', type=int,
            help='Timed runs per batch size (default: TWINGYM_BENCH_RUNS)')
        parser.add_argument('--steps', type=int,
            help='Batched steps per run (default: TWINGYM_BENCH_STEPS)')
        parser.add_argument('--seed', type=int,
            help='Base seed (default: TWINGYM_BASE_SEED)')
        parser.add_argument('--breakdown',
            help='Comma-separated synthetic parameter counts for a training-time breakdown')
        parser.add_argument('--breakdown-batch', type=int, dest='breakdown_batch',
            help='Batch size for the breakdown (default: 64)')

    def handle(self, *args, **options):
        self.setup(**options)
        env_id = self.option(options, 'env')
        if env_id is None:
            self.usage_error('Please specify --env')
        try:
            ref_id, perf_id = twin_ids(env_id)
            baseline_backend = get_backend(self.option(options, 'backend_a') or ref_id)
            backend = get_backend(self.option(options, 'backend_b') or perf_id)
        except (UnknownBackend, ConfigurationError) as err:
            self.usage_error(err)

        batches = self.option(options, 'batches', 'TWINGYM_BENCH_BATCHES',
                              [32, 128, 512, 2048, 8192])
        batches = parse_int_list(batches)
        runs = int(self.option(options, 'runs', 'TWINGYM_BENCH_RUNS', 5))
        steps = int(self.option(options, 'steps', 'TWINGYM_BENCH_STEPS', 5000))
        base_seed = int(self.option(options, 'seed', 'TWINGYM_BASE_SEED', 0))
        guard = dict(min_run_seconds=getattr(settings, 'TWINGYM_MIN_RUN_SECONDS', 0.1),
                     cv_threshold=getattr(settings, 'TWINGYM_CV_THRESHOLD', 0.03))

        baseline = self.run_phase(
            'baseline', measure_sps, baseline_backend,
            getattr(settings, 'TWINGYM_BENCH_BASELINE_BATCH', 64),
            getattr(settings, 'TWINGYM_BENCH_BASELINE_STEPS', 200), runs, base_seed,
            **guard)
        pbar = self.get_progressbar('Batch sizes', len(batches))
        reports = self.run_phase('sweep', sweep_batches, backend, batches, steps, runs,
                                 base_seed, progress=pbar.update if pbar else None,
                                 **guard)
        if pbar:
            pbar.finish()
        self.stdout.write(throughput_table(reports, baseline))

        rows = []
        for report in reports:
            row = report.to_dict()
            row['timing']['speedup'] = speedup(report, baseline)
            rows.append(row)
        unstable = [r for r in [baseline] + reports if not r.stable]
        data = {
            'command': 'bench',
            'env': env_id,
            'backend_id': backend.backend_id,
            'baseline': baseline.to_dict(),
            'rows': rows,
        }

        param_counts = self.option(options, 'breakdown')
        if param_counts:
            batch_size = int(self.option(options, 'breakdown_batch', default=64) or 64)
            breakdowns = [self.run_phase('breakdown_%d' % count, measure_breakdown, backend,
                                         batch_size, count, max(1, min(steps, 50)),
                                         base_seed)
                          for count in parse_int_list(param_counts)]
            self.stdout.write(breakdown_table(breakdowns))
            data['breakdown'] = [b.to_dict() for b in breakdowns]

        self.write_report(self.report_path(options, env_id), data, stable=not unstable)
        if unstable:
            self.fail('%d measurement(s) unstable (cv above %g)' %
                      (len(unstable), guard['cv_threshold']), returncode=EXIT_UNSTABLE)

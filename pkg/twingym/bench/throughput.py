'''Steps-per-second measurement: one untimed warm-up run, then ``n_runs``
timed runs of ``steps_per_run`` batched steps driven by pre-generated
random actions.  Finished episodes are reset in place every step.
'''

from dataclasses import dataclass, field
import logging
import time

import numpy as np

from twingym.core.env import ConfigurationError
from twingym.core.rng import derive_stream


logger = logging.getLogger(__name__)

#: a timed run must last at least this long
MIN_RUN_SECONDS = 0.1
#: runs with a higher coefficient of variation are flagged unstable
CV_THRESHOLD = 0.03
#: maximum rows of the pre-generated action block (cycled)
ACTION_ROWS = 1024
#: cap on the action block size in elements
ACTION_BLOCK = 1 << 20


@dataclass
class ThroughputReport:
    backend_id: str
    batch_size: int
    steps_per_run: int
    run_samples: list
    mean_sps: float
    std_sps: float
    cv: float
    warmup_steps: int
    base_seed: int = 0
    cv_threshold: float = CV_THRESHOLD
    #: seconds per timed run
    run_seconds: list = field(default_factory=list)

    @property
    def stable(self):
        return self.cv <= self.cv_threshold

    @property
    def n_runs(self):
        return len(self.run_samples)

    def to_dict(self):
        '''Measured values live in the ``timing`` sub-object.'''
        return {
            'backend_id': self.backend_id,
            'batch_size': self.batch_size,
            'steps_per_run': self.steps_per_run,
            'n_runs': self.n_runs,
            'warmup_steps': self.warmup_steps,
            'base_seed': self.base_seed,
            'cv_threshold': self.cv_threshold,
            'timing': {
                'run_samples': [float(v) for v in self.run_samples],
                'run_seconds': [float(v) for v in self.run_seconds],
                'mean_sps': float(self.mean_sps),
                'std_sps': float(self.std_sps),
                'cv': float(self.cv),
                'stable': self.stable,
            },
        }

    @classmethod
    def from_dict(cls, data):
        timing = data['timing']
        return cls(data['backend_id'], data['batch_size'], data['steps_per_run'],
                   timing['run_samples'], timing['mean_sps'], timing['std_sps'],
                   timing['cv'], data['warmup_steps'], data.get('base_seed', 0),
                   data.get('cv_threshold', CV_THRESHOLD), timing.get('run_seconds', []))


def action_block(action_count, batch_size, steps, base_seed):
    '''Random actions from ``numpy.random.default_rng(base_seed)``, one row
    per step, cycled when ``steps`` exceeds the block.'''
    rows = max(1, min(steps, ACTION_ROWS, ACTION_BLOCK // batch_size))
    rng = np.random.default_rng(base_seed)
    return rng.integers(0, action_count, size=(rows, batch_size), dtype=np.int64)


def prepare(backend, batch_size, base_seed):
    '''Allocate and reset a batch from streams ``0..batch_size-1``.'''
    batch = backend.allocate(batch_size)
    backend.reset_batch(batch, [derive_stream(base_seed, i) for i in range(batch_size)])
    return batch


def run_steps(backend, batch, actions, steps):
    '''The timed loop: ``steps`` batched steps with in-place auto-reset.'''
    rows = len(actions)
    for t in range(steps):
        backend.step_batch(batch, actions[t % rows])
        backend.reset_done(batch)
    return batch


def measure_sps(backend, batch_size, steps_per_run, n_runs=5, base_seed=0,
                timer=time.perf_counter, min_run_seconds=MIN_RUN_SECONDS,
                cv_threshold=CV_THRESHOLD):
    '''Measure environment steps per second, aggregated over the batch.

    :param timer: monotonic clock returning seconds
    :returns: :class:`ThroughputReport`; ``std_sps`` is the sample standard
        deviation
    :raises ConfigurationError: invalid sizes, or a timed run shorter than
        ``min_run_seconds``
    '''
    if batch_size < 1:
        raise ConfigurationError('batch_size must be at least 1, got %r' % batch_size)
    if n_runs < 2:
        raise ConfigurationError('n_runs must be at least 2, got %r' % n_runs)
    if steps_per_run < 1:
        raise ConfigurationError('steps_per_run must be at least 1, got %r' % steps_per_run)

    batch = prepare(backend, batch_size, base_seed)
    actions = action_block(backend.action_count, batch_size, steps_per_run, base_seed)
    run_steps(backend, batch, actions, steps_per_run)

    samples, seconds = [], []
    for _ in range(n_runs):
        start = timer()
        run_steps(backend, batch, actions, steps_per_run)
        elapsed = timer() - start
        if elapsed < min_run_seconds:
            raise ConfigurationError(
                '%s batch %d: run took %.4f s, below the %.3f s timing guard; '
                'increase steps_per_run' % (backend.backend_id, batch_size, elapsed,
                                            min_run_seconds))
        seconds.append(elapsed)
        samples.append(batch_size * steps_per_run / elapsed)

    samples = np.array(samples, dtype=np.float64)
    mean = float(samples.mean())
    std = float(samples.std(ddof=1))
    report = ThroughputReport(backend.backend_id, batch_size, steps_per_run,
                              samples.tolist(), mean, std, std / mean, steps_per_run,
                              base_seed, cv_threshold, seconds)
    if not report.stable:
        logger.warning('%s batch %d unstable: cv %.3f > %.3f', backend.backend_id,
                       batch_size, report.cv, cv_threshold)
    logger.debug('%s batch %d: %.0f +/- %.0f SPS', backend.backend_id, batch_size,
                 mean, std)
    return report


def sweep_batches(backend, batch_sizes, steps_per_run, n_runs=5, base_seed=0,
                  progress=None, **kwargs):
    '''One independent :func:`measure_sps` per batch size.

    :param batch_sizes: non-empty, ascending
    :param progress: optional callable invoked with the number of sizes done
    '''
    batch_sizes = list(batch_sizes)
    if not batch_sizes:
        raise ConfigurationError('batch_sizes must not be empty')
    if any(b >= c for b, c in zip(batch_sizes, batch_sizes[1:])):
        raise ConfigurationError('batch_sizes must be ascending, got %s' % batch_sizes)
    reports = []
    for count, batch_size in enumerate(batch_sizes, 1):
        reports.append(measure_sps(backend, batch_size, steps_per_run, n_runs,
                                   base_seed, **kwargs))
        if progress is not None:
            progress(count)
    return reports

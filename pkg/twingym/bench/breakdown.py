'''Training-time breakdown: environment stepping against a synthetic policy
cost of ``synthetic_param_count`` multiply-adds per environment instance
per step.

The policy cost is a float32 ``k x k`` weight matrix (``k`` at most 1024)
applied ``ceil(P / k**2)`` times to a ``k x batch`` activation block,
written into a pre-allocated buffer.
'''

from dataclasses import dataclass
import logging
import math
import time

import numpy as np

from twingym.bench.throughput import action_block, prepare
from twingym.core.env import ConfigurationError


logger = logging.getLogger(__name__)

MAX_WIDTH = 1024


@dataclass
class BreakdownReport:
    backend_id: str
    batch_size: int
    synthetic_param_count: int
    steps: int
    width: int
    reps: int
    env_seconds: float
    policy_seconds: float

    @property
    def env_time_fraction(self):
        total = self.env_seconds + self.policy_seconds
        if total <= 0:
            return 0.0
        return self.env_seconds / total

    @property
    def policy_time_fraction(self):
        return 1.0 - self.env_time_fraction

    def to_dict(self):
        return {
            'backend_id': self.backend_id,
            'batch_size': self.batch_size,
            'synthetic_param_count': self.synthetic_param_count,
            'steps': self.steps,
            'width': self.width,
            'reps': self.reps,
            'timing': {
                'env_seconds': self.env_seconds,
                'policy_seconds': self.policy_seconds,
                'env_time_fraction': self.env_time_fraction,
                'policy_time_fraction': self.policy_time_fraction,
            },
        }


def synthetic_shape(param_count):
    '''``(k, reps)`` with ``k = min(isqrt(P), 1024)`` and
    ``reps = ceil(P / k**2)``.'''
    width = max(1, min(math.isqrt(param_count), MAX_WIDTH))
    return width, -(-param_count // (width * width))


def measure_breakdown(backend, batch_size, synthetic_param_count, steps, base_seed=0,
                      timer=time.perf_counter):
    '''Alternate a batched environment step and the synthetic policy cost,
    timing each phase separately.

    :raises ConfigurationError: ``synthetic_param_count < 1``, ``steps < 1``
        or ``batch_size < 1``
    '''
    if synthetic_param_count < 1:
        raise ConfigurationError('synthetic_param_count must be at least 1, got %r'
                                 % synthetic_param_count)
    if steps < 1 or batch_size < 1:
        raise ConfigurationError('steps and batch_size must be at least 1')
    width, reps = synthetic_shape(int(synthetic_param_count))
    rng = np.random.default_rng(base_seed)
    weights = rng.standard_normal((width, width)).astype(np.float32)
    # keep the activations bounded so repeated products stay finite
    weights /= np.float32(width)
    activations = rng.standard_normal((width, batch_size)).astype(np.float32)
    out = np.empty_like(activations)

    batch = prepare(backend, batch_size, base_seed)
    actions = action_block(backend.action_count, batch_size, steps, base_seed)
    rows = len(actions)
    env_seconds = policy_seconds = 0.0
    for t in range(steps):
        start = timer()
        backend.step_batch(batch, actions[t % rows])
        backend.reset_done(batch)
        middle = timer()
        for _ in range(reps):
            np.matmul(weights, activations, out=out)
        end = timer()
        env_seconds += middle - start
        policy_seconds += end - middle

    report = BreakdownReport(backend.backend_id, batch_size, int(synthetic_param_count),
                             steps, width, reps, env_seconds, policy_seconds)
    logger.debug('%s batch %d, %d params: env fraction %.3f', backend.backend_id,
                 batch_size, synthetic_param_count, report.env_time_fraction)
    return report

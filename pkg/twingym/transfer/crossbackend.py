'''Level 4: train (or select) a policy on one twin, evaluate it on both
with matched seeds, and test the two return samples for equivalence.'''

from dataclasses import dataclass, field
import logging

import numpy as np

from twingym.core.env import ComparisonMode, ConfigurationError
from twingym.envs.registry import check_schemas
from twingym.transfer.cem import train_cem
from twingym.transfer.evaluation import evaluate_policy
from twingym.transfer.policies import Policy, TrackerPolicy
from twingym.transfer.tost import tost_equivalence
from twingym.verify.rollout import compare_rollouts


logger = logging.getLogger(__name__)

TRAIN_ON = ('ref', 'perf')
POLICIES = ('cem', 'tracker')

NOT_EQUIVALENT_HINT = ('Returns differ across backends beyond the margin: look for '
                       'state-distribution differences the rollout comparison did not '
                       'reach, and add targeted L1/L2 tests for them.')


@dataclass
class TransferRow:
    '''One training direction.'''
    train_on: str
    train_backend: str
    eval_backend: str
    policy: dict
    eval_ref: list = field(default_factory=list)
    eval_perf: list = field(default_factory=list)
    tost: object = None
    failed_gate: str = None
    divergence: dict = None

    @property
    def equivalent(self):
        return self.failed_gate is None and self.tost is not None and self.tost.equivalent

    @property
    def bit_identical(self):
        return (self.failed_gate is None and
                np.array_equal(np.asarray(self.eval_ref), np.asarray(self.eval_perf)))

    @property
    def gap(self):
        '''Mean return on the training backend minus mean on the other.'''
        if self.failed_gate is not None:
            return None
        train, other = ((self.eval_ref, self.eval_perf) if self.train_on == 'ref'
                        else (self.eval_perf, self.eval_ref))
        return float(np.mean(train) - np.mean(other))

    def to_dict(self):
        data = {
            'train_on': self.train_on,
            'train_backend': self.train_backend,
            'eval_backend': self.eval_backend,
            'policy': self.policy,
            'equivalent': self.equivalent,
        }
        if self.failed_gate is not None:
            data.update(failed_gate=self.failed_gate, divergence=self.divergence)
            return data
        data.update(
            eval_ref=[float(v) for v in self.eval_ref],
            eval_perf=[float(v) for v in self.eval_perf],
            eval_ref_mean=float(np.mean(self.eval_ref)),
            eval_ref_std=float(np.std(self.eval_ref, ddof=1)),
            eval_perf_mean=float(np.mean(self.eval_perf)),
            eval_perf_std=float(np.std(self.eval_perf, ddof=1)),
            bit_identical=self.bit_identical,
            gap=self.gap,
            tost=self.tost.to_dict(),
        )
        if not self.equivalent:
            data['hint'] = NOT_EQUIVALENT_HINT
        return data


def select_policy(policy, backend, base_seed, cem_options=None, workers=1, progress=None):
    '''The policy to transfer: an instance, ``'tracker'`` or ``'cem'``
    (trained on ``backend``).'''
    if isinstance(policy, Policy):
        return policy
    if policy == 'tracker':
        if backend.env_id != 'pong':
            raise ConfigurationError('The tracker policy only drives pong')
        return TrackerPolicy()
    if policy in (None, 'cem'):
        options = dict(cem_options or {})
        options.setdefault('seed', base_seed)
        return train_cem(backend, workers=workers, progress=progress, **options)
    raise ConfigurationError('Unknown policy %r (known: %s)' % (policy, ', '.join(POLICIES)))


def cross_backend_transfer(env_ref, env_perf, train_on, config, n_seeds=10, base_seed=0,
                           policy='cem', episodes=20, cem_options=None,
                           pregate_episodes=0, mode=None, workers=1, progress=None):
    '''Train on one twin, evaluate on both, run the TOST.

    :param train_on: ``ref`` or ``perf``
    :param config: :class:`~twingym.transfer.tost.TostConfig`
    :param policy: :class:`~twingym.transfer.policies.Policy`, ``'tracker'``
        or ``'cem'``
    :param episodes: evaluation episodes per seed
    :param cem_options: keyword arguments for
        :func:`~twingym.transfer.cem.train_cem`
    :param pregate_episodes: if positive, first run a level 3 comparison of
        that many episodes under ``mode`` and stop on divergence
    :returns: :class:`TransferRow`
    :raises ConfigurationError: schema mismatch or unknown ``train_on``
    '''
    check_schemas(env_ref, env_perf)
    if train_on not in TRAIN_ON:
        raise ConfigurationError('train_on must be one of %s, got %r' %
                                 (', '.join(TRAIN_ON), train_on))
    train_backend, eval_backend = ((env_ref, env_perf) if train_on == 'ref'
                                   else (env_perf, env_ref))

    if pregate_episodes > 0:
        result = compare_rollouts(env_ref, env_perf, pregate_episodes, base_seed,
                                  mode or ComparisonMode.exact(), workers=workers)
        if not result.passed:
            logger.info('transfer pre-gate failed: %s vs %s diverged at step %d',
                        env_ref.backend_id, env_perf.backend_id, result.step_index)
            return TransferRow(train_on, train_backend.backend_id, eval_backend.backend_id,
                               {'kind': policy if isinstance(policy, str) else policy.kind},
                               failed_gate='L3', divergence=result.to_dict())

    chosen = select_policy(policy, train_backend, base_seed, cem_options, workers, progress)
    eval_ref = evaluate_policy(env_ref, chosen, n_seeds, base_seed, episodes, workers)
    eval_perf = evaluate_policy(env_perf, chosen, n_seeds, base_seed, episodes, workers)
    samples_train, samples_other = ((eval_ref, eval_perf) if train_on == 'ref'
                                    else (eval_perf, eval_ref))
    row = TransferRow(train_on, train_backend.backend_id, eval_backend.backend_id,
                      chosen.to_dict(), eval_ref, eval_perf,
                      tost_equivalence(samples_train, samples_other, config))
    logger.info('trained on %s: ref %.2f, perf %.2f, equivalent=%s',
                train_backend.backend_id, float(np.mean(eval_ref)),
                float(np.mean(eval_perf)), row.equivalent)
    return row

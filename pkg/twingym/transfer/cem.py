'''Cross-entropy method over :class:`~twingym.transfer.policies.LinearPolicy`
parameters.'''

from concurrent.futures import ProcessPoolExecutor
import logging

import numpy as np

from twingym.core.env import ConfigurationError
from twingym.core.rng import MASK64, derive_stream, splitmix_mix
from twingym.transfer.evaluation import batch_returns, stream_returns
from twingym.transfer.policies import LinearPolicy, PopulationLinearPolicy


logger = logging.getLogger(__name__)

#: floor on the per-parameter sampling std
MIN_STD = 1e-3


class TrainingError(Exception):
    '''Training produced unusable returns (NaN).'''
    pass


def generation_streams(seed, generation, episodes):
    '''Common evaluation streams shared by every candidate of a
    generation.'''
    base = splitmix_mix((int(seed) ^ int(generation)) & MASK64)
    return [derive_stream(base, k) for k in range(episodes)]


def _candidate_score(args):
    backend, params, streams = args
    policy = LinearPolicy(params, backend.obs_len, backend.action_count)
    return np.mean([stream_returns(backend, policy, stream, 1)[0] for stream in streams])


def score_population(backend, population, streams, workers=1):
    '''Mean return of every candidate over one episode per stream.

    Batched backends step the whole population times the streams as a single
    batch; scalar backends evaluate candidates one by one, on a process pool
    if ``workers > 1``.

    :param population: ``(P, n_params)`` float32 array
    :returns: float64 vector of length ``P``
    '''
    count, episodes = len(population), len(streams)
    if backend.vectorized:
        policy = PopulationLinearPolicy(np.repeat(population, episodes, axis=0),
                                        backend.obs_len, backend.action_count)
        returns = batch_returns(backend, policy, list(streams) * count, 1)
        return returns.reshape(count, episodes).mean(axis=1)
    jobs = [(backend, params, streams) for params in population]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            scores = list(executor.map(_candidate_score, jobs))
    else:
        scores = [_candidate_score(job) for job in jobs]
    return np.array(scores, dtype=np.float64)


def train_cem(backend, generations=30, population=64, elite_frac=0.125, seed=0,
              episodes=20, min_std=MIN_STD, workers=1, progress=None):
    '''Train a linear policy on ``backend`` with the cross-entropy method.

    Each generation samples ``population`` parameter vectors from a
    diagonal Gaussian (initially mean 0, std 1), scores each by its mean
    return over ``episodes`` common streams, and refits mean and std to the
    top ``round(population * elite_frac)`` candidates.  Fully deterministic
    given ``seed``.

    :param progress: optional callable invoked with each finished
        generation number
    :returns: :class:`LinearPolicy` at the final mean
    :raises ConfigurationError: ``population < 4`` or ``elite_frac``
        outside ``(0, 0.5]``
    :raises TrainingError: if a candidate's return is NaN
    '''
    if population < 4:
        raise ConfigurationError('population must be at least 4, got %r' % population)
    if not 0 < elite_frac <= 0.5:
        raise ConfigurationError('elite_frac must be in (0, 0.5], got %r' % elite_frac)
    if generations < 0:
        raise ConfigurationError('generations must be nonnegative, got %r' % generations)

    obs_len, action_count = backend.obs_len, backend.action_count
    size = (obs_len + 1) * action_count
    n_elite = max(1, int(round(population * elite_frac)))
    rng = np.random.default_rng(seed)
    mean = np.zeros(size, dtype=np.float64)
    std = np.ones(size, dtype=np.float64)

    for generation in range(generations):
        candidates = (mean + std * rng.standard_normal((population, size))).astype(np.float32)
        scores = score_population(backend, candidates,
                                  generation_streams(seed, generation, episodes), workers)
        if np.isnan(scores).any():
            raise TrainingError('NaN return in generation %d on %s' %
                                (generation, backend.backend_id))
        # stable: equal scores keep candidate order
        elite = candidates[np.argsort(-scores, kind='stable')[:n_elite]].astype(np.float64)
        mean = elite.mean(axis=0)
        std = np.maximum(elite.std(axis=0), min_std)
        logger.debug('%s generation %d: best %.2f, elite mean %.2f', backend.backend_id,
                     generation, scores.max(), np.sort(scores)[-n_elite:].mean())
        if progress is not None:
            progress(generation + 1)

    return LinearPolicy(mean.astype(np.float32), obs_len, action_count)

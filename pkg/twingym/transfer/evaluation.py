'''Matched-seed policy evaluation.

Stream ``i`` starts from ``derive_stream(base_seed, i)`` and runs a fixed
number of consecutive episodes; each episode after the first resets from
the rng of the previous episode's final state.  Episode returns are summed
in float64, step by step, so scalar and batched backends that agree on
rewards produce identical returns.
'''

from concurrent.futures import ProcessPoolExecutor
import logging

import numpy as np

from twingym.core.env import ConfigurationError
from twingym.core.rng import derive_stream


logger = logging.getLogger(__name__)


def stream_returns(backend, policy, stream, episodes):
    '''Returns of ``episodes`` consecutive episodes on a scalar backend.'''
    returns = np.zeros(episodes, dtype=np.float64)
    state, observation = backend.reset(stream)
    for episode in range(episodes):
        if episode:
            state, observation = backend.reset(state.rng)
        total = 0.0
        done = False
        while not done:
            state, outcome = backend.step(state, policy.act(observation))
            observation, done = outcome.observation, outcome.done
            total += float(outcome.reward)
        returns[episode] = total
    return returns


def batch_returns(backend, policy, streams, episodes):
    '''Returns of ``episodes`` consecutive episodes per stream, all streams
    stepped as one batch; finished elements are reset in place with
    :meth:`~twingym.core.env.EnvBackend.reset_done`.

    :param policy: batch-acting policy with one row per stream
    :returns: ``(len(streams), episodes)`` float64 array
    '''
    size = len(streams)
    batch = backend.allocate(size)
    backend.reset_batch(batch, streams)
    returns = np.zeros((size, episodes), dtype=np.float64)
    totals = np.zeros(size, dtype=np.float64)
    completed = np.zeros(size, dtype=np.int64)
    active = np.ones(size, dtype=bool)
    actions = np.empty(size, dtype=np.int64)
    while active.any():
        policy.act_batch(batch.obs, out=actions)
        backend.step_batch(batch, actions)
        np.add(totals, batch.rewards, out=totals, where=active)
        for i in np.flatnonzero(batch.dones & active):
            returns[i, completed[i]] = totals[i]
            completed[i] += 1
            totals[i] = 0.0
        np.less(completed, episodes, out=active)
        backend.reset_done(batch)
    return returns


def _stream_job(args):
    backend, policy, stream, episodes = args
    return stream_returns(backend, policy, stream, episodes)


def episode_returns(backend, policy, n_streams, base_seed, episodes, workers=1):
    '''Episode returns for streams ``0..n_streams-1``.

    Random policies are bound to their own stream per index (see
    :meth:`~twingym.transfer.policies.Policy.for_stream`).

    :returns: ``(n_streams, episodes)`` float64 array
    '''
    indices = range(n_streams)
    streams = [derive_stream(base_seed, i) for i in indices]
    if backend.vectorized:
        return batch_returns(backend, policy.for_streams(base_seed, indices),
                             streams, episodes)
    jobs = [(backend, policy.for_stream(base_seed, i), streams[i], episodes)
            for i in indices]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_stream_job, jobs))
    else:
        rows = [_stream_job(job) for job in jobs]
    return np.array(rows, dtype=np.float64).reshape(n_streams, episodes)


def evaluate_policy(backend, policy, n_seeds, base_seed, episodes=20, workers=1):
    '''Per-seed mean episode return of ``policy`` on ``backend``.

    :param n_seeds: number of seed streams, at least 2
    :param episodes: episodes per seed stream
    :returns: float64 vector of length ``n_seeds``
    :raises ConfigurationError: if ``n_seeds < 2`` or ``episodes < 1``
    '''
    if n_seeds < 2:
        raise ConfigurationError('n_seeds must be at least 2, got %r' % n_seeds)
    if episodes < 1:
        raise ConfigurationError('episodes must be at least 1, got %r' % episodes)
    returns = episode_returns(backend, policy, n_seeds, base_seed, episodes, workers)
    means = np.array([np.mean(row) for row in returns], dtype=np.float64)
    logger.debug('%s: %d seeds x %d episodes, mean return %.3f', backend.backend_id,
                 n_seeds, episodes, float(np.mean(means)))
    return means

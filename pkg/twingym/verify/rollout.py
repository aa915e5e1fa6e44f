'''Level 3: matched-seed rollout comparison and divergence reports.

Episode ``i`` resets both backends from ``derive_stream(base_seed, i)``.
The action source acts on backend A's observations; backend B replays the
recorded actions.  Step 0 is the reset observation, step ``k >= 1`` is the
``k``-th transition.  Comparison halts at the first mismatching step.
'''

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging

import numpy as np

from twingym.core.env import ComparisonMode, ConfigurationError
from twingym.core.rng import derive_stream
from twingym.envs.registry import check_schemas
from twingym.transfer.policies import RandomPolicy


logger = logging.getLogger(__name__)


@dataclass
class RolloutTrace:
    '''Per-step record of one episode.

    ``observations`` has one more row than ``actions``: row 0 is the reset
    observation.  ``states`` maps each state field to its value after every
    step (index 0 is the reset state); the rng is stored as its counter.
    '''
    backend_id: str
    episode_index: int
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    states: dict = field(repr=False)

    def __len__(self):
        return len(self.actions)

    def state(self, step):
        '''Serialized state after ``step`` (0 is the reset state).'''
        data = {}
        for name, column in self.states.items():
            value = column[step]
            if name == 'rng':
                data[name] = int(value)
            elif column.dtype.kind == 'f':
                data[name] = float(value)
            else:
                data[name] = int(value)
        return data


def record_trace(backend, stream, policy, episode_index=0, actions=None):
    '''Run one episode on ``backend``.

    :param policy: action source acting on this backend's observations;
        ignored when ``actions`` is given
    :param actions: optional action sequence to replay instead; replay runs
        the whole sequence whatever the done flags say
    '''
    state, observation = backend.reset(stream)
    observations, rewards, dones, taken = [observation], [], [], []
    states = [backend.state_to_dict(state)]
    done = False
    step = 0
    while (not done) if actions is None else step < len(actions):
        action = policy.act(observation) if actions is None else int(actions[step])
        state, outcome = backend.step(state, action)
        observation, done = outcome.observation, outcome.done
        observations.append(observation)
        rewards.append(outcome.reward)
        dones.append(done)
        taken.append(action)
        states.append(backend.state_to_dict(state))
        step += 1
    return RolloutTrace(
        backend.backend_id, episode_index,
        np.array(observations, dtype=np.float32).reshape(-1, backend.obs_len),
        np.array(taken, dtype=np.int64),
        np.array(rewards, dtype=np.float32),
        np.array(dones, dtype=bool),
        state_columns(backend, states))


def state_columns(backend, states):
    columns = {}
    for name in backend.state_fields:
        values = [s[name] for s in states]
        if name == 'rng':
            columns[name] = np.array(values, dtype=np.uint64)
        elif name in backend.float_fields:
            columns[name] = np.array(values, dtype=np.float32)
        else:
            columns[name] = np.array(values, dtype=np.int64)
    return columns


def replay_batch(backend, streams, action_sequences, episode_indices):
    '''Replay one action sequence per episode on a batched backend, all
    episodes in a single batch.  Returns a trace per episode.'''
    size = len(streams)
    batch = backend.allocate(size)
    backend.reset_batch(batch, streams)
    lengths = [len(seq) for seq in action_sequences]
    horizon = max(lengths) if lengths else 0
    padded = np.zeros((horizon, size), dtype=np.int64)
    for i, seq in enumerate(action_sequences):
        padded[:len(seq), i] = seq

    observations = np.empty((horizon + 1, size, backend.obs_len), dtype=np.float32)
    rewards = np.empty((horizon, size), dtype=np.float32)
    dones = np.empty((horizon, size), dtype=bool)
    snapshots = dict((name, np.empty((horizon + 1, size), dtype=column.dtype))
                     for name, column in batch.state.items())
    observations[0] = batch.obs
    for name, column in batch.state.items():
        snapshots[name][0] = column
    for t in range(horizon):
        backend.step_batch(batch, padded[t])
        observations[t + 1] = batch.obs
        rewards[t] = batch.rewards
        dones[t] = batch.dones
        for name, column in batch.state.items():
            snapshots[name][t + 1] = column

    traces = []
    for i, length in enumerate(lengths):
        traces.append(RolloutTrace(
            backend.backend_id, episode_indices[i],
            observations[:length + 1, i].copy(), padded[:length, i].copy(),
            rewards[:length, i].copy(), dones[:length, i].copy(),
            dict((name, column[:length + 1, i].copy()) for name, column in snapshots.items())))
    return traces


@dataclass
class DivergenceReport:
    '''First mismatch between two backends under matched seeds and actions.

    ``last_matching_state`` (backend A) and ``last_matching_state_b`` are
    the serialized states after step ``step_index - 1``; both are ``None``
    when the reset observations already differ.
    '''
    episode_index: int
    step_index: int
    field_path: str
    value_a: object
    value_b: object
    last_matching_state: dict
    action_taken: int
    backend_a: str
    backend_b: str
    mode: ComparisonMode
    base_seed: int
    last_matching_state_b: dict = None
    #: every mismatching field at the diverging step
    diffs: list = field(default_factory=list)

    passed = False

    @property
    def matched_steps(self):
        return self.step_index

    def to_dict(self):
        return {
            'status': 'fail',
            'episode_index': self.episode_index,
            'step_index': self.step_index,
            'field_path': self.field_path,
            'value_a': self.value_a,
            'value_b': self.value_b,
            'last_matching_state': self.last_matching_state,
            'last_matching_state_b': self.last_matching_state_b,
            'action_taken': self.action_taken,
            'backend_a': self.backend_a,
            'backend_b': self.backend_b,
            'mode': self.mode.to_dict(),
            'base_seed': self.base_seed,
            'matched_steps': self.matched_steps,
            'diffs': self.diffs,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data['episode_index'], data['step_index'], data['field_path'],
                   data['value_a'], data['value_b'], data['last_matching_state'],
                   data['action_taken'], data['backend_a'], data['backend_b'],
                   ComparisonMode.from_dict(data['mode']), data['base_seed'],
                   data.get('last_matching_state_b'), data.get('diffs', []))


@dataclass
class RolloutPass:
    '''Every compared step of every episode matched.'''
    backend_a: str
    backend_b: str
    episodes: int
    steps: int
    mode: ComparisonMode
    base_seed: int

    passed = True

    def to_dict(self):
        return {
            'status': 'pass',
            'backend_a': self.backend_a,
            'backend_b': self.backend_b,
            'episodes': self.episodes,
            'steps': self.steps,
            'mode': self.mode.to_dict(),
            'base_seed': self.base_seed,
        }


def step_diffs(backend, mode, obs_a, obs_b, reward_a, reward_b, done_a, done_b):
    '''Mismatching fields of one step: observation components in order,
    then reward, then done.'''
    diffs = []
    for j in np.flatnonzero(mode.mismatches(obs_a, obs_b)):
        diffs.append({'field': 'observation.%s' % backend.obs_fields[j],
                      'value_a': float(obs_a[j]), 'value_b': float(obs_b[j])})
    if not mode.matches(reward_a, reward_b):
        diffs.append({'field': 'reward', 'value_a': float(reward_a),
                      'value_b': float(reward_b)})
    if bool(done_a) != bool(done_b):
        diffs.append({'field': 'done', 'value_a': bool(done_a), 'value_b': bool(done_b)})
    return diffs


def first_divergence(backend, trace_a, trace_b, mode):
    '''Index of the first mismatching step between two traces of the same
    episode (same action sequence) and the mismatching fields there, or
    ``(None, [])``.'''
    bad = mode.mismatches(trace_a.observations, trace_b.observations).any(axis=1)
    bad[1:] |= mode.mismatches(trace_a.rewards, trace_b.rewards)
    bad[1:] |= trace_a.dones != trace_b.dones
    hits = np.flatnonzero(bad)
    if not len(hits):
        return None, []
    k = int(hits[0])
    if k == 0:
        return k, step_diffs(backend, mode, trace_a.observations[0],
                             trace_b.observations[0], 0, 0, False, False)
    return k, step_diffs(backend, mode, trace_a.observations[k], trace_b.observations[k],
                         trace_a.rewards[k - 1], trace_b.rewards[k - 1],
                         trace_a.dones[k - 1], trace_b.dones[k - 1])


class RandomActions(object):
    '''Default level 3 action source: a :class:`RandomPolicy` on
    ``action_stream(base_seed, episode)``.'''

    def __init__(self, action_count, base_seed):
        self.action_count = action_count
        self.base_seed = base_seed

    def __call__(self, episode):
        return RandomPolicy(self.action_count).for_stream(self.base_seed, episode)


def _record_episode(args):
    backend, base_seed, episode, policy_source = args
    return record_trace(backend, derive_stream(base_seed, episode),
                        policy_source(episode), episode_index=episode)


def compare_rollouts(env_a, env_b, episodes, base_seed, mode, policy=None, workers=1):
    '''Level 3 comparison of two backends.

    :param policy: callable ``episode -> policy`` giving the action source
        for each episode; defaults to :class:`RandomActions`
    :param workers: processes used to record backend A's episodes
    :returns: :class:`RolloutPass` or the :class:`DivergenceReport` of the
        lowest-index diverging episode
    :raises ConfigurationError: on schema mismatch or ``episodes < 1``,
        before any episode runs
    '''
    check_schemas(env_a, env_b)
    if episodes < 1:
        raise ConfigurationError('episodes must be at least 1, got %r' % episodes)
    policy = policy or RandomActions(env_a.action_count, base_seed)

    jobs = [(env_a, base_seed, i, policy) for i in range(episodes)]
    if workers and workers > 1 and not env_a.vectorized:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            traces_a = list(executor.map(_record_episode, jobs))
    else:
        traces_a = [_record_episode(job) for job in jobs]

    streams = [derive_stream(base_seed, i) for i in range(episodes)]
    if env_b.vectorized:
        traces_b = replay_batch(env_b, streams, [t.actions for t in traces_a],
                                list(range(episodes)))
    else:
        traces_b = [record_trace(env_b, streams[i], None, episode_index=i,
                                 actions=traces_a[i].actions)
                    for i in range(episodes)]

    steps = 0
    for trace_a, trace_b in zip(traces_a, traces_b):
        k, diffs = first_divergence(env_a, trace_a, trace_b, mode)
        if k is not None:
            first = diffs[0]
            report = DivergenceReport(
                episode_index=trace_a.episode_index,
                step_index=k,
                field_path=first['field'],
                value_a=first['value_a'],
                value_b=first['value_b'],
                last_matching_state=trace_a.state(k - 1) if k else None,
                action_taken=int(trace_a.actions[k - 1]) if 0 < k <= len(trace_a) else None,
                backend_a=env_a.backend_id,
                backend_b=env_b.backend_id,
                mode=mode,
                base_seed=base_seed,
                last_matching_state_b=trace_b.state(k - 1) if k else None,
                diffs=diffs)
            logger.info('%s vs %s diverged: episode %d step %d field %s',
                        env_a.backend_id, env_b.backend_id, report.episode_index,
                        k, report.field_path)
            return report
        steps += len(trace_a)
    logger.debug('%s vs %s: %d episodes, %d steps matched', env_a.backend_id,
                 env_b.backend_id, episodes, steps)
    return RolloutPass(env_a.backend_id, env_b.backend_id, episodes, steps, mode,
                       base_seed)


def replay_divergence(env_a, env_b, report):
    '''Re-execute the diverging step from the report's last matching
    states.  Returns the mismatching fields (``field``, ``value_a``,
    ``value_b``) of that single step; a step-0 divergence replays the
    reset.'''
    mode = report.mode
    if report.step_index == 0:
        stream = derive_stream(report.base_seed, report.episode_index)
        _, obs_a = env_a.reset(stream)
        _, obs_b = env_b.reset(stream)
        reward_a = reward_b = np.float32(0.0)
        done_a = done_b = False
    else:
        state_a = env_a.state_from_dict(report.last_matching_state)
        state_b = env_b.state_from_dict(report.last_matching_state_b or
                                        report.last_matching_state)
        _, out_a = env_a.step(state_a, report.action_taken)
        _, out_b = env_b.step(state_b, report.action_taken)
        obs_a, obs_b = out_a.observation, out_b.observation
        reward_a, reward_b = out_a.reward, out_b.reward
        done_a, done_b = out_a.done, out_b.done
    return step_diffs(env_a, mode, obs_a, obs_b, reward_a, reward_b, done_a, done_b)

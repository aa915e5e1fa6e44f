'''Static registry of backends addressed by id.'''

from collections import OrderedDict
import functools
import logging

from twingym.core.env import ConfigurationError
from twingym.envs import cartpole, mutants, pong


logger = logging.getLogger(__name__)


class UnknownBackend(ConfigurationError):
    '''No backend is registered under the requested id.'''
    pass


BACKENDS = OrderedDict([
    ('pong-ref', pong.PongReference),
    ('pong-perf', pong.PongVector),
    ('cartpole-ref', cartpole.CartPoleReference),
    ('cartpole-perf', cartpole.CartPoleVector),
    ('cartpole-perf-ordered', functools.partial(cartpole.CartPoleVector, ordered=True)),
])
BACKENDS.update((cls.backend_id, cls) for cls in mutants.MUTANTS)

#: (reference, performance) backend ids per environment
TWINS = OrderedDict([
    ('pong', ('pong-ref', 'pong-perf')),
    ('cartpole', ('cartpole-ref', 'cartpole-perf')),
])


def backend_ids():
    return list(BACKENDS.keys())


def env_ids():
    return list(TWINS.keys())


def get_backend(backend_id, pool=None):
    '''Instantiate the backend registered as ``backend_id``.

    :param pool: optional :class:`~twingym.core.parallel.ChunkPool` for
        batched backends
    :raises UnknownBackend: if the id is not registered
    '''
    try:
        factory = BACKENDS[backend_id]
    except KeyError:
        raise UnknownBackend('Unknown backend id %r (known: %s)' %
                             (backend_id, ', '.join(BACKENDS)))
    backend = factory()
    if pool is not None and backend.vectorized:
        backend.pool = pool
    return backend


def twin_ids(env_id):
    '''Reference and performance backend ids for ``env_id``.'''
    try:
        return TWINS[env_id]
    except KeyError:
        raise ConfigurationError('Unknown environment %r (known: %s)' %
                                 (env_id, ', '.join(TWINS)))


def check_schemas(backend_a, backend_b):
    '''Raise :class:`ConfigurationError` unless both backends expose the same
    observation, action and state layout.'''
    schema_a, schema_b = backend_a.schema(), backend_b.schema()
    if schema_a != schema_b:
        mismatched = sorted(k for k in schema_a if schema_a[k] != schema_b.get(k))
        raise ConfigurationError('Schema mismatch between %s and %s (%s)' %
                                 (backend_a.backend_id, backend_b.backend_id,
                                  ', '.join(mismatched)))

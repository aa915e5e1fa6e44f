'''Level 3 gate artifacts: written by ``verify`` after a passing rollout
comparison, required by ``transfer`` unless forced.'''

import json
import logging
import os

from twingym.utils import write_json


logger = logging.getLogger(__name__)


def gate_path(gate_dir, env_id, backend_a, backend_b):
    return os.path.join(gate_dir, '%s--%s--%s.json' % (env_id, backend_a, backend_b))


def write_gate(gate_dir, env_id, result):
    '''Record a passing :class:`~twingym.verify.rollout.RolloutPass`.'''
    path = gate_path(gate_dir, env_id, result.backend_a, result.backend_b)
    data = dict(result.to_dict(), env=env_id, level='L3')
    write_json(path, data)
    logger.info('L3 gate recorded at %s', path)
    return path


def read_gate(gate_dir, env_id, backend_a, backend_b):
    '''The gate artifact for the pair, or ``None`` if absent or not a pass.'''
    path = gate_path(gate_dir, env_id, backend_a, backend_b)
    try:
        with open(path) as gatefile:
            data = json.load(gatefile)
    except (IOError, OSError, ValueError):
        return None
    if data.get('status') != 'pass':
        return None
    return data

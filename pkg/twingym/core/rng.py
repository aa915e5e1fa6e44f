'''Deterministic splitmix64 streams shared by every backend.

Scalar functions operate on :class:`RngState` values; the ``*_batch``
variants operate on ``uint64`` numpy arrays of counters and produce
bit-identical results element by element, so a batched backend and a scalar
backend that start from the same stream draw the same numbers.
'''

from dataclasses import dataclass

import numpy as np


MASK64 = (1 << 64) - 1

#: splitmix64 increment (golden ratio)
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

#: 2**-24 as a float32; uniform draws use the top 24 bits of an output
UNIFORM_SCALE = np.float32(1.0 / (1 << 24))

_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX1 = np.uint64(MIX1)
_U_MIX2 = np.uint64(MIX2)
_U_30 = np.uint64(30)
_U_27 = np.uint64(27)
_U_31 = np.uint64(31)
_U_40 = np.uint64(40)


@dataclass(frozen=True)
class RngState:
    '''Stream state: a single unsigned 64-bit counter.'''
    counter: int

    def __post_init__(self):
        object.__setattr__(self, 'counter', int(self.counter) & MASK64)


def splitmix_mix(z):
    '''The splitmix64 output finalizer; a bijection on 64-bit integers.'''
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def rng_next(state):
    '''Advance a stream by one step.

    :param state: :class:`RngState`
    :returns: tuple of the next :class:`RngState` and a 64-bit output
    '''
    counter = (state.counter + GOLDEN) & MASK64
    return RngState(counter), splitmix_mix(counter)


def rng_uniform(state):
    '''Uniform draw in [0, 1) from the top 24 bits of :func:`rng_next`.

    :returns: tuple of the next :class:`RngState` and a ``numpy.float32``
    '''
    state, output = rng_next(state)
    return state, np.float32(output >> 40) * UNIFORM_SCALE


def derive_stream(base_seed, env_index):
    '''Per-instance stream for environment ``env_index`` under ``base_seed``.

    Distinct indices give distinct counters: the golden-ratio multiplier is
    odd (so invertible modulo 2**64), and the xor and the finalizer are both
    bijections.
    '''
    offset = (GOLDEN * ((int(env_index) & 0xFFFFFFFF) + 1)) & MASK64
    return RngState(splitmix_mix((int(base_seed) & MASK64) ^ offset))


def counters(streams):
    '''Pack a sequence of :class:`RngState` into a ``uint64`` array.'''
    return np.array([s.counter for s in streams], dtype=np.uint64)


def rng_next_batch(counter, out=None, scratch=None):
    '''Advance every counter in ``counter`` (in place) and return outputs.

    :param counter: ``uint64`` array of stream counters; updated in place
    :param out: optional ``uint64`` buffer for the outputs
    :param scratch: optional ``uint64`` buffer of the same length
    :returns: ``out``
    '''
    if out is None:
        out = np.empty_like(counter)
    if scratch is None:
        scratch = np.empty_like(counter)
    np.add(counter, _U_GOLDEN, out=counter)
    np.right_shift(counter, _U_30, out=scratch)
    np.bitwise_xor(counter, scratch, out=out)
    np.multiply(out, _U_MIX1, out=out)
    np.right_shift(out, _U_27, out=scratch)
    np.bitwise_xor(out, scratch, out=out)
    np.multiply(out, _U_MIX2, out=out)
    np.right_shift(out, _U_31, out=scratch)
    np.bitwise_xor(out, scratch, out=out)
    return out


def rng_uniform_batch(counter, out=None, bits=None, scratch=None):
    '''Batched :func:`rng_uniform`; advances ``counter`` in place.

    :param out: optional ``float32`` buffer for the uniform draws
    :param bits: optional ``uint64`` buffer for the raw outputs
    :param scratch: optional ``uint64`` buffer
    :returns: ``out``
    '''
    if out is None:
        out = np.empty(counter.shape, dtype=np.float32)
    bits = rng_next_batch(counter, out=bits, scratch=scratch)
    np.right_shift(bits, _U_40, out=bits)
    # values are below 2**24, so the conversion to float32 is exact
    out[...] = bits
    np.multiply(out, UNIFORM_SCALE, out=out)
    return out

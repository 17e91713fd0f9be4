"""Counter-based random numbers for reproducible Monte Carlo streams.

Algorithm identifier: ``splitmix64-counter``.  The generator is the
SplitMix64 finalizer applied in counter mode,

    stream key   key(seed, i) = mix64((seed + (i+1)*GOLDEN) mod 2^64)
    n-th output  out(key, n)  = mix64((key + (n+1)*GOLDEN) mod 2^64)
    uniform      u = (out >> 11) * 2^-53        in [0, 1)

with GOLDEN = 0x9E3779B97F4A7C15 and mix64 the standard xor-shift-multiply
finalizer.  Every trial of a simulation owns the stream keyed by its trial
index; its draws are addressed by an explicit counter, so evaluation order
(scalar, vectorized, or distributed) cannot change any sequence.  Any
language can reproduce the streams from this comment alone.

Geometric sampling uses inversion: attempts = floor(log1p(-u)/log1p(-p)) + 1,
which has support {1, 2, ...} and P(1) = p.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

__all__ = ["GOLDEN", "mix64", "stream_key", "uniform_at", "geometric_at"]

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TO_UNIT = 2.0 ** -53


def mix64(z):
    """SplitMix64 finalizer on uint64 ndarray (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def _mix64_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, index) -> np.ndarray:
    """Stream keys for one or more stream indices under a 64-bit seed."""
    if not (0 <= seed <= _MASK):
        raise ParameterError("seed must be a 64-bit unsigned integer")
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.uint64(seed) + (idx + np.uint64(1)) * np.uint64(GOLDEN))


def uniform_at(key, counter) -> np.ndarray:
    """Uniform [0, 1) draws at explicit counter positions of streams.

    ``key`` and ``counter`` broadcast against each other; the result is
    float64 with 53 random bits.
    """
    key = np.asarray(key, dtype=np.uint64)
    ctr = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        word = mix64(key + (ctr + np.uint64(1)) * np.uint64(GOLDEN))
    return (word >> np.uint64(11)).astype(np.float64) * _TO_UNIT


def geometric_at(key, counter, p: float) -> np.ndarray:
    """Geometric attempt counts (support 1, 2, ...) by inversion."""
    if not (0.0 < p <= 1.0):
        raise ParameterError(f"geometric probability must lie in (0, 1], got {p!r}")
    if p == 1.0:
        shape = np.broadcast_shapes(np.shape(key), np.shape(counter))
        return np.ones(shape, dtype=np.int64)
    u = uniform_at(key, counter)
    return (np.floor(np.log1p(-u) / np.log1p(-p)) + 1.0).astype(np.int64)

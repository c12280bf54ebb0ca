"""Deterministic random streams.

Two kinds of streams are used:

* ``stream(seed, *keys)`` returns a :class:`numpy.random.Generator` seeded from
  a :class:`numpy.random.SeedSequence` built on the key tuple. Used for
  sequential draws (placements, random groupings, annealing chains).
* ``keyed_uniform(seed, *keys)`` is a counter-based generator: each output is a
  pure function of its integer key, so elementwise draws such as per-(UE, PRB)
  fading never depend on evaluation order, array shape or worker count.
"""

from __future__ import annotations

import numpy as np

# Domain-separation tags so different consumers never share a stream.
TAG_PLACEMENT = 1
TAG_FADING = 2
TAG_GROUPING = 3
TAG_ANNEAL = 4
TAG_PF = 5

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps modulo 2**64
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def keyed_bits(seed: int, *keys) -> np.ndarray:
    """64-bit hash of ``(seed, *keys)``; keys broadcast like numpy arrays."""
    with np.errstate(over="ignore"):
        h = _mix64(np.asarray(seed, dtype=np.uint64) + _GAMMA)
        for k in keys:
            k = np.asarray(k, dtype=np.uint64)
            h = _mix64(h ^ _mix64(k + _GAMMA) + _GAMMA)
    return h


def keyed_uniform(seed: int, *keys) -> np.ndarray:
    """Uniform draws on [0, 1) with 53-bit resolution, one per broadcast key."""
    return (keyed_bits(seed, *keys) >> _S11).astype(np.float64) * 2.0**-53


def keyed_exponential(seed: int, *keys) -> np.ndarray:
    """Exp(1) draws by inversion of :func:`keyed_uniform`."""
    return -np.log1p(-keyed_uniform(seed, *keys))


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))

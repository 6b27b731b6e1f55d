"""Counter-based random streams.

Every random quantity in the Monte Carlo is a pure function of
(seed, purpose, cycle, slot): the Philox-4x32-10 block cipher is keyed by
a 64-bit digest of (seed, purpose) and counted by (cycle, slot-block).
Random access by counter is what makes simulations bit-identical for any
partition of cycles across workers or batches.

Slot convention: each Philox block yields two 53-bit doubles; slot s maps
to block s >> 1, lane s & 1.  Scalar normals consume one even-aligned
block (Box-Muller, cosine branch); trajectory normals consume blocks
0, 1, ... with both Box-Muller branches.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

# purpose salts, one independent stream family per physical role
SIGNAL = 0x5349474E
MEETING = 0x4D454554
BACKGROUND = 0x42414B47
DARK = 0x4441524B
TRAJECTORY = 0x57494E52

_TWO_M53 = 2.0 ** -53
_U64_32 = np.uint64(32)
_U64_11 = np.uint64(11)


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def stream_key(seed: int, purpose: int) -> tuple[int, int]:
    """Philox key (k0, k1) for one (seed, purpose) stream family."""
    h = _splitmix64(_splitmix64(seed & 0xFFFFFFFFFFFFFFFF) ^ (purpose & 0xFFFFFFFFFFFFFFFF))
    return h & 0xFFFFFFFF, (h >> 32) & 0xFFFFFFFF


def block_uniforms(seed: int, purpose: int, cycles, blocks):
    """The two uniform [0, 1) doubles of each (cycle, block) Philox block."""
    cycles = np.asarray(cycles, dtype=np.uint64)
    blocks = np.asarray(blocks, dtype=np.uint64)
    cycles, blocks = np.broadcast_arrays(cycles, blocks)
    k0, k1 = stream_key(seed, purpose)
    x0, x1, x2, x3 = _kernels.philox4x32(
        k0,
        k1,
        (cycles & np.uint64(0xFFFFFFFF)).astype(np.uint32),
        (cycles >> _U64_32).astype(np.uint32),
        blocks.astype(np.uint32),
        np.zeros(cycles.shape, dtype=np.uint32),
    )
    ua = (((x0.astype(np.uint64) << _U64_32) | x1) >> _U64_11).astype(np.float64) * _TWO_M53
    ub = (((x2.astype(np.uint64) << _U64_32) | x3) >> _U64_11).astype(np.float64) * _TWO_M53
    return ua, ub


def uniforms(seed: int, purpose: int, cycles, slots) -> np.ndarray:
    """Uniform [0, 1) doubles addressed by (cycle, slot), broadcastable."""
    slots = np.asarray(slots, dtype=np.uint64)
    ua, ub = block_uniforms(seed, purpose, cycles, slots >> np.uint64(1))
    return np.where((slots & np.uint64(1)).astype(bool), ub, ua)


def normals(seed: int, purpose: int, cycles, slot0) -> np.ndarray:
    """Standard normals; slot0 must be even, consumes slots (slot0, slot0+1)."""
    slot0 = np.asarray(slot0, dtype=np.uint64)
    u1, u2 = block_uniforms(seed, purpose, cycles, slot0 >> np.uint64(1))
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def normal_stream(seed: int, purpose: int, cycles, n: int) -> np.ndarray:
    """n standard normals per cycle from blocks 0.., both Box-Muller branches.

    Returns shape (len(cycles), n); normals (2j, 2j+1) share block j.
    """
    cycles = np.atleast_1d(np.asarray(cycles, dtype=np.uint64))
    m = (n + 1) // 2
    u1, u2 = block_uniforms(seed, purpose, cycles[:, None],
                            np.arange(m, dtype=np.uint64)[None, :])
    r = np.sqrt(-2.0 * np.log1p(-u1))
    out = np.empty((len(cycles), 2 * m))
    out[:, 0::2] = r * np.cos(2.0 * np.pi * u2)
    out[:, 1::2] = r * np.sin(2.0 * np.pi * u2)
    return out[:, :n]


def poisson_cdf_table(mean: float, cap: int) -> np.ndarray:
    """Cumulative Poisson probabilities P(X <= k) for k in [0, cap]."""
    if mean < 0:
        raise ValueError("mean must be nonnegative")
    pmf = np.empty(cap + 1)
    pmf[0] = np.exp(-mean)
    for k in range(1, cap + 1):
        pmf[k] = pmf[k - 1] * mean / k
    return np.minimum(np.cumsum(pmf), 1.0)


def poisson_counts(u: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    """Inverse-CDF Poisson draws from uniforms, truncated at len(cdf) - 1."""
    return np.searchsorted(cdf, u, side="left").astype(np.int64)

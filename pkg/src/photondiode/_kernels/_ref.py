"""Numpy reference implementations of the hot kernels."""

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def philox4x32(key0, key1, c0, c1, c2, c3):
    """Philox-4x32-10 block function, vectorized over counters.

    key0/key1 are uint32 scalars, c0..c3 uint32 arrays (broadcastable).
    Returns four uint32 arrays of the broadcast shape.
    """
    x0, x1, x2, x3 = np.broadcast_arrays(
        np.asarray(c0, dtype=np.uint32),
        np.asarray(c1, dtype=np.uint32),
        np.asarray(c2, dtype=np.uint32),
        np.asarray(c3, dtype=np.uint32),
    )
    x0 = x0.astype(np.uint64)
    x2 = x2.astype(np.uint64)
    x1 = np.array(x1, dtype=np.uint32, copy=True)
    x3 = np.array(x3, dtype=np.uint32, copy=True)
    k0 = int(key0) & 0xFFFFFFFF
    k1 = int(key1) & 0xFFFFFFFF
    for r in range(10):
        p0 = x0 * _M0
        p1 = x2 * _M1
        hi0 = (p0 >> _SHIFT32).astype(np.uint32)
        lo0 = (p0 & _MASK32).astype(np.uint32)
        hi1 = (p1 >> _SHIFT32).astype(np.uint32)
        lo1 = (p1 & _MASK32).astype(np.uint32)
        nx0 = hi1 ^ x1 ^ np.uint32(k0)
        nx2 = hi0 ^ x3 ^ np.uint32(k1)
        x0 = nx0.astype(np.uint64)
        x1 = lo1
        x2 = nx2.astype(np.uint64)
        x3 = lo0
        k0 = (k0 + 0x9E3779B9) & 0xFFFFFFFF
        k1 = (k1 + 0xBB67AE85) & 0xFFFFFFFF
    return x0.astype(np.uint32), x1, x2.astype(np.uint32), x3


def pair_diff_histogram(t1, t2, origin, bin_width, nbins):
    """Histogram of all differences a - b (a from t1, b from t2).

    t1 and t2 must be sorted float64 arrays.  Differences d with
    origin <= d < origin + nbins*bin_width increment the bin
    floor((d - origin)/bin_width); all other pairs are ignored.
    """
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    counts = np.zeros(nbins, dtype=np.int64)
    if len(t1) == 0 or len(t2) == 0:
        return counts
    hi_edge = origin + nbins * bin_width
    # pairs with d >= origin  =>  b <= a - origin
    # pairs with d <  hi_edge =>  b >  a - hi_edge
    chunk = 131072
    for s in range(0, len(t1), chunk):
        a = t1[s : s + chunk]
        lo = np.searchsorted(t2, a - hi_edge, side="right")
        hi = np.searchsorted(t2, a - origin, side="right")
        n = hi - lo
        total = int(n.sum())
        if total == 0:
            continue
        rep_a = np.repeat(a, n)
        cum = np.cumsum(n)
        base = np.repeat(lo, n)
        off = np.arange(total) - np.repeat(cum - n, n)
        d = rep_a - t2[base + off]
        idx = np.floor((d - origin) / bin_width).astype(np.int64)
        np.clip(idx, 0, nbins - 1, out=idx)
        counts += np.bincount(idx, minlength=nbins)
    return counts

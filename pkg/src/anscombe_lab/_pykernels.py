"""Pure numpy/Python implementations of the hot kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors every function
here with the same signature and the same floating-point operation order.
"""

from __future__ import annotations

import math

import numpy as np

# slack for time comparisons in the Skorohod feasibility sweep
TIME_TOL = 1e-12


def ks_statistic(a_sorted: np.ndarray, b_sorted: np.ndarray) -> float:
    """sup |F_a - F_b| for two sorted samples with right-continuous ECDFs."""
    a = np.asarray(a_sorted, dtype=np.float64)
    b = np.asarray(b_sorted, dtype=np.float64)
    m, n = a.shape[0], b.shape[0]
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / m
    fb = np.searchsorted(b, pts, side="right") / n
    return float(np.max(np.abs(fa - fb)))


def nested_window_max(values: np.ndarray, center: int, los: np.ndarray,
                      his: np.ndarray) -> np.ndarray:
    """max_{lo_k <= j <= hi_k} |values[j] - values[center]| for each window k."""
    v = np.asarray(values, dtype=np.float64)
    vc = v[center]
    out = np.empty(len(los), dtype=np.float64)
    for k, (lo, hi) in enumerate(zip(los, his)):
        out[k] = np.max(np.abs(v[lo:hi + 1] - vc))
    return out


def _rank_and_groups(z: np.ndarray):
    order = np.argsort(z, kind="stable")
    sv = z[order]
    m = z.shape[0]
    rank = np.empty(m, dtype=np.int64)
    rank[order] = np.arange(m, dtype=np.int64)
    first = np.ones(m, dtype=bool)
    last = np.ones(m, dtype=bool)
    if m > 1:
        same = sv[1:] == sv[:-1]
        first[1:] = ~same
        last[:-1] = ~same
    return order, sv, rank, first, last


def ecdf_sup_profile(z: np.ndarray, fz: np.ndarray, f0: float, f1: float,
                     center: int, lo: int, hi: int) -> np.ndarray:
    """Exact sup-norm distance between empirical processes of sample prefixes.

    ``X_j(t) = sqrt(j) * (#{i <= j: z_i <= t} / j - F(t))`` with ``X_0 = 0``.
    Returns ``sup_t |X_j(t) - X_center(t)|`` for ``j = lo..hi``.  ``fz`` holds
    ``F(z_i)``; F must be continuous so that left limits only move the counts.
    """
    m = max(hi, center)
    out = np.zeros(hi - lo + 1, dtype=np.float64)
    if m == 0:
        return out
    zz = np.asarray(z[:m], dtype=np.float64)
    order, sv, rank, first, last = _rank_and_groups(zz)
    fs = np.asarray(fz[:m], dtype=np.float64)[order]
    k0 = int(np.searchsorted(sv, 0.0, side="right")) - 1
    k1 = int(np.searchsorted(sv, 1.0, side="right")) - 1

    def counts_for(j: int) -> np.ndarray:
        h = np.bincount(rank[:j], minlength=m)
        return np.cumsum(h)

    cc = counts_for(center).astype(np.float64)
    ac = 1.0 / math.sqrt(center) if center > 0 else 0.0
    sc = math.sqrt(center)

    w = hi - lo + 1
    base = counts_for(lo)
    inc = np.zeros((w, m), dtype=np.int64)
    if w > 1:
        r = rank[lo:hi]
        onehot = np.zeros((w - 1, m), dtype=np.int64)
        onehot[np.arange(w - 1), r] = 1
        inc[1:] = np.cumsum(np.cumsum(onehot, axis=0), axis=1)
    cj = (base[None, :] + inc).astype(np.float64)

    js = np.arange(lo, hi + 1, dtype=np.float64)
    aj = np.where(js > 0, 1.0 / np.sqrt(np.maximum(js, 1.0)), 0.0)[:, None]
    sj = np.sqrt(js)[:, None]
    drift = (sj - sc)

    right = cj * aj - cc[None, :] * ac - drift * fs[None, :]
    best = np.max(np.where(last[None, :], np.abs(right), 0.0), axis=1)

    cj_left = np.zeros_like(cj)
    cj_left[:, 1:] = cj[:, :-1]
    cc_left = np.zeros_like(cc)
    cc_left[1:] = cc[:-1]
    left = cj_left * aj - cc_left[None, :] * ac - drift * fs[None, :]
    best = np.maximum(best, np.max(np.where(first[None, :], np.abs(left), 0.0), axis=1))

    c0j = cj[:, k0] if k0 >= 0 else np.zeros(w)
    c0c = cc[k0] if k0 >= 0 else 0.0
    d0 = c0j * aj[:, 0] - c0c * ac - drift[:, 0] * f0
    c1j = cj[:, k1] if k1 >= 0 else np.zeros(w)
    c1c = cc[k1] if k1 >= 0 else 0.0
    d1 = c1j * aj[:, 0] - c1c * ac - drift[:, 0] * f1
    out[:] = np.maximum(best, np.maximum(np.abs(d0), np.abs(d1)))
    return out


def skorohod_feasible(xa: np.ndarray, xl: np.ndarray, ya: np.ndarray,
                      yl: np.ndarray, eps: float) -> bool:
    """Is there a time change within ``eps`` of the identity bringing x within ``eps`` of y?

    ``xa``/``ya`` are strictly increasing jump times in (0, 1]; ``xl``/``yl``
    are the levels, one longer than the jump arrays (``xl[0]`` is the initial
    value).  The sweep keeps, for every pair (jumps of x placed, jumps of y
    passed), the earliest time at which that state can be reached; the
    inequalities are non-strict because the distance is an infimum.
    """
    m = len(xa)
    n = len(ya)
    inf = math.inf
    tol = TIME_TOL
    if abs(xl[0] - yl[0]) > eps:
        return False
    t = [[inf] * (n + 1) for _ in range(m + 1)]
    t[0][0] = 0.0
    for i in range(m + 1):
        row = t[i]
        for j in range(n + 1):
            cur = row[j]
            if cur == inf:
                continue
            if i < m:
                a = xa[i]
                # x jump placed on its own
                if a >= 1.0:
                    ok = j == n and cur < 1.0
                    s = 1.0
                else:
                    s = max(cur, a - eps)
                    ok = cur < 1.0 and s <= a + eps + tol
                    if ok and j < n:
                        ok = s <= ya[j] + tol
                if ok and abs(xl[i + 1] - yl[j]) <= eps and s < t[i + 1][j]:
                    t[i + 1][j] = s
            if j < n:
                b = ya[j]
                # y jump passed on its own
                if b + tol >= cur and not (b >= 1.0 and i < m):
                    if abs(xl[i] - yl[j + 1]) <= eps and b < t[i][j + 1]:
                        t[i][j + 1] = b
                # matched jumps
                if i < m:
                    a = xa[i]
                    if (b + tol >= cur and abs(a - b) <= eps + tol
                            and (a >= 1.0) == (b >= 1.0)
                            and abs(xl[i + 1] - yl[j + 1]) <= eps
                            and b < t[i + 1][j + 1]):
                        t[i + 1][j + 1] = b
    return t[m][n] < inf

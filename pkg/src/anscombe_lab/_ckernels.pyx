# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``.

Same signatures, same results; see the Python module for the contracts.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()

cdef double TIME_TOL = 1e-12


def ks_statistic(const double[::1] a, const double[::1] b):
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0]
    cdef Py_ssize_t i = 0, j = 0
    cdef double v, d, best = 0.0
    while i < m or j < n:
        if j >= n or (i < m and a[i] <= b[j]):
            v = a[i]
        else:
            v = b[j]
        while i < m and a[i] <= v:
            i += 1
        while j < n and b[j] <= v:
            j += 1
        d = fabs(<double>i / m - <double>j / n)
        if d > best:
            best = d
    return best


def nested_window_max(const double[::1] values, Py_ssize_t center,
                      const cnp.int64_t[::1] los, const cnp.int64_t[::1] his):
    cdef Py_ssize_t nw = los.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nw, dtype=np.float64)
    cdef double vc = values[center]
    cdef double best = 0.0, d
    cdef Py_ssize_t k, j, cur_lo = center, cur_hi = center
    for k in range(nw):
        j = cur_lo - 1
        while j >= los[k]:
            d = fabs(values[j] - vc)
            if d > best:
                best = d
            j -= 1
        if los[k] < cur_lo:
            cur_lo = los[k]
        j = cur_hi + 1
        while j <= his[k]:
            d = fabs(values[j] - vc)
            if d > best:
                best = d
            j += 1
        if his[k] > cur_hi:
            cur_hi = his[k]
        out[k] = best
    return out


def ecdf_sup_profile(const double[::1] z, const double[::1] fz, double f0,
                     double f1, Py_ssize_t center, Py_ssize_t lo, Py_ssize_t hi):
    cdef Py_ssize_t m = center if center > hi else hi
    cdef Py_ssize_t w = hi - lo + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(w, dtype=np.float64)
    if m == 0:
        return out
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(
        np.asarray(z[:m]), kind="stable").astype(np.int64)
    cdef double[::1] sv = np.empty(m, dtype=np.float64)
    cdef double[::1] fs = np.empty(m, dtype=np.float64)
    cdef cnp.int64_t[::1] rank = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] cnt = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t[::1] ccnt = np.zeros(m, dtype=np.int64)
    cdef unsigned char[::1] first = np.ones(m, dtype=np.uint8)
    cdef unsigned char[::1] last = np.ones(m, dtype=np.uint8)
    cdef Py_ssize_t k, i, j, r, k0 = -1, k1 = -1
    for k in range(m):
        sv[k] = z[order[k]]
        fs[k] = fz[order[k]]
        rank[order[k]] = k
    for k in range(1, m):
        if sv[k] == sv[k - 1]:
            first[k] = 0
            last[k - 1] = 0
    for k in range(m):
        if sv[k] <= 0.0:
            k0 = k
        if sv[k] <= 1.0:
            k1 = k

    for i in range(center):
        ccnt[rank[i]] += 1
    for k in range(1, m):
        ccnt[k] += ccnt[k - 1]
    for i in range(lo):
        cnt[rank[i]] += 1
    for k in range(1, m):
        cnt[k] += cnt[k - 1]

    cdef double ac = 1.0 / sqrt(<double>center) if center > 0 else 0.0
    cdef double sc = sqrt(<double>center)
    cdef double aj, sj, drift, best, d, cjl, ccl, c0j, c0c, c1j, c1c
    for j in range(lo, hi + 1):
        if j > lo:
            r = rank[j - 1]
            for k in range(r, m):
                cnt[k] += 1
        aj = 1.0 / sqrt(<double>j) if j > 0 else 0.0
        sj = sqrt(<double>j)
        drift = sj - sc
        best = 0.0
        for k in range(m):
            if last[k]:
                d = fabs(<double>cnt[k] * aj - <double>ccnt[k] * ac - drift * fs[k])
                if d > best:
                    best = d
            if first[k]:
                if k > 0:
                    cjl = <double>cnt[k - 1]
                    ccl = <double>ccnt[k - 1]
                else:
                    cjl = 0.0
                    ccl = 0.0
                d = fabs(cjl * aj - ccl * ac - drift * fs[k])
                if d > best:
                    best = d
        if k0 >= 0:
            c0j = <double>cnt[k0]
            c0c = <double>ccnt[k0]
        else:
            c0j = 0.0
            c0c = 0.0
        d = fabs(c0j * aj - c0c * ac - drift * f0)
        if d > best:
            best = d
        if k1 >= 0:
            c1j = <double>cnt[k1]
            c1c = <double>ccnt[k1]
        else:
            c1j = 0.0
            c1c = 0.0
        d = fabs(c1j * aj - c1c * ac - drift * f1)
        if d > best:
            best = d
        out[j - lo] = best
    return out


def skorohod_feasible(const double[::1] xa, const double[::1] xl,
                      const double[::1] ya, const double[::1] yl, double eps):
    cdef Py_ssize_t m = xa.shape[0], n = ya.shape[0]
    cdef Py_ssize_t i, j
    cdef double cur, a, b, s
    cdef bint ok
    if fabs(xl[0] - yl[0]) > eps:
        return False
    cdef double[:, ::1] t = np.full((m + 1, n + 1), INFINITY, dtype=np.float64)
    t[0, 0] = 0.0
    for i in range(m + 1):
        for j in range(n + 1):
            cur = t[i, j]
            if cur == INFINITY:
                continue
            if i < m:
                a = xa[i]
                if a >= 1.0:
                    ok = j == n and cur < 1.0
                    s = 1.0
                else:
                    s = cur if cur > a - eps else a - eps
                    ok = cur < 1.0 and s <= a + eps + TIME_TOL
                    if ok and j < n:
                        ok = s <= ya[j] + TIME_TOL
                if ok and fabs(xl[i + 1] - yl[j]) <= eps and s < t[i + 1, j]:
                    t[i + 1, j] = s
            if j < n:
                b = ya[j]
                if b + TIME_TOL >= cur and not (b >= 1.0 and i < m):
                    if fabs(xl[i] - yl[j + 1]) <= eps and b < t[i, j + 1]:
                        t[i, j + 1] = b
                if i < m:
                    a = xa[i]
                    if (b + TIME_TOL >= cur and fabs(a - b) <= eps + TIME_TOL
                            and (a >= 1.0) == (b >= 1.0)
                            and fabs(xl[i + 1] - yl[j + 1]) <= eps
                            and b < t[i + 1, j + 1]):
                        t[i + 1, j + 1] = b
    return t[m, n] < INFINITY

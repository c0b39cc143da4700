# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled float64 kernels: Prokhorov subset enumeration and Floyd-Warshall."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


cdef double _constraint(double* dA, double* w, int t, double pA,
                        double* sd, double* sw) noexcept nogil:
    cdef int i, j
    cdef double key, kw, cum, best, thr, val
    # insertion sort of (dA, w) pairs; t is at most a few dozen
    for i in range(t):
        sd[i] = dA[i]
        sw[i] = w[i]
    for i in range(1, t):
        key = sd[i]
        kw = sw[i]
        j = i - 1
        while j >= 0 and sd[j] > key:
            sd[j + 1] = sd[j]
            sw[j + 1] = sw[j]
            j -= 1
        sd[j + 1] = key
        sw[j + 1] = kw
    cum = 0.0
    i = 0
    while i < t and sd[i] <= 0.0:
        cum += sw[i]
        i += 1
    best = pA - cum
    if best < 0.0:
        best = 0.0
    while i < t:
        thr = sd[i]
        if thr == INFINITY or thr >= best:
            break
        while i < t and sd[i] == thr:
            cum += sw[i]
            i += 1
        val = pA - cum
        if val < thr:
            val = thr
        if val < best:
            best = val
    return best


cdef void _rec(int i, int s, int t, double pA, double[:, ::1] rows,
               double[::1] pw, double[::1] qw, double[::1] tail,
               double[:, ::1] stack, double* sd, double* sw,
               double* best) noexcept nogil:
    cdef int x
    cdef double pB, g, u
    if i == s or pA + tail[i] <= best[0]:
        return
    for x in range(t):
        u = rows[i, x]
        if stack[i, x] < u:
            u = stack[i, x]
        stack[i + 1, x] = u
    pB = pA + pw[i]
    if pB > best[0]:
        g = _constraint(&stack[i + 1, 0], &qw[0], t, pB, sd, sw)
        if g > best[0]:
            best[0] = g
    _rec(i + 1, s, t, pB, rows, pw, qw, tail, stack, sd, sw, best)
    # exclude branch reuses the parent row: copy it down one level
    for x in range(t):
        stack[i + 1, x] = stack[i, x]
    _rec(i + 1, s, t, pA, rows, pw, qw, tail, stack, sd, sw, best)


def lp_direction(D, p, q, S, T, double best):
    """Compiled twin of ``_pykernels.lp_direction`` for float64 input."""
    cdef const double[:, ::1] Dv = np.ascontiguousarray(D, dtype=np.float64)
    cdef const Py_ssize_t[::1] Sv = np.asarray(S, dtype=np.intp)
    cdef const Py_ssize_t[::1] Tv = np.asarray(T, dtype=np.intp)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef int s = Sv.shape[0]
    cdef int t = Tv.shape[0]
    cdef int i, x
    if s == 0:
        return best
    rows_np = np.empty((s, max(t, 1)), dtype=np.float64)
    cdef double[:, ::1] rows = rows_np
    pw_np = np.empty(s, dtype=np.float64)
    cdef double[::1] pw = pw_np
    qw_np = np.zeros(max(t, 1), dtype=np.float64)
    cdef double[::1] qw = qw_np
    tail_np = np.zeros(s + 1, dtype=np.float64)
    cdef double[::1] tail = tail_np
    stack_np = np.full((s + 1, max(t, 1)), np.inf, dtype=np.float64)
    cdef double[:, ::1] stack = stack_np
    sd_np = np.empty(max(t, 1), dtype=np.float64)
    sw_np = np.empty(max(t, 1), dtype=np.float64)
    cdef double[::1] sd = sd_np
    cdef double[::1] sw = sw_np
    for i in range(s):
        pw[i] = pv[Sv[i]]
        for x in range(t):
            rows[i, x] = Dv[Sv[i], Tv[x]]
    for x in range(t):
        qw[x] = qv[Tv[x]]
    for i in range(s - 1, -1, -1):
        tail[i] = tail[i + 1] + pw[i]
    cdef double b = best
    with nogil:
        _rec(0, s, t, 0.0, rows, pw, qw, tail, stack, &sd[0], &sw[0], &b)
    return b


def floyd_warshall(D):
    """All-pairs shortest paths on a float64 matrix; inf saturates natively."""
    out = np.array(D, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] d = out
    cdef int n = d.shape[0]
    cdef int i, j, k
    cdef double dik, v
    with nogil:
        for k in range(n):
            for i in range(n):
                dik = d[i, k]
                if dik == INFINITY:
                    continue
                for j in range(n):
                    v = dik + d[k, j]
                    if v < d[i, j]:
                        d[i, j] = v
    return out

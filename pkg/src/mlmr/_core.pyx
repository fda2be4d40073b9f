# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; a line-for-line mirror of ``_fallback``.

Built without fast-math so floating results match the pure-Python path bit
for bit.
"""

from libc.math cimport log, sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free

import numpy as np

cdef double TIE_RTOL = 1e-12


cdef void _hungarian(double* cost, Py_ssize_t ld, Py_ssize_t* rows, Py_ssize_t n,
                     Py_ssize_t* cols, Py_ssize_t m, Py_ssize_t* assign,
                     double* uo, double* vo, void* work) noexcept nogil:
    # work holds u[n+1], v[m+1], minv[m+1] doubles then p, way, used (m+1 each).
    cdef double* u = <double*> work
    cdef double* v = u + (n + 1)
    cdef double* minv = v + (m + 1)
    cdef Py_ssize_t* p = <Py_ssize_t*> (minv + (m + 1))
    cdef Py_ssize_t* way = p + (m + 1)
    cdef Py_ssize_t* used = way + (m + 1)
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    cdef double* crow
    for i in range(n + 1):
        u[i] = 0.0
    for j in range(m + 1):
        v[j] = 0.0
        p[j] = 0
        way[j] = 0
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(m + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            crow = cost + rows[i0 - 1] * ld
            delta = INFINITY
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = crow[cols[j - 1]] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    for j in range(1, m + 1):
        if p[j] != 0:
            assign[p[j] - 1] = cols[j - 1]
    if uo != NULL:
        for i in range(n):
            uo[i] = u[i + 1]
    if vo != NULL:
        for j in range(m):
            vo[j] = v[j + 1]


cdef double _mwm(double* w, double* cost, Py_ssize_t m, Py_ssize_t n,
                 Py_ssize_t* assign, void* work) noexcept nogil:
    # Scratch laid out after the Hungarian workspace.
    cdef char* base = <char*> work
    cdef void* hwork = base
    cdef Py_ssize_t hsize = 3 * (n + 1) * sizeof(double) + (m + 1) * sizeof(double) + 3 * (n + 1) * sizeof(Py_ssize_t)
    cdef double* u = <double*> (base + hsize)
    cdef double* v = u + m
    cdef Py_ssize_t* rows = <Py_ssize_t*> (v + n)
    cdef Py_ssize_t* cols = rows + m
    cdef Py_ssize_t* rest_rows = cols + n
    cdef Py_ssize_t* rest_cols = rest_rows + m
    cdef Py_ssize_t* sub_assign = rest_cols + n
    cdef Py_ssize_t* used = sub_assign + m
    cdef Py_ssize_t i, j, k, a, nr, nc, c
    cdef double scale, tol, best, prefix, sub, total, x
    for i in range(m):
        rows[i] = i
        for j in range(n):
            cost[i * n + j] = -w[i * n + j]
    for j in range(n):
        cols[j] = j
        used[j] = 0
    _hungarian(cost, n, rows, m, cols, n, assign, u, v, hwork)
    scale = 1.0
    for i in range(m):
        for j in range(n):
            x = fabs(w[i * n + j])
            if x > scale:
                scale = x
    tol = TIE_RTOL * scale * m
    best = 0.0
    for i in range(m):
        best += w[i * n + assign[i]]
    prefix = 0.0
    for i in range(m):
        a = assign[i]
        for j in range(a):
            if used[j] or cost[i * n + j] - u[i] - v[j] > tol:
                continue
            nr = 0
            for k in range(i + 1, m):
                rest_rows[nr] = k
                nr += 1
            nc = 0
            for c in range(n):
                if not used[c] and c != j:
                    rest_cols[nc] = c
                    nc += 1
            sub = 0.0
            if nr > 0:
                _hungarian(cost, n, rest_rows, nr, rest_cols, nc, sub_assign, NULL, NULL, hwork)
                for k in range(nr):
                    sub += w[rest_rows[k] * n + sub_assign[k]]
            if prefix + w[i * n + j] + sub >= best - tol:
                assign[i] = j
                for k in range(nr):
                    assign[rest_rows[k]] = sub_assign[k]
                break
        used[assign[i]] = 1
        prefix += w[i * n + assign[i]]
    total = 0.0
    for i in range(m):
        total += w[i * n + assign[i]]
    return total


cdef Py_ssize_t _work_bytes(Py_ssize_t m, Py_ssize_t n):
    return (3 * (n + 1) * sizeof(double) + (m + 1) * sizeof(double) + 3 * (n + 1) * sizeof(Py_ssize_t)
            + (m + n) * sizeof(double) + (4 * m + 3 * n) * sizeof(Py_ssize_t))


def max_weight_matching(w):
    cdef double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t m = wv.shape[0]
    cdef Py_ssize_t n = wv.shape[1]
    cdef double[::1] cost = np.empty(m * n)
    cdef Py_ssize_t[::1] assign = np.empty(m, dtype=np.intp)
    cdef void* work = malloc(_work_bytes(m, n))
    cdef double total
    if work == NULL:
        raise MemoryError()
    try:
        total = _mwm(&wv[0, 0], &cost[0], m, n, &assign[0], work)
    finally:
        free(work)
    return [int(assign[i]) for i in range(m)], total


def mlmr_block(double[:, ::1] theta, long long[:, ::1] counts, long long[:, ::1] cur,
               double[:, :, :, ::1] cum, double[:, :, ::1] rew, long long[:, ::1] nst,
               long long t, double[::1] lvals, double[:, ::1] uniforms,
               double[::1] out_rewards):
    cdef Py_ssize_t m = theta.shape[0]
    cdef Py_ssize_t n = theta.shape[1]
    cdef Py_ssize_t steps = lvals.shape[0]
    cdef Py_ssize_t k, i, j, z, s, last, nxt
    cdef long long c
    cdef double lnt, L, y, total, x
    cdef double[::1] w = np.empty(m * n)
    cdef double[::1] cost = np.empty(m * n)
    cdef Py_ssize_t[::1] assign = np.empty(m, dtype=np.intp)
    cdef void* work = malloc(_work_bytes(m, n))
    if work == NULL:
        raise MemoryError()
    try:
        with nogil:
            for k in range(steps):
                lnt = log(<double> t)
                L = lvals[k]
                for i in range(m):
                    for j in range(n):
                        w[i * n + j] = theta[i, j] + sqrt(L * lnt / <double> counts[i, j])
                _mwm(&w[0], &cost[0], m, n, &assign[0], work)
                total = 0.0
                for i in range(m):
                    j = assign[i]
                    s = cur[i, j]
                    y = rew[i, j, s]
                    c = counts[i, j]
                    theta[i, j] = (theta[i, j] * <double> c + y) / <double> (c + 1)
                    counts[i, j] = c + 1
                    last = nst[i, j] - 1
                    nxt = last
                    x = uniforms[k, i]
                    for z in range(last):
                        if x < cum[i, j, s, z]:
                            nxt = z
                            break
                    cur[i, j] = nxt
                    total += y
                out_rewards[k] = total
                t += 1
    finally:
        free(work)
    return t

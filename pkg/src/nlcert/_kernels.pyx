# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Mirrors ``_kernels_py`` exactly in semantics."""

import numpy as np
from libc.math cimport sqrt, INFINITY

BACKEND = "cython"


def best_response_scan(const double[:, :, :, ::1] W, const long long[:, ::1] rdig,
                       const long long[::1] astride, const long long[::1] radix,
                       long long start, long long stop, double tol):
    """Scan outer strategy codes [start, stop); the last player best-responds.

    W[r, q, a, o]: payoff weight for outer question tuple r, last-player
    question q and answer a, outer answer tuple o. Returns
    (best, best_code, ties) with ties counted at absolute tolerance ``tol``.
    """
    cdef Py_ssize_t R = W.shape[0], QL = W.shape[1], AL = W.shape[2]
    cdef Py_ssize_t P = rdig.shape[1], D = radix.shape[0]
    cdef Py_ssize_t r, q, a, p, k
    cdef long long code, c, mult, cnt, o
    cdef double s, m, total
    cdef double best = -INFINITY
    cdef long long best_code = -1, ties = 0
    digits = np.zeros(max(D, 1), dtype=np.int64)
    outer = np.zeros(max(R, 1), dtype=np.int64)
    cdef long long[::1] dg = digits
    cdef long long[::1] ao = outer
    c = start
    for k in range(D - 1, -1, -1):
        dg[k] = c % radix[k]
        c = c // radix[k]
    with nogil:
        for code in range(start, stop):
            for r in range(R):
                o = 0
                for p in range(P):
                    o = o + dg[rdig[r, p]] * astride[p]
                ao[r] = o
            total = 0.0
            mult = 1
            for q in range(QL):
                m = -INFINITY
                cnt = 0
                for a in range(AL):
                    s = 0.0
                    for r in range(R):
                        s = s + W[r, q, a, ao[r]]
                    if s > m + tol:
                        m = s
                        cnt = 1
                    elif s >= m - tol:
                        cnt = cnt + 1
                        if s > m:
                            m = s
                total = total + m
                mult = mult * cnt
            if total > best + tol:
                best = total
                best_code = code
                ties = mult
            elif total >= best - tol:
                ties = ties + mult
                if total > best:
                    best = total
            k = D - 1
            while k >= 0:
                dg[k] = dg[k] + 1
                if dg[k] < radix[k]:
                    break
                dg[k] = 0
                k = k - 1
    return best, best_code, ties


def alternating_sweeps(const double[:, ::1] G, double[:, ::1] U, double[:, ::1] V,
                       double tol, long long max_sweeps):
    """In-place alternating maximisation of sum G[s,t] <u_s, v_t>.

    Returns (value, sweeps, trace) where trace holds the objective after
    every half-sweep.
    """
    cdef Py_ssize_t S = G.shape[0], T = G.shape[1], d = U.shape[1]
    cdef Py_ssize_t s, t, k
    cdef long long it, n_half = 0
    cdef double nrm, f_v, f_u, prev = -INFINITY
    trace_arr = np.empty(2 * max_sweeps, dtype=np.float64)
    cdef double[::1] trace = trace_arr
    w_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] w = w_arr
    acc_arr = np.empty((T, d), dtype=np.float64)
    cdef double[:, ::1] acc = acc_arr
    cdef double g
    with nogil:
        for it in range(max_sweeps):
            # G^T U accumulated row by row so every inner loop is contiguous
            for t in range(T):
                for k in range(d):
                    acc[t, k] = 0.0
            for s in range(S):
                for t in range(T):
                    g = G[s, t]
                    if g != 0.0:
                        for k in range(d):
                            acc[t, k] = acc[t, k] + g * U[s, k]
            f_v = 0.0
            for t in range(T):
                nrm = 0.0
                for k in range(d):
                    nrm = nrm + acc[t, k] * acc[t, k]
                nrm = sqrt(nrm)
                if nrm > 0.0:
                    for k in range(d):
                        V[t, k] = acc[t, k] / nrm
                f_v = f_v + nrm
            trace[n_half] = f_v
            n_half = n_half + 1
            f_u = 0.0
            for s in range(S):
                for k in range(d):
                    w[k] = 0.0
                for t in range(T):
                    if G[s, t] != 0.0:
                        for k in range(d):
                            w[k] = w[k] + G[s, t] * V[t, k]
                nrm = 0.0
                for k in range(d):
                    nrm = nrm + w[k] * w[k]
                nrm = sqrt(nrm)
                if nrm > 0.0:
                    for k in range(d):
                        U[s, k] = w[k] / nrm
                f_u = f_u + nrm
            trace[n_half] = f_u
            n_half = n_half + 1
            if f_u - prev < tol:
                prev = f_u
                break
            prev = f_u
    return prev, n_half // 2, trace_arr[:n_half].copy()

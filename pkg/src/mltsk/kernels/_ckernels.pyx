# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``.

Loop and summation order match the numpy fallback term for term; only the
libm ``exp``/``pow`` may differ from numpy's in the last ulp.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow, INFINITY, NAN

cnp.import_array()


cdef void _firing_column(const double[:, ::1] X, const double[:, ::1] centers,
                         const double[:, ::1] widths, Py_ssize_t n,
                         double[::1] loga) noexcept nogil:
    cdef Py_ssize_t K = centers.shape[0], D = centers.shape[1], k, i
    cdef double acc, t, mx, s
    for k in range(K):
        acc = 0.0
        for i in range(D):
            t = (X[i, n] - centers[k, i]) / widths[k, i]
            acc = acc + t * t
        loga[k] = -0.5 * acc
    mx = loga[0]
    for k in range(1, K):
        if loga[k] > mx:
            mx = loga[k]
    if mx == -INFINITY:
        for k in range(K):
            loga[k] = 1.0 / K
        return
    s = 0.0
    for k in range(K):
        loga[k] = exp(loga[k] - mx)
        s = s + loga[k]
    for k in range(K):
        loga[k] = loga[k] / s


def firing_strengths(const double[:, ::1] X, const double[:, ::1] centers,
                     const double[:, ::1] widths):
    cdef Py_ssize_t N = X.shape[1], K = centers.shape[0], n, k
    out_arr = np.empty((K, N))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] buf = np.empty(K)
    with nogil:
        for n in range(N):
            _firing_column(X, centers, widths, n, buf)
            for k in range(K):
                out[k, n] = buf[k]
    return out_arr


def fuzzy_map(const double[:, ::1] X, const double[:, ::1] centers,
              const double[:, ::1] widths):
    cdef Py_ssize_t D = X.shape[0], N = X.shape[1], K = centers.shape[0]
    cdef Py_ssize_t n, k, i, base
    G_arr = np.empty((K * (D + 1), N))
    cdef double[:, ::1] G = G_arr
    cdef double[::1] buf = np.empty(K)
    cdef double mu
    with nogil:
        for n in range(N):
            _firing_column(X, centers, widths, n, buf)
            for k in range(K):
                mu = buf[k]
                base = k * (D + 1)
                G[base, n] = mu
                for i in range(D):
                    G[base + 1 + i, n] = mu * X[i, n]
    return G_arr


def fcm_memberships(const double[:, ::1] Xt, const double[:, ::1] centers, double m):
    cdef Py_ssize_t N = Xt.shape[0], D = Xt.shape[1], K = centers.shape[0]
    cdef Py_ssize_t j, k, i
    U_arr = np.empty((N, K))
    d2_arr = np.empty((N, K))
    cdef double[:, ::1] U = U_arr
    cdef double[:, ::1] d2 = d2_arr
    cdef double acc, t, dmin, s, expo = 1.0 / (m - 1.0)
    with nogil:
        for j in range(N):
            for k in range(K):
                acc = 0.0
                for i in range(D):
                    t = Xt[j, i] - centers[k, i]
                    acc = acc + t * t
                d2[j, k] = acc
            dmin = d2[j, 0]
            for k in range(1, K):
                if d2[j, k] < dmin:
                    dmin = d2[j, k]
            if dmin == 0.0:
                for k in range(K):
                    U[j, k] = 1.0 if d2[j, k] == 0.0 else 0.0
            elif expo == 1.0:
                for k in range(K):
                    U[j, k] = dmin / d2[j, k]
            else:
                for k in range(K):
                    U[j, k] = pow(dmin / d2[j, k], expo)
            s = 0.0
            for k in range(K):
                s = s + U[j, k]
            for k in range(K):
                U[j, k] = U[j, k] / s
    return U_arr, d2_arr


def soft_threshold(Z, double theta):
    Z_arr = np.ascontiguousarray(Z, dtype=np.float64)
    out_arr = np.empty_like(Z_arr)
    cdef double[::1] z = Z_arr.reshape(-1)
    cdef double[::1] out = out_arr.reshape(-1)
    cdef Py_ssize_t i, n = z.shape[0]
    cdef double v
    with nogil:
        for i in range(n):
            v = z[i]
            if v > theta:
                out[i] = v - theta
            elif v < -theta:
                out[i] = v + theta
            else:
                out[i] = 0.0
    return out_arr


cdef inline Py_ssize_t _rank(const double[:, ::1] S, Py_ssize_t l, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t L = S.shape[0], q, r = 1
    cdef double v = S[l, n]
    for q in range(L):
        if S[q, n] > v or (S[q, n] == v and q < l):
            r += 1
    return r


def label_ranks(const double[:, ::1] scores):
    cdef Py_ssize_t L = scores.shape[0], N = scores.shape[1], l, n
    ranks_arr = np.empty((L, N), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] ranks = ranks_arr
    with nogil:
        for n in range(N):
            for l in range(L):
                ranks[l, n] = _rank(scores, l, n)
    return ranks_arr


def instance_metrics(const double[:, ::1] scores, const double[:, ::1] truth):
    cdef Py_ssize_t L = scores.shape[0], N = scores.shape[1], l, q, n
    ap_arr = np.empty(N)
    oe_arr = np.empty(N)
    rl_arr = np.empty(N)
    cv_arr = np.empty(N)
    cdef double[::1] ap = ap_arr, oe = oe_arr, rl = rl_arr, cv = cv_arr
    cdef cnp.int64_t[::1] rk = np.empty(L, dtype=np.int64)
    cdef Py_ssize_t nrel, cnt, maxrank, top, nbad
    cdef double acc
    with nogil:
        for n in range(N):
            nrel = 0
            top = 0
            for l in range(L):
                rk[l] = _rank(scores, l, n)
                if rk[l] == 1:
                    top = l
                if truth[l, n] != 0.0:
                    nrel += 1
            if nrel == 0:
                ap[n] = NAN
                oe[n] = NAN
                rl[n] = NAN
                cv[n] = NAN
                continue
            acc = 0.0
            maxrank = 0
            for l in range(L):
                if truth[l, n] == 0.0:
                    continue
                cnt = 0
                for q in range(L):
                    if truth[q, n] != 0.0 and rk[q] <= rk[l]:
                        cnt += 1
                acc = acc + (<double>cnt) / (<double>rk[l])
                if rk[l] > maxrank:
                    maxrank = rk[l]
            ap[n] = acc / nrel
            oe[n] = 0.0 if truth[top, n] != 0.0 else 1.0
            cv[n] = (<double>(maxrank - 1)) / L
            if nrel == L:
                rl[n] = NAN
            else:
                nbad = 0
                for l in range(L):
                    if truth[l, n] == 0.0:
                        continue
                    for q in range(L):
                        if truth[q, n] == 0.0 and scores[l, n] <= scores[q, n]:
                            nbad += 1
                rl[n] = (<double>nbad) / (<double>(nrel * (L - nrel)))
    return ap_arr, oe_arr, rl_arr, cv_arr

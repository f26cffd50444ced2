# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled revised simplex kernel.

Byte-for-byte the same pivot selection semantics as `_simplex_py`:
Dantzig entering (lowest index on ties) until the global iteration count
reaches dantzig_limit, then Bland; leaving row by minimum ratio with ties
broken on the smallest basic variable index.  Refactorization defers to
numpy, matching the fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

OPTIMAL = 0
UNBOUNDED = 1
ITER_LIMIT = 2

cdef double _RATIO_TIE = 1e-12


def refactorize(indptr, indices, data, b, basis, binv, xb, feas_tol):
    """Recompute the basis inverse and basic values from scratch."""
    cdef Py_ssize_t m = basis.shape[0]
    bmat = np.zeros((m, m))
    cdef Py_ssize_t i, j, s, e
    cdef cnp.int64_t[::1] iptr = indptr
    cdef cnp.int64_t[::1] idx = indices
    cdef double[::1] dat = data
    cdef cnp.int64_t[::1] bas = basis
    cdef double[:, ::1] bm = bmat
    for i in range(m):
        j = bas[i]
        s = iptr[j]
        e = iptr[j + 1]
        while s < e:
            bm[idx[s], i] = dat[s]
            s += 1
    try:
        binv[:, :] = np.linalg.inv(bmat)
    except np.linalg.LinAlgError:
        return False
    xb[:] = binv @ b
    xb[(xb < 0) & (xb >= -feas_tol)] = 0.0
    return True


def run_phase(
    cnp.ndarray[cnp.int64_t, ndim=1] indptr,
    cnp.ndarray[cnp.int64_t, ndim=1] indices,
    cnp.ndarray[cnp.float64_t, ndim=1] data,
    cnp.ndarray[cnp.float64_t, ndim=1] cost,
    cnp.ndarray[cnp.float64_t, ndim=1] b,
    cnp.ndarray[cnp.int64_t, ndim=1] basis,
    cnp.ndarray[cnp.float64_t, ndim=2] binv,
    cnp.ndarray[cnp.float64_t, ndim=1] xb,
    cnp.ndarray[cnp.uint8_t, ndim=1] enterable,
    double entering_tol,
    double pivot_tol,
    double feas_tol,
    long long dantzig_limit,
    long long max_iter,
    long long iter_start,
    long long refactor_every,
):
    """Run simplex pivots until optimal/unbounded or the iteration cap."""
    cdef Py_ssize_t m = basis.shape[0]
    cdef Py_ssize_t n = cost.shape[0]
    cdef long long it = iter_start
    cdef long long done = 0
    cdef Py_ssize_t i, j, k, s, e, jbest, leave
    cdef double zj, zbest, acc, wi, theta, piv, ratio, tie_cut
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_arr = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr = np.empty(m)
    cdef double[::1] y = y_arr
    cdef double[::1] w = w_arr
    cdef cnp.int64_t[::1] iptr = indptr
    cdef cnp.int64_t[::1] idx = indices
    cdef double[::1] dat = data
    cdef double[::1] cst = cost
    cdef cnp.int64_t[::1] bas = basis
    cdef double[:, ::1] bv = binv
    cdef double[::1] x = xb
    cdef cnp.uint8_t[::1] ent = enterable

    while True:
        if it >= max_iter:
            return ITER_LIMIT, done

        # duals: y = cost[basis] @ binv
        for k in range(m):
            acc = 0.0
            for i in range(m):
                acc += cst[bas[i]] * bv[i, k]
            y[k] = acc

        # entering column
        jbest = -1
        if it < dantzig_limit:
            zbest = -entering_tol
            for j in range(n):
                if not ent[j]:
                    continue
                acc = cst[j]
                s = iptr[j]
                e = iptr[j + 1]
                while s < e:
                    acc -= y[idx[s]] * dat[s]
                    s += 1
                if acc < zbest:
                    zbest = acc
                    jbest = j
        else:
            for j in range(n):
                if not ent[j]:
                    continue
                acc = cst[j]
                s = iptr[j]
                e = iptr[j + 1]
                while s < e:
                    acc -= y[idx[s]] * dat[s]
                    s += 1
                if acc < -entering_tol:
                    jbest = j
                    break
        if jbest < 0:
            return OPTIMAL, done

        # w = binv @ A_j
        for i in range(m):
            w[i] = 0.0
        s = iptr[jbest]
        e = iptr[jbest + 1]
        while s < e:
            k = idx[s]
            piv = dat[s]
            for i in range(m):
                w[i] += bv[i, k] * piv
            s += 1

        # ratio test
        theta = -1.0
        leave = -1
        for i in range(m):
            if w[i] > pivot_tol:
                ratio = x[i] / w[i]
                if leave < 0 or ratio < theta:
                    theta = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED, done
        tie_cut = theta + _RATIO_TIE * (1.0 + (theta if theta >= 0 else -theta))
        for i in range(m):
            if w[i] > pivot_tol and x[i] / w[i] <= tie_cut and bas[i] < bas[leave]:
                leave = i

        # pivot
        piv = w[leave]
        theta = x[leave] / piv
        for i in range(m):
            x[i] -= theta * w[i]
        x[leave] = theta
        for k in range(m):
            bv[leave, k] /= piv
        for i in range(m):
            if i == leave:
                continue
            wi = w[i]
            if wi != 0.0:
                for k in range(m):
                    bv[i, k] -= wi * bv[leave, k]
        bas[leave] = jbest

        it += 1
        done += 1
        if done % refactor_every == 0:
            if not refactorize(indptr, indices, data, b, basis, binv, xb, feas_tol):
                return ITER_LIMIT, done

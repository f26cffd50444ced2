"""Pure-numpy revised simplex kernel (fallback backend).

The compiled extension `_simplex_core` implements the same loop with the
same pivot selection; either backend can drive `linprog.solve_lp`.

Column matrix is CSC (indptr/indices/data) over the standard-form rows.
Pivot rules: Dantzig (most negative reduced cost, lowest index on ties)
until the global iteration count reaches `dantzig_limit`, then Bland
(lowest index with negative reduced cost).  Leaving row: minimum ratio,
ties broken by the smallest basic variable index.
"""

import numpy as np

BACKEND_NAME = "python"

OPTIMAL = 0
UNBOUNDED = 1
ITER_LIMIT = 2

_RATIO_TIE = 1e-12


def _column_sums(indptr, indices, data, y):
    """Per-column dot products y . A_j for a CSC matrix."""
    t = data * y[indices]
    t = np.append(t, 0.0)  # guard reduceat against trailing empty columns
    sums = np.add.reduceat(t, indptr[:-1])
    sums[indptr[:-1] == indptr[1:]] = 0.0
    return sums


def refactorize(indptr, indices, data, b, basis, binv, xb, feas_tol):
    """Recompute the basis inverse and basic values from scratch."""
    m = basis.shape[0]
    bmat = np.zeros((m, m))
    for i, j in enumerate(basis):
        s, e = indptr[j], indptr[j + 1]
        bmat[indices[s:e], i] = data[s:e]
    try:
        binv[:, :] = np.linalg.inv(bmat)
    except np.linalg.LinAlgError:
        return False
    xb[:] = binv @ b
    xb[(xb < 0) & (xb >= -feas_tol)] = 0.0
    return True


def run_phase(
    indptr,
    indices,
    data,
    cost,
    b,
    basis,
    binv,
    xb,
    enterable,
    entering_tol,
    pivot_tol,
    feas_tol,
    dantzig_limit,
    max_iter,
    iter_start,
    refactor_every,
):
    """Run simplex pivots until optimal/unbounded or the iteration cap.

    Mutates basis, binv and xb in place; returns (code, iterations_done).
    """
    it = iter_start
    done = 0
    mask = enterable.astype(bool)
    while True:
        if it >= max_iter:
            return ITER_LIMIT, done
        y = cost[basis] @ binv
        z = cost - _column_sums(indptr, indices, data, y)
        z[~mask] = np.inf
        if it < dantzig_limit:
            j = int(np.argmin(z))
            if not (z[j] < -entering_tol):
                return OPTIMAL, done
        else:
            neg = np.flatnonzero(z < -entering_tol)
            if neg.size == 0:
                return OPTIMAL, done
            j = int(neg[0])

        s, e = indptr[j], indptr[j + 1]
        w = binv[:, indices[s:e]] @ data[s:e]
        cand = w > pivot_tol
        if not np.any(cand):
            return UNBOUNDED, done
        ratios = np.where(cand, xb / np.where(cand, w, 1.0), np.inf)
        theta = float(np.min(ratios))
        ties = np.flatnonzero(ratios <= theta + _RATIO_TIE * (1.0 + abs(theta)))
        leave = int(ties[np.argmin(basis[ties])])

        piv = w[leave]
        theta = xb[leave] / piv
        xb -= theta * w
        xb[leave] = theta
        binv[leave, :] /= piv
        wl = w.copy()
        wl[leave] = 0.0
        binv -= wl[:, None] * binv[leave][None, :]
        basis[leave] = j

        it += 1
        done += 1
        if done % refactor_every == 0:
            if not refactorize(indptr, indices, data, b, basis, binv, xb, feas_tol):
                return ITER_LIMIT, done

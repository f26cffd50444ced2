"""Deterministic two-phase simplex over sparse columns.

All transport solvers reduce to `solve_lp`; `probe_optimal_face` re-solves
with random secondary objectives to expose alternative optima.

The hot pivot loop lives in a backend kernel: the compiled extension
`partial_ot._simplex_core` when it is importable, otherwise the pure-numpy
twin `partial_ot._simplex_py`.  Set PARTIAL_OT_PURE_PYTHON=1 to force the
fallback.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _simplex_py

try:
    from . import _simplex_core
except ImportError:  # extension not built; fall back to numpy kernel
    _simplex_core = None

_FORCE_PY = os.environ.get("PARTIAL_OT_PURE_PYTHON", "") not in ("", "0")
_kernel = _simplex_py if (_FORCE_PY or _simplex_core is None) else _simplex_core


def backend_name():
    """Name of the active simplex kernel ('compiled' or 'python')."""
    return _kernel.BACKEND_NAME


def available_backends():
    out = {"python": _simplex_py}
    if _simplex_core is not None:
        out["compiled"] = _simplex_core
    return out


class LpStallError(RuntimeError):
    """Iteration cap exceeded or the basis became numerically unusable."""


@dataclass(frozen=True)
class CscMatrix:
    """Minimal immutable sparse matrix in compressed-column form."""

    n_rows: int
    n_cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @classmethod
    def from_columns(cls, n_rows, columns):
        """Build from a list of (row_indices, values) pairs, one per column."""
        indptr = np.zeros(len(columns) + 1, dtype=np.int64)
        rows, vals = [], []
        for j, (r, v) in enumerate(columns):
            r = np.asarray(r, dtype=np.int64)
            v = np.asarray(v, dtype=np.float64)
            order = np.argsort(r, kind="stable")
            rows.append(r[order])
            vals.append(v[order])
            indptr[j + 1] = indptr[j] + len(r)
        indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
        data = np.concatenate(vals) if vals else np.zeros(0, dtype=np.float64)
        if indices.size and (indices.min() < 0 or indices.max() >= n_rows):
            raise ValueError("row index out of range")
        return cls(n_rows, len(columns), indptr, indices, data)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        cols = [(np.flatnonzero(a[:, j]), a[np.flatnonzero(a[:, j]), j]) for j in range(a.shape[1])]
        return cls.from_columns(a.shape[0], cols)

    def column(self, j):
        s, e = self.indptr[j], self.indptr[j + 1]
        return self.indices[s:e], self.data[s:e]


@dataclass(frozen=True)
class LinearProgram:
    """min c.x  s.t.  A x = b,  G x <= h,  x >= 0."""

    c: np.ndarray
    a_eq: CscMatrix | None = None
    b_eq: np.ndarray | None = None
    a_ub: CscMatrix | None = None
    b_ub: np.ndarray | None = None

    def __post_init__(self):
        c = np.ascontiguousarray(self.c, dtype=np.float64)
        object.__setattr__(self, "c", c)
        if not np.all(np.isfinite(c)):
            raise ValueError("objective must be finite")
        for mat, rhs, name in ((self.a_eq, self.b_eq, "eq"), (self.a_ub, self.b_ub, "ub")):
            if (mat is None) != (rhs is None):
                raise ValueError(f"{name}: matrix and rhs must be given together")
            if mat is not None:
                rhs = np.ascontiguousarray(rhs, dtype=np.float64)
                object.__setattr__(self, f"b_{name}", rhs)
                if mat.n_cols != c.shape[0]:
                    raise ValueError(f"{name}: column count does not match objective")
                if rhs.shape != (mat.n_rows,):
                    raise ValueError(f"{name}: rhs length does not match rows")
                if not (np.all(np.isfinite(rhs)) and np.all(np.isfinite(mat.data))):
                    raise ValueError(f"{name}: entries must be finite")

    @property
    def n_vars(self):
        return self.c.shape[0]

    @property
    def n_rows(self):
        rows = 0
        if self.a_eq is not None:
            rows += self.a_eq.n_rows
        if self.a_ub is not None:
            rows += self.a_ub.n_rows
        return rows


@dataclass(frozen=True)
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    value: float
    x: np.ndarray | None
    iterations: int
    dual: np.ndarray | None = None
    residual: float = 0.0


@dataclass
class _StandardForm:
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    b: np.ndarray
    row_sign: np.ndarray
    n_struct: int
    n_slack: int
    art_cols: np.ndarray  # column index of the artificial for each row, -1 if none
    init_basis: np.ndarray


def _standardize(p: LinearProgram):
    """Stack eq rows over ub rows, add slacks, flip rows to make b >= 0,
    and append one artificial column per row that lacks a feasible slack."""
    m_eq = p.a_eq.n_rows if p.a_eq is not None else 0
    m_ub = p.a_ub.n_rows if p.a_ub is not None else 0
    m = m_eq + m_ub
    n = p.n_vars
    b_all = np.concatenate(
        [p.b_eq if p.b_eq is not None else np.zeros(0), p.b_ub if p.b_ub is not None else np.zeros(0)]
    )
    row_sign = np.where(b_all < 0, -1.0, 1.0)

    cols = []
    for j in range(n):
        rows_j, vals_j = [], []
        if p.a_eq is not None:
            r, v = p.a_eq.column(j)
            rows_j.append(r)
            vals_j.append(v * row_sign[r])
        if p.a_ub is not None:
            r, v = p.a_ub.column(j)
            rows_j.append(r + m_eq)
            vals_j.append(v * row_sign[r + m_eq])
        rows = np.concatenate(rows_j) if rows_j else np.zeros(0, dtype=np.int64)
        vals = np.concatenate(vals_j) if vals_j else np.zeros(0)
        cols.append((rows, vals))

    n_slack = m_ub
    for i in range(m_ub):
        row = m_eq + i
        cols.append((np.array([row]), np.array([row_sign[row]])))

    art_cols = np.full(m, -1, dtype=np.int64)
    init_basis = np.zeros(m, dtype=np.int64)
    next_col = n + n_slack
    for row in range(m):
        slack_ok = row >= m_eq and row_sign[row] > 0
        if slack_ok:
            init_basis[row] = n + (row - m_eq)
        else:
            cols.append((np.array([row]), np.array([1.0])))
            art_cols[row] = next_col
            init_basis[row] = next_col
            next_col += 1

    csc = CscMatrix.from_columns(m, cols)
    return _StandardForm(
        indptr=csc.indptr,
        indices=csc.indices,
        data=csc.data,
        b=row_sign * b_all,
        row_sign=row_sign,
        n_struct=n,
        n_slack=n_slack,
        art_cols=art_cols,
        init_basis=init_basis,
    )


def _pivot_out_artificials(sf, basis, binv, xb):
    """After phase 1, remove basic artificials where possible.

    Rows whose tableau row is zero on every structural/slack column are
    redundant; their artificial stays basic at value 0 and is never touched
    again (its tableau row stays orthogonal to all real columns).
    """
    n_real = sf.n_struct + sf.n_slack
    for pos in range(basis.shape[0]):
        if basis[pos] < n_real:
            continue
        row = binv[pos]
        prods = _simplex_py._column_sums(sf.indptr[: n_real + 1], sf.indices[: sf.indptr[n_real]], sf.data[: sf.indptr[n_real]], row)
        nz = np.flatnonzero(np.abs(prods) > 1e-8)
        entered = False
        for j in nz:
            if j in basis:
                continue
            # degenerate pivot: xb[pos] ~ 0 after a feasible phase 1
            piv = prods[j]
            s, e = sf.indptr[j], sf.indptr[j + 1]
            w = binv[:, sf.indices[s:e]] @ sf.data[s:e]
            theta = xb[pos] / piv
            xb -= theta * w
            xb[pos] = theta
            binv[pos, :] /= piv
            wl = w.copy()
            wl[pos] = 0.0
            binv -= wl[:, None] * binv[pos][None, :]
            basis[pos] = j
            entered = True
            break
        if not entered:
            xb[pos] = 0.0  # redundant row


def solve_lp(p, *, feas_tol=None, opt_tol=None, max_iter=None, dantzig_limit=None):
    """Solve a LinearProgram with the deterministic two-phase simplex.

    Returns an LpSolution whose status is 'optimal', 'infeasible' or
    'unbounded'.  Exceeding the iteration cap raises LpStallError; it is
    never reported as a silent suboptimal result.
    """
    sf = _standardize(p)
    m = sf.b.shape[0]
    n_total = sf.n_struct + sf.n_slack + int(np.sum(sf.art_cols >= 0))
    n_real = sf.n_struct + sf.n_slack

    b_norm = float(np.max(np.abs(sf.b))) if m else 0.0
    c_norm = float(np.max(np.abs(p.c))) if p.c.size else 0.0
    if feas_tol is None:
        feas_tol = 1e-9 * (1.0 + b_norm)
    if opt_tol is None:
        opt_tol = 1e-9 * (1.0 + c_norm)
    if max_iter is None:
        max_iter = 50 * (n_real + m)
    if dantzig_limit is None:
        dantzig_limit = max(1, max_iter // 5)

    if m == 0:
        # No constraints: optimum is 0 unless some cost is negative (unbounded).
        if np.any(p.c < 0):
            return LpSolution("unbounded", -np.inf, None, 0)
        x = np.zeros(sf.n_struct)
        return LpSolution("optimal", 0.0, x, 0, dual=np.zeros(0), residual=0.0)

    basis = sf.init_basis.copy()
    binv = np.eye(m)
    xb = sf.b.copy()
    iterations = 0

    kern_args = (sf.indptr, sf.indices, sf.data)
    have_artificials = bool(np.any(sf.art_cols >= 0))
    enterable = np.ones(n_total, dtype=np.uint8)
    enterable[n_real:] = 0  # artificials never (re-)enter

    if have_artificials:
        cost1 = np.zeros(n_total)
        cost1[n_real:] = 1.0
        p1_tol = 1e-9 * (1.0 + b_norm)
        code, done = _kernel.run_phase(
            *kern_args, cost1, sf.b, basis, binv, xb, enterable,
            p1_tol, 1e-10, feas_tol, dantzig_limit, max_iter, iterations, 64,
        )
        iterations += done
        if code == _simplex_py.ITER_LIMIT:
            raise LpStallError(f"phase 1 exceeded {max_iter} iterations")
        if code == _simplex_py.UNBOUNDED:
            raise LpStallError("phase 1 reported an unbounded direction")
        _simplex_py.refactorize(*kern_args, sf.b, basis, binv, xb, feas_tol)
        art_mass = float(np.sum(xb[basis >= n_real]))
        if art_mass > feas_tol:
            return LpSolution("infeasible", np.nan, None, iterations)
        _pivot_out_artificials(sf, basis, binv, xb)

    cost2 = np.zeros(n_total)
    cost2[: sf.n_struct] = p.c
    for attempt in range(3):
        code, done = _kernel.run_phase(
            *kern_args, cost2, sf.b, basis, binv, xb, enterable,
            opt_tol, 1e-10, feas_tol, dantzig_limit, max_iter, iterations, 64,
        )
        iterations += done
        if code == _simplex_py.ITER_LIMIT:
            raise LpStallError(f"simplex exceeded {max_iter} iterations")
        if code == _simplex_py.UNBOUNDED:
            return LpSolution("unbounded", -np.inf, None, iterations)
        # certify: refactorize, then check primal feasibility and reduced costs
        if not _simplex_py.refactorize(*kern_args, sf.b, basis, binv, xb, feas_tol):
            raise LpStallError("basis matrix became singular")
        y = cost2[basis] @ binv
        z = cost2 - _simplex_py._column_sums(sf.indptr, sf.indices, sf.data, y)
        ok_primal = bool(np.all(xb >= -feas_tol))
        ok_dual = bool(np.all(z[enterable.astype(bool)] >= -opt_tol))
        if ok_primal and ok_dual:
            break
    else:
        raise LpStallError("could not certify optimality after repeated repair")

    x_full = np.zeros(n_total)
    x_full[basis] = np.maximum(xb, 0.0)
    x = x_full[: sf.n_struct]
    value = float(p.c @ x)
    dual = y * sf.row_sign
    residual = float(np.max(np.abs(binv @ sf.b - xb))) if m else 0.0
    return LpSolution("optimal", value, x, iterations, dual=dual, residual=residual)


def probe_optimal_face(p, sol, probes=8, seed=0, *, opt_tol=None):
    """Re-optimize random objectives over {x feasible : c.x <= sol.value + tol}.

    Returns distinct vertices of the optimal face, each reported with its
    primary objective value.  Requires `sol` to be optimal for `p`.
    """
    if sol.status != "optimal":
        raise ValueError("probe requires an optimal base solution")
    c_norm = float(np.max(np.abs(p.c))) if p.c.size else 0.0
    if opt_tol is None:
        opt_tol = 1e-9 * (1.0 + c_norm)
    n = p.n_vars
    cap_row = p.a_ub.n_rows if p.a_ub is not None else 0
    cols = []
    for j in range(n):
        rows, vals = (p.a_ub.column(j) if p.a_ub is not None else (np.zeros(0, dtype=np.int64), np.zeros(0)))
        if p.c[j] != 0.0:
            rows = np.concatenate([rows, [cap_row]])
            vals = np.concatenate([vals, [p.c[j]]])
        cols.append((rows, vals))
    a_ub = CscMatrix.from_columns(cap_row + 1, cols)
    b_ub = np.concatenate([p.b_ub if p.b_ub is not None else np.zeros(0), [sol.value + opt_tol]])

    rng = np.random.default_rng(seed)
    found = []
    for _ in range(probes):
        c_rand = rng.uniform(-1.0, 1.0, size=n)
        probe_lp = LinearProgram(c_rand, p.a_eq, p.b_eq, a_ub, b_ub)
        res = solve_lp(probe_lp)
        if res.status != "optimal":
            continue
        primary = float(p.c @ res.x)
        if all(np.max(np.abs(res.x - f.x)) > 1e-9 for f in found):
            found.append(LpSolution("optimal", primary, res.x, res.iterations))
    return found

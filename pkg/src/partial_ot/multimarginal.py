"""N-marginal balanced and partial transport over sparse cost tensors.

The pairwise quadratic cost sums squared distances over ordered pairs of
coordinates.  A generalized cost family minimizes a sum of per-marginal
costs over a finite candidate set of anchor points.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .linprog import CscMatrix, LinearProgram, solve_lp
from .measure import DiscreteMeasure
from .transport import MASS_TOL, _ENTRY_TOL

DEFAULT_TENSOR_CAP = 200_000
TENSOR_CAP_ENV = "PARTIAL_OT_MAX_TENSOR"


class TensorSizeError(ValueError):
    """Raised when the tuple grid exceeds the configured cap."""


def _tensor_cap():
    raw = os.environ.get(TENSOR_CAP_ENV, "")
    return int(raw) if raw else DEFAULT_TENSOR_CAP


@dataclass(frozen=True)
class TensorPlan:
    """Sparse N-marginal plan: (index tuple, mass) entries plus its cost.

    `marginals` are the dominating measures the plan was solved against;
    the plan's own j-th marginal is available via `marginal(j)`.
    """

    entries: tuple
    marginals: tuple
    cost: float
    diagnostics: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((tuple(int(i) for i in t), float(w)) for t, w in self.entries))
        object.__setattr__(self, "marginals", tuple(self.marginals))

    def __len__(self):
        return len(self.entries)

    @property
    def n_marginals(self):
        return len(self.marginals)

    @property
    def mass(self):
        return float(sum(w for _, w in self.entries))

    def index_array(self):
        if not self.entries:
            return np.zeros((0, self.n_marginals), dtype=np.int64)
        return np.asarray([t for t, _ in self.entries], dtype=np.int64)

    def masses(self):
        return np.asarray([w for _, w in self.entries], dtype=np.float64)

    def points(self, j):
        """Coordinates of the j-th marginal for every entry, as an (n, d) array."""
        idx = self.index_array()
        return self.marginals[j].points[idx[:, j]]

    def marginal(self, j):
        mu = self.marginals[j]
        w = np.zeros(len(mu))
        idx = self.index_array()
        if len(idx):
            np.add.at(w, idx[:, j], self.masses())
        keep = w > 0
        return DiscreteMeasure(mu.points[keep].reshape(-1, mu.dim), w[keep])


@dataclass(frozen=True)
class CostSpec:
    """Cost family for the N-marginal solvers.

    kind 'pairwise_quadratic' uses the sum of squared distances over all
    ordered coordinate pairs.  kind 'generalized' takes per-marginal costs
    c_j(x_j, y) minimized over a finite candidate set of y points; with
    `zero_on_diagonal` the costs are asserted nonnegative (and zero only
    when all arguments coincide with y).
    """

    kind: str = "pairwise_quadratic"
    cost_fns: tuple = None
    candidates: np.ndarray = None
    zero_on_diagonal: bool = False

    def __post_init__(self):
        if self.kind not in ("pairwise_quadratic", "generalized"):
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind == "generalized":
            if not self.cost_fns:
                raise ValueError("generalized cost needs per-marginal cost functions")
            object.__setattr__(self, "cost_fns", tuple(self.cost_fns))
            cand = np.asarray(self.candidates, dtype=np.float64)
            if cand.ndim == 1:
                cand = cand[:, None]
            if cand.shape[0] == 0:
                raise ValueError("candidate set must be nonempty")
            object.__setattr__(self, "candidates", cand)

    @classmethod
    def quadratic(cls):
        return cls("pairwise_quadratic")

    @classmethod
    def generalized(cls, cost_fns, candidates, zero_on_diagonal=False):
        return cls("generalized", tuple(cost_fns), candidates, zero_on_diagonal)


def pairwise_quadratic_cost(points):
    """Sum of squared distances over ordered pairs (j, k), j != k."""
    pts = [np.atleast_1d(np.asarray(x, dtype=np.float64)) for x in points]
    if len({p.shape[0] for p in pts}) > 1:
        raise ValueError("dimension mismatch")
    pts = np.asarray(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sum(diff * diff))


def average_point(points):
    """Coordinate-wise mean of an N-tuple of points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts.mean(axis=0)


def barycentric_identity_check(points, candidates=()):
    """Pair (lhs, rhs) for the cost identity at one tuple.

    lhs is the pairwise quadratic cost; rhs is 2N times the best value of
    sum_j ||x_j - y||^2 over the mean point and every supplied candidate.
    The two agree (to rounding) exactly because the mean is the unique
    minimizer, so a candidate beating the mean would surface as lhs != rhs.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    lhs = pairwise_quadratic_cost(pts)
    ys = [average_point(pts)] + [np.atleast_1d(np.asarray(y, dtype=np.float64)) for y in candidates]
    best = min(float(np.sum((pts - y[None, :]) ** 2)) for y in ys)
    return lhs, 2.0 * n * best


def generalized_cost(points, spec):
    """Minimum of sum_j c_j(x_j, y) over the finite candidate set.

    Returns (cost, argmin y); ties are broken by lexicographic order of y.
    """
    if spec.kind != "generalized":
        raise ValueError("cost spec is not generalized")
    pts = [np.atleast_1d(np.asarray(x, dtype=np.float64)) for x in points]
    if len(pts) != len(spec.cost_fns):
        raise ValueError("need one point per cost function")
    best_cost, best_y = np.inf, None
    order = np.lexsort(spec.candidates.T[::-1])
    for k in order:
        y = spec.candidates[k]
        total = float(sum(fn(x, y) for fn, x in zip(spec.cost_fns, pts)))
        if spec.zero_on_diagonal and total < -1e-12:
            raise ValueError("cost functions must be nonnegative in zero_on_diagonal mode")
        if total < best_cost - 1e-15:
            best_cost, best_y = total, y
    return best_cost, best_y


def _tuple_grid(marginals, cap):
    sizes = [len(m) for m in marginals]
    total = 1
    for s in sizes:
        total *= s
        if total > cap:
            raise TensorSizeError(
                f"tuple grid {sizes} exceeds cap {cap}; "
                f"set {TENSOR_CAP_ENV} to raise it"
            )
    return sizes, total


def _tuple_costs(marginals, cost_spec, sizes, total):
    """Flat cost vector over the tuple grid, in C order of the index tuples."""
    idx = np.unravel_index(np.arange(total), sizes)
    if cost_spec.kind == "pairwise_quadratic":
        coords = [m.points[ix] for m, ix in zip(marginals, idx)]
        c = np.zeros(total)
        n = len(marginals)
        for j in range(n):
            for k in range(j + 1, n):
                c += 2.0 * np.sum((coords[j] - coords[k]) ** 2, axis=1)
        return c, idx
    c = np.empty(total)
    for flat in range(total):
        pts = [marginals[j].points[idx[j][flat]] for j in range(len(marginals))]
        c[flat], _ = generalized_cost(pts, cost_spec)
    return c, idx


def _plan_from_solution(x, marginals, idx, value, scale, sol=None):
    keep = np.flatnonzero(x > _ENTRY_TOL * scale)
    entries = [(tuple(int(ix[k]) for ix in idx), float(x[k])) for k in keep]
    diag = {"iterations": sol.iterations, "residual": sol.residual} if sol is not None else None
    return TensorPlan(entries, marginals, float(value), diag)


def solve_mm(marginals, cost_spec=None, *, mass_tol=MASS_TOL):
    """Balanced N-marginal optimal transport (all marginal masses equal)."""
    marginals = tuple(marginals)
    cost_spec = cost_spec or CostSpec.quadratic()
    masses = [m.mass for m in marginals]
    ref = masses[0]
    if any(abs(ms - ref) > mass_tol * (1.0 + ref) for ms in masses):
        raise ValueError(f"marginal masses must be equal, got {masses}")
    sizes, total = _tuple_grid(marginals, _tensor_cap())
    if total == 0:
        return TensorPlan((), marginals, 0.0)
    c, idx = _tuple_costs(marginals, cost_spec, sizes, total)

    offsets = np.concatenate([[0], np.cumsum(sizes)])[:-1]
    rows = np.column_stack([ix + off for ix, off in zip(idx, offsets)]).astype(np.int64)
    cols = [(rows[t], np.ones(len(marginals))) for t in range(total)]
    a_eq = CscMatrix.from_columns(int(np.sum(sizes)), cols)
    b_eq = np.concatenate([m.weights for m in marginals])
    sol = solve_lp(LinearProgram(c, a_eq=a_eq, b_eq=b_eq))
    if sol.status != "optimal":
        raise RuntimeError(f"balanced N-marginal LP ended with status {sol.status}")
    return _plan_from_solution(sol.x, marginals, idx, sol.value, max(1.0, float(np.max(b_eq))), sol)


def _partial_lp(marginals, m, cost_spec):
    """LinearProgram for the partial problem plus the tuple index arrays."""
    sizes, total = _tuple_grid(marginals, _tensor_cap())
    c, idx = _tuple_costs(marginals, cost_spec, sizes, total)
    n_ub = int(np.sum(sizes))
    offsets = np.concatenate([[0], np.cumsum(sizes)])[:-1]
    rows_ub = np.column_stack([ix + off for ix, off in zip(idx, offsets)]).astype(np.int64)
    ub_cols = [(rows_ub[t], np.ones(len(marginals))) for t in range(total)]
    a_ub = CscMatrix.from_columns(n_ub, ub_cols)
    b_ub = np.concatenate([mu.weights for mu in marginals])
    a_eq = CscMatrix.from_columns(1, [(np.zeros(1, dtype=np.int64), np.ones(1))] * total)
    lp = LinearProgram(c, a_eq=a_eq, b_eq=np.array([float(m)]), a_ub=a_ub, b_ub=b_ub)
    return lp, idx, max(1.0, float(np.max(b_ub)))


def solve_mm_partial(marginals, m, cost_spec=None, *, mass_tol=MASS_TOL):
    """Partial N-marginal transport: j-th marginal dominated, total mass m."""
    marginals = tuple(marginals)
    cost_spec = cost_spec or CostSpec.quadratic()
    cap_mass = min(mu.mass for mu in marginals)
    if m < -mass_tol or m > cap_mass + mass_tol * (1.0 + cap_mass):
        raise ValueError(f"m={m} outside [0, {cap_mass}]")
    if m <= _ENTRY_TOL * (1.0 + cap_mass):
        return TensorPlan((), marginals, 0.0)
    lp, idx, scale = _partial_lp(marginals, m, cost_spec)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise RuntimeError(f"partial N-marginal LP ended with status {sol.status}")
    return _plan_from_solution(sol.x, marginals, idx, sol.value, scale, sol)


def probe_partial_plans(marginals, m, cost_spec=None, probes=8, seed=0):
    """Distinct optimal plans of the partial problem found by face probing.

    Solves once, then re-optimizes random secondary objectives over the
    optimal face; the returned plans all share the optimal cost up to the
    solver tolerance.
    """
    from .linprog import probe_optimal_face

    marginals = tuple(marginals)
    cost_spec = cost_spec or CostSpec.quadratic()
    lp, idx, scale = _partial_lp(marginals, m, cost_spec)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise RuntimeError(f"partial N-marginal LP ended with status {sol.status}")
    vertices = probe_optimal_face(lp, sol, probes=probes, seed=seed)
    return [_plan_from_solution(v.x, marginals, idx, v.value, scale) for v in vertices]

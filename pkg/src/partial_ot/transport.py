"""Two-marginal balanced and partial optimal transport with quadratic cost.

The partial problem is solved by augmentation: a dummy atom on each side
absorbs the untransported mass at zero cost, and the dummy-to-dummy arc is
excluded from the columns entirely so the real transported mass is exactly
the requested amount.
"""

from dataclasses import dataclass, field

import numpy as np

from .linprog import CscMatrix, LinearProgram, solve_lp
from .measure import DiscreteMeasure

MASS_TOL = 1e-8

# Entries below this fraction of the largest input weight are structural
# zeros left over from degenerate bases and are dropped from plans.
_ENTRY_TOL = 1e-12


@dataclass(frozen=True)
class Coupling:
    """Sparse transport plan between two discrete measures.

    entries: (n, 3) array of rows (i, j, mass) indexing source/target atoms.
    """

    entries: np.ndarray
    source: DiscreteMeasure
    target: DiscreteMeasure
    diagnostics: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "entries", e)

    def __len__(self):
        return self.entries.shape[0]

    @property
    def mass(self):
        return float(np.sum(self.entries[:, 2]))

    def marginal(self, side):
        """Active submeasure on one side (0 = source, 1 = target)."""
        mu = (self.source, self.target)[side]
        w = np.zeros(len(mu))
        idx = self.entries[:, side].astype(np.int64)
        np.add.at(w, idx, self.entries[:, 2])
        keep = w > 0
        return DiscreteMeasure(mu.points[keep].reshape(-1, mu.dim), w[keep])

    def cost(self):
        i = self.entries[:, 0].astype(np.int64)
        j = self.entries[:, 1].astype(np.int64)
        d2 = np.sum((self.source.points[i] - self.target.points[j]) ** 2, axis=1)
        return float(np.sum(self.entries[:, 2] * d2))


@dataclass(frozen=True)
class PartialPlanReport:
    plan: Coupling
    cost: float
    active_left: DiscreteMeasure
    active_right: DiscreteMeasure
    m: float


def _squared_distances(mu, nu):
    diff = mu.points[:, None, :] - nu.points[None, :, :]
    return np.sum(diff * diff, axis=2)


def solve_ot(mu, nu, *, mass_tol=MASS_TOL):
    """Balanced optimal transport; returns (Coupling, squared-distance cost)."""
    if mu.dim != nu.dim and len(mu) and len(nu):
        raise ValueError("dimension mismatch")
    if abs(mu.mass - nu.mass) > mass_tol * (1.0 + max(mu.mass, nu.mass)):
        raise ValueError(f"mass mismatch: {mu.mass} vs {nu.mass}")
    n1, n2 = len(mu), len(nu)
    if n1 == 0 or n2 == 0:
        return Coupling(np.zeros((0, 3)), mu, nu), 0.0

    cost = _squared_distances(mu, nu).ravel()
    cols = [
        (np.array([i, n1 + j]), np.array([1.0, 1.0]))
        for i in range(n1)
        for j in range(n2)
    ]
    a_eq = CscMatrix.from_columns(n1 + n2, cols)
    b_eq = np.concatenate([mu.weights, nu.weights])
    sol = solve_lp(LinearProgram(cost, a_eq=a_eq, b_eq=b_eq))
    if sol.status != "optimal":
        raise RuntimeError(f"transport LP ended with status {sol.status}")

    x = sol.x.reshape(n1, n2)
    scale = max(1.0, float(np.max(b_eq))) if b_eq.size else 1.0
    ii, jj = np.nonzero(x > _ENTRY_TOL * scale)
    entries = np.column_stack([ii, jj, x[ii, jj]])
    diag = {"iterations": sol.iterations, "residual": sol.residual}
    return Coupling(entries, mu, nu, diag), sol.value


def solve_partial_ot(mu, nu, m, *, mass_tol=MASS_TOL):
    """Optimal partial transport of mass exactly m between submeasures.

    Augments each side with a dummy atom absorbing the leftover mass at
    zero cost; the dummy-to-dummy arc is not a column, which pins the real
    transported mass to m.
    """
    if mu.dim != nu.dim and len(mu) and len(nu):
        raise ValueError("dimension mismatch")
    cap = min(mu.mass, nu.mass)
    if m < -mass_tol or m > cap + mass_tol * (1.0 + cap):
        raise ValueError(f"m={m} outside [0, {cap}]")
    empty = DiscreteMeasure(np.zeros((0, max(mu.dim, 1))), np.zeros(0))
    if m <= _ENTRY_TOL * (1.0 + cap):
        plan = Coupling(np.zeros((0, 3)), mu, nu)
        return PartialPlanReport(plan, 0.0, empty, empty, float(m))

    n1, n2 = len(mu), len(nu)
    dummy_left_w = nu.mass - m
    dummy_right_w = mu.mass - m
    use_dl = dummy_left_w > _ENTRY_TOL * (1.0 + cap)
    use_dr = dummy_right_w > _ENTRY_TOL * (1.0 + cap)

    # rows: real-left | dummy-left? | real-right | dummy-right?
    row_dl = n1
    row_r0 = n1 + (1 if use_dl else 0)
    row_dr = row_r0 + n2
    n_rows = row_dr + (1 if use_dr else 0)

    d2 = _squared_distances(mu, nu)
    cols, cost = [], []
    pair_of_col = []
    for i in range(n1):
        for j in range(n2):
            cols.append((np.array([i, row_r0 + j]), np.array([1.0, 1.0])))
            cost.append(d2[i, j])
            pair_of_col.append((i, j))
    if use_dr:
        for i in range(n1):
            cols.append((np.array([i, row_dr]), np.array([1.0, 1.0])))
            cost.append(0.0)
            pair_of_col.append(None)
    if use_dl:
        for j in range(n2):
            cols.append((np.array([row_dl, row_r0 + j]), np.array([1.0, 1.0])))
            cost.append(0.0)
            pair_of_col.append(None)

    b = np.zeros(n_rows)
    b[:n1] = mu.weights
    b[row_r0 : row_r0 + n2] = nu.weights
    if use_dl:
        b[row_dl] = dummy_left_w
    if use_dr:
        b[row_dr] = dummy_right_w

    sol = solve_lp(LinearProgram(np.asarray(cost), a_eq=CscMatrix.from_columns(n_rows, cols), b_eq=b))
    if sol.status != "optimal":
        raise RuntimeError(f"partial transport LP ended with status {sol.status}")

    scale = max(1.0, float(np.max(b)))
    rows = [
        (pair[0], pair[1], sol.x[k])
        for k, pair in enumerate(pair_of_col)
        if pair is not None and sol.x[k] > _ENTRY_TOL * scale
    ]
    diag = {"iterations": sol.iterations, "residual": sol.residual}
    plan = Coupling(np.asarray(rows, dtype=np.float64).reshape(-1, 3), mu, nu, diag)
    return PartialPlanReport(plan, sol.value, plan.marginal(0), plan.marginal(1), float(m))


def extract_monotone_map_1d(mu, nu, *, mass_tol=MASS_TOL):
    """Monotone (quantile) coupling of two balanced 1D measures.

    Returns (Coupling, cost); with quadratic cost this matches the LP
    optimum, which makes it an independent oracle for `solve_ot`.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("monotone map is defined for 1D measures only")
    if abs(mu.mass - nu.mass) > mass_tol * (1.0 + max(mu.mass, nu.mass)):
        raise ValueError(f"mass mismatch: {mu.mass} vs {nu.mass}")
    # canonical order is ascending in 1D; sweep matching cumulative masses
    entries = []
    i = j = 0
    left = float(mu.weights[0]) if len(mu) else 0.0
    right = float(nu.weights[0]) if len(nu) else 0.0
    while i < len(mu) and j < len(nu):
        step = min(left, right)
        if step > 0.0:
            entries.append((i, j, step))
        left -= step
        right -= step
        if left == 0.0:
            i += 1
            if i < len(mu):
                left = float(mu.weights[i])
        if right == 0.0:
            j += 1
            if j < len(nu):
                right = float(nu.weights[j])
    plan = Coupling(np.asarray(entries, dtype=np.float64).reshape(-1, 3), mu, nu)
    return plan, plan.cost()


def plan_is_graphical(plan, over, tol=1e-9):
    """True iff each support point of the `over` marginal appears in at most
    one plan entry, after merging entries with identical coordinates."""
    from .multimarginal import TensorPlan  # local import to avoid a cycle

    if isinstance(plan, Coupling):
        if over not in (0, 1):
            raise IndexError("coupling marginal index must be 0 or 1")
        if len(plan) == 0:
            return True
        idx = plan.entries[:, :2].astype(np.int64)
        points = [plan.source.points, plan.target.points]
        tuples = np.column_stack([points[s][idx[:, s]] for s in (0, 1)])
        anchor = idx[:, over]
    elif isinstance(plan, TensorPlan):
        if not (0 <= over < plan.n_marginals):
            raise IndexError(f"marginal index {over} out of range")
        if len(plan) == 0:
            return True
        idx = plan.index_array()
        tuples = np.column_stack([plan.marginals[s].points[idx[:, s]] for s in range(plan.n_marginals)])
        anchor = idx[:, over]
    else:
        raise TypeError("plan must be a Coupling or TensorPlan")

    for a in np.unique(anchor):
        rows = tuples[anchor == a]
        if rows.shape[0] <= 1:
            continue
        base = rows[0]
        if np.any(np.max(np.abs(rows - base), axis=1) > tol):
            return False
    return True

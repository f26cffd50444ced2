"""Partial barycenters through the plan-averaging equivalence.

The barycenter problem with a fixed transported mass is solved by taking
an optimal partial N-marginal plan and pushing it forward under the
coordinate average; the factor 2N links the two objective values exactly.
"""

from dataclasses import dataclass

import numpy as np

from .measure import DiscreteMeasure, pointwise_min, total_mass
from .multimarginal import TensorPlan, pairwise_quadratic_cost, solve_mm_partial
from .transport import MASS_TOL, solve_partial_ot


class NonGraphicalPlanError(RuntimeError):
    """A partial plan splits a barycenter atom across several source atoms."""

    def __init__(self, marginal_index, atom, message=None):
        self.marginal_index = marginal_index
        self.atom = np.asarray(atom)
        super().__init__(
            message
            or f"partial plan for marginal {marginal_index} is not graphical over "
            f"the barycenter atom at {self.atom}"
        )


@dataclass(frozen=True)
class BarycenterReport:
    barycenter: DiscreteMeasure
    objective: float
    source_plan: TensorPlan
    per_marginal_costs: tuple


def eval_objective(nu, marginals, m, *, mass_tol=MASS_TOL):
    """Sum over marginals of the partial transport value to nu (mass m)."""
    if abs(nu.mass - m) > mass_tol * (1.0 + m):
        raise ValueError(f"barycenter candidate has mass {nu.mass}, expected {m}")
    return float(sum(solve_partial_ot(rho, nu, m).cost for rho in marginals))


def average_pushforward(plan):
    """Image of a tensor plan under the coordinate-average map."""
    if len(plan) == 0:
        d = plan.marginals[0].dim if plan.marginals else 1
        return DiscreteMeasure(np.zeros((0, d)), np.zeros(0))
    coords = [plan.points(j) for j in range(plan.n_marginals)]
    mean = np.mean(coords, axis=0)
    return DiscreteMeasure(mean, plan.masses())


def solve_partial_barycenter(marginals, m, *, mass_tol=MASS_TOL):
    """Solve the fixed-mass barycenter problem via the N-marginal solver.

    Returns the barycenter (mass m), its objective value, the source plan,
    and the per-marginal partial transport costs.  The objective evaluated
    through independent two-marginal solves equals the plan cost divided
    by 2N up to solver tolerances.
    """
    marginals = tuple(marginals)
    plan = solve_mm_partial(marginals, m, mass_tol=mass_tol)
    nu = average_pushforward(plan)
    costs = tuple(solve_partial_ot(rho, nu, m).cost for rho in marginals) if m > 0 else tuple(0.0 for _ in marginals)
    return BarycenterReport(nu, float(sum(costs)), plan, costs)


def reconstruct_mm_plan(nu, marginals, m, *, mass_tol=MASS_TOL, tol=1e-9):
    """Glue per-marginal partial plans along nu into a tensor plan.

    Requires each partial plan to pair every nu atom with a single atom of
    the corresponding marginal; otherwise NonGraphicalPlanError reports the
    first offending atom (callers may refine nu by splitting it).
    """
    marginals = tuple(marginals)
    if abs(nu.mass - m) > mass_tol * (1.0 + m):
        raise ValueError(f"barycenter candidate has mass {nu.mass}, expected {m}")
    if len(nu) == 0:
        return TensorPlan((), marginals, 0.0)

    assignment = np.zeros((len(nu), len(marginals)), dtype=np.int64)
    for j, rho in enumerate(marginals):
        rpt = solve_partial_ot(rho, nu, m)
        seen = {}
        for i, k, w in rpt.plan.entries:
            k = int(k)
            if k in seen and seen[k] != int(i):
                raise NonGraphicalPlanError(j, nu.points[k])
            seen[k] = int(i)
        missing = [k for k in range(len(nu)) if k not in seen]
        if missing:
            raise NonGraphicalPlanError(j, nu.points[missing[0]], "barycenter atom received no mass")
        for k, i in seen.items():
            assignment[k, j] = i

    entries = []
    cost = 0.0
    for k in range(len(nu)):
        t = tuple(int(assignment[k, j]) for j in range(len(marginals)))
        pts = [marginals[j].points[t[j]] for j in range(len(marginals))]
        cost += nu.weights[k] * pairwise_quadratic_cost(pts)
        entries.append((t, float(nu.weights[k])))
    return TensorPlan(entries, marginals, float(cost))


def uniqueness_threshold(marginals):
    """Mass of the pointwise minimum of the marginals.

    Above this transported mass the optimal plan is unique in the continuum
    theory; below it, any common submeasure yields a cost-zero diagonal
    plan, so uniqueness fails.
    """
    return total_mass(pointwise_min(list(marginals)))

"""Closed-form 1D fixtures used as ground-truth oracles.

Two instance families:

* `NonmonotoneFamily` — three densities on the line (a uniform block, a
  steep-then-flat block, and an ample plateau between them) for which the
  active intervals, the increasing transport map between the active pieces,
  and the partial barycenter density all have exact formulas.  The family's
  defining feature is that the barycenter is NOT monotone in the
  transported mass: its density jump moves left as the mass grows.

* `dirac_marginals` / `dirac_expected_plan` — a three-marginal Dirac
  instance whose optimal partial plans at masses 1 and 2 are known exactly
  and whose middle active support {0} at mass 1 is not contained in the
  mass-2 support {-1, 1}.
"""

from dataclasses import dataclass

import numpy as np

from .measure import DiscreteMeasure, PiecewiseConstantDensity
from .multimarginal import TensorPlan, pairwise_quadratic_cost


@dataclass(frozen=True)
class NonmonotoneFamily:
    """Three 1D densities with closed-form partial barycenters.

    marginals: uniform density 1 on [0, 1]; density 1/epsilon on
    [2, 2 + epsilon/2] then 1 on [2 + epsilon/2, 3]; and constant
    `plateau_density` on [1, 2].  The plateau density must exceed
    2/(epsilon+1) so the barycenter is dominated by the third marginal.
    """

    epsilon: float = 0.5
    plateau_density: float = None

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must lie in (0, 1)")
        floor = 2.0 / (self.epsilon + 1.0)
        if self.plateau_density is None:
            object.__setattr__(self, "plateau_density", floor + 0.1)
        elif self.plateau_density <= floor:
            raise ValueError(f"plateau density must exceed {floor}")

    @property
    def marginals(self):
        eps = self.epsilon
        return (
            PiecewiseConstantDensity([0.0, 1.0], [1.0]),
            PiecewiseConstantDensity([2.0, 2.0 + eps / 2.0, 3.0], [1.0 / eps, 1.0]),
            PiecewiseConstantDensity([1.0, 2.0], [self.plateau_density]),
        )

    def _check_m(self, m):
        if not (0.5 < m < 1.0):
            raise ValueError(f"mass m={m} outside the closed-form range (1/2, 1)")


def active_intervals(inst, m):
    """Active intervals of the first two marginals at transported mass m.

    Each carries mass exactly m: the rightmost piece of the first marginal
    and the leftmost piece of the second.
    """
    inst._check_m(m)
    eps = inst.epsilon
    return (1.0 - m, 1.0), (2.0, 1.5 + eps / 2.0 + m)


def pair_map(inst, m, x):
    """The increasing map sending the first active piece onto the second."""
    inst._check_m(m)
    eps = inst.epsilon
    lo, hi = 1.0 - m, 1.0
    if not (lo - 1e-12 <= x <= hi + 1e-12):
        raise ValueError(f"x={x} outside the active interval [{lo}, {hi}]")
    knee = 1.5 - m
    if x <= knee:
        return eps * x + 2.0 - eps * (1.0 - m)
    return x + (1.0 + eps) / 2.0 + m


def barycenter_density(inst, m):
    """Exact partial barycenter density at mass m (total mass m).

    Two pieces: 2/(eps+1) up to the jump at (7+eps)/4 - m/2, then 1 up to
    (5+eps)/4 + m/2.  The jump moves left as m grows, which is the
    non-monotonicity witness.
    """
    inst._check_m(m)
    eps = inst.epsilon
    lo = (3.0 - m) / 2.0
    jump = (7.0 + eps) / 4.0 - m / 2.0
    hi = (5.0 + eps) / 4.0 + m / 2.0
    return PiecewiseConstantDensity([lo, jump, hi], [2.0 / (eps + 1.0), 1.0])


def witness_interval(inst, m_small, m_large):
    """Interval where the mass-m_small barycenter strictly exceeds the
    mass-m_large one: densities 2/(eps+1) versus 1."""
    inst._check_m(m_small)
    inst._check_m(m_large)
    if not m_small < m_large:
        raise ValueError("need m_small < m_large")
    eps = inst.epsilon
    return (7.0 + eps) / 4.0 - m_large / 2.0, (7.0 + eps) / 4.0 - m_small / 2.0


def dirac_marginals():
    """Three-marginal Dirac instance: {-5,-3}, {-1,0,1}, {3,5}, unit weights."""
    mk = lambda *xs: DiscreteMeasure(np.array(xs, dtype=np.float64).reshape(-1, 1), np.ones(len(xs)))
    return (mk(-5.0, -3.0), mk(-1.0, 0.0, 1.0), mk(3.0, 5.0))


def dirac_expected_plan(m):
    """Known optimal plans of the Dirac instance at masses 1 and 2."""
    marginals = dirac_marginals()
    if m == 1:
        tuples = [((-3.0, 0.0, 3.0), 1.0)]
    elif m == 2:
        tuples = [((-5.0, -1.0, 3.0), 1.0), ((-3.0, 1.0, 5.0), 1.0)]
    else:
        raise ValueError("expected plan is known for m = 1 or 2 only")
    entries = []
    cost = 0.0
    for coords, w in tuples:
        t = tuple(int(np.flatnonzero(np.isclose(mu.points[:, 0], c))[0]) for mu, c in zip(marginals, coords))
        entries.append((t, w))
        cost += w * pairwise_quadratic_cost(coords)
    return TensorPlan(entries, marginals, cost)

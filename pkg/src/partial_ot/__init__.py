"""Discrete-measure optimal transport toolkit.

Solves balanced and partial transport between discrete measures with
quadratic cost, the N-marginal balanced and partial problems, and partial
barycenters through the plan-averaging equivalence; ships closed-form 1D
fixtures, verification checks, and a CLI.
"""

from .measure import (
    DiscreteMeasure,
    PiecewiseConstantDensity,
    discretize,
    is_submeasure,
    lerp,
    pointwise_min,
    pushforward,
    total_mass,
)

__version__ = "0.1.0"

__all__ = [
    "DiscreteMeasure",
    "PiecewiseConstantDensity",
    "discretize",
    "is_submeasure",
    "lerp",
    "pointwise_min",
    "pushforward",
    "total_mass",
    "__version__",
]

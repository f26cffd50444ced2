"""Discrete measures and 1D piecewise-constant densities.

Both kinds are immutable after construction and expose the small algebra
(total mass, pointwise minimum, linear interpolation, discretization,
pushforward, submeasure test) that the transport solvers rely on.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

# Atoms closer than this in sup-norm are merged into one LP column.
MERGE_RADIUS = 1e-12


def _as_readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _canonical_atoms(points, weights):
    """Sort atoms lexicographically and merge near-duplicates.

    Zero-weight atoms are dropped so that the support is exactly the set of
    atoms carrying mass.
    """
    points = np.asarray(points, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2:
        raise ValueError("points must be a list of d-dimensional vectors")
    if weights.ndim != 1 or weights.shape[0] != points.shape[0]:
        raise ValueError("weights must be a 1-D array matching points")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    if not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")

    keep = weights > 0
    points, weights = points[keep], weights[keep]
    if points.shape[0] == 0:
        return points.reshape(0, points.shape[1] if points.size else 1), weights

    order = np.lexsort(points.T[::-1])
    points, weights = points[order], weights[order]

    # Fast path: all consecutive sorted points clearly distinct.
    if points.shape[0] > 1:
        gaps = np.max(np.abs(np.diff(points, axis=0)), axis=1)
        if np.all(gaps > MERGE_RADIUS):
            return points, weights

    out_pts, out_wts = [points[0]], [weights[0]]
    for p, w in zip(points[1:], weights[1:]):
        if np.max(np.abs(p - out_pts[-1])) <= MERGE_RADIUS:
            out_wts[-1] += w
        else:
            out_pts.append(p)
            out_wts.append(w)
    return np.array(out_pts), np.array(out_wts)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported positive measure: distinct support points + weights."""

    points: np.ndarray
    weights: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        pts, wts = _canonical_atoms(self.points, self.weights)
        object.__setattr__(self, "points", _as_readonly(pts))
        object.__setattr__(self, "weights", _as_readonly(wts))
        object.__setattr__(self, "dim", int(pts.shape[1]))

    def __len__(self):
        return self.points.shape[0]

    @property
    def mass(self):
        return float(np.sum(self.weights))

    def __repr__(self):
        return f"DiscreteMeasure({len(self)} atoms, dim={self.dim}, mass={self.mass:.6g})"


@dataclass(frozen=True, eq=False)
class PiecewiseConstantDensity:
    """1D density that is constant between consecutive breakpoints."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if breaks.ndim != 1 or values.ndim != 1 or breaks.shape[0] != values.shape[0] + 1:
            raise ValueError("need k+1 breakpoints for k values")
        if not (np.all(np.isfinite(breaks)) and np.all(np.isfinite(values))):
            raise ValueError("breakpoints and values must be finite")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        object.__setattr__(self, "breaks", _as_readonly(breaks))
        object.__setattr__(self, "values", _as_readonly(values))

    @property
    def mass(self):
        return float(np.sum(self.values * np.diff(self.breaks)))

    def value_at(self, x):
        """Density value at x (0 outside the breakpoint range, right-open cells)."""
        b = self.breaks
        if x < b[0] or x >= b[-1]:
            return 0.0
        i = int(np.searchsorted(b, x, side="right") - 1)
        return float(self.values[min(i, len(self.values) - 1)])

    def mass_on(self, lo, hi):
        """Mass of the density restricted to the interval [lo, hi]."""
        if hi <= lo:
            return 0.0
        left = np.maximum(self.breaks[:-1], lo)
        right = np.minimum(self.breaks[1:], hi)
        return float(np.sum(self.values * np.clip(right - left, 0.0, None)))

    def __repr__(self):
        return (
            f"PiecewiseConstantDensity([{self.breaks[0]:.6g}, {self.breaks[-1]:.6g}], "
            f"{len(self.values)} pieces, mass={self.mass:.6g})"
        )


def total_mass(mu):
    """Total mass of a discrete measure or a piecewise-constant density."""
    if isinstance(mu, (DiscreteMeasure, PiecewiseConstantDensity)):
        return mu.mass
    raise TypeError(f"unsupported measure type: {type(mu).__name__}")


def match_atoms(sigma, mu):
    """For each atom of sigma, the index of the mu atom at the same location.

    Returns an int array with -1 where sigma's atom is not on mu's support.
    Atoms count as co-located within the canonical merge radius.
    """
    if sigma.dim != mu.dim:
        raise ValueError("dimension mismatch")
    out = np.full(len(sigma), -1, dtype=np.int64)
    if len(mu) == 0 or len(sigma) == 0:
        return out
    # Both supports are lexsorted, so a merged sort lines up co-located atoms.
    for i, p in enumerate(sigma.points):
        lo = np.searchsorted(mu.points[:, 0], p[0] - 2 * MERGE_RADIUS, side="left")
        hi = np.searchsorted(mu.points[:, 0], p[0] + 2 * MERGE_RADIUS, side="right")
        for j in range(lo, hi):
            if np.max(np.abs(mu.points[j] - p)) <= MERGE_RADIUS:
                out[i] = j
                break
    return out


def pointwise_min(measures):
    """Pointwise minimum of a list of same-kind, same-dimension measures.

    Discrete: intersection of supports with the minimum weight.
    Densities: value-wise minimum on the union breakpoint grid.
    """
    measures = list(measures)
    if not measures:
        raise ValueError("need at least one measure")
    if all(isinstance(m, DiscreteMeasure) for m in measures):
        dims = {m.dim for m in measures if len(m) > 0}
        if len(dims) > 1:
            raise ValueError("dimension mismatch")
        acc = measures[0]
        for other in measures[1:]:
            idx = match_atoms(acc, other)
            keep = idx >= 0
            pts = acc.points[keep]
            wts = np.minimum(acc.weights[keep], other.weights[idx[keep]])
            acc = DiscreteMeasure(pts.reshape(-1, acc.points.shape[1]), wts)
        return acc
    if all(isinstance(m, PiecewiseConstantDensity) for m in measures):
        grid = np.unique(np.concatenate([m.breaks for m in measures]))
        mids = 0.5 * (grid[:-1] + grid[1:])
        vals = np.full(mids.shape, np.inf)
        for m in measures:
            vals = np.minimum(vals, [m.value_at(x) for x in mids])
        return PiecewiseConstantDensity(grid, vals)
    raise TypeError("measures must all be discrete or all be densities")


def lerp(nu0, nu1, t):
    """Linear interpolation (1-t)*nu0 + t*nu1 of two discrete measures."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t={t} outside [0, 1]")
    if len(nu0) > 0 and len(nu1) > 0 and nu0.dim != nu1.dim:
        raise ValueError("dimension mismatch")
    if t == 0.0:
        return nu0
    if t == 1.0:
        return nu1
    pts = np.concatenate([nu0.points, nu1.points]) if len(nu1) else nu0.points
    wts = np.concatenate([(1.0 - t) * nu0.weights, t * nu1.weights])
    return DiscreteMeasure(pts, wts)


def discretize(density, cells_per_unit):
    """Midpoint discretization of a 1D density, aligned to its breakpoints.

    Each constant piece is split into ceil(length * cells_per_unit) equal
    cells; one atom per cell at the midpoint carries density * cell width,
    so the total mass is preserved.
    """
    cells_per_unit = int(cells_per_unit)
    if cells_per_unit < 1:
        raise ValueError("cells_per_unit must be a positive integer")
    pts, wts = [], []
    for lo, hi, v in zip(density.breaks[:-1], density.breaks[1:], density.values):
        if v == 0.0:
            continue
        n = max(1, math.ceil((hi - lo) * cells_per_unit - 1e-12))
        width = (hi - lo) / n
        pts.extend(lo + (np.arange(n) + 0.5) * width)
        wts.extend([v * width] * n)
    return DiscreteMeasure(np.asarray(pts, dtype=np.float64).reshape(-1, 1), wts)


def pushforward(mu, transform):
    """Image measure of mu under a point map; colliding images merge."""
    if len(mu) == 0:
        return mu
    pts = np.array([np.atleast_1d(np.asarray(transform(p), dtype=np.float64)) for p in mu.points])
    return DiscreteMeasure(pts, mu.weights)


def is_submeasure(sigma, mu, tol=1e-8):
    """True iff every atom of sigma sits on an atom of mu with weight <= mu's + tol."""
    if len(sigma) == 0:
        return True
    if len(mu) == 0:
        return False
    idx = match_atoms(sigma, mu)
    if np.any(idx < 0):
        return False
    return bool(np.all(sigma.weights <= mu.weights[idx] + tol))


# ---------------------------------------------------------------------------
# JSON measure schema
# ---------------------------------------------------------------------------


def measure_to_json(mu):
    """Schema: {"dim": d, "atoms": [{"x": [...], "w": w}, ...]} for discrete
    measures, {"density1d": {"breaks": [...], "values": [...]}} for densities."""
    if isinstance(mu, DiscreteMeasure):
        return {
            "dim": mu.dim,
            "atoms": [{"x": list(map(float, p)), "w": float(w)} for p, w in zip(mu.points, mu.weights)],
        }
    if isinstance(mu, PiecewiseConstantDensity):
        return {"density1d": {"breaks": list(map(float, mu.breaks)), "values": list(map(float, mu.values))}}
    raise TypeError(f"unsupported measure type: {type(mu).__name__}")


def measure_from_json(obj):
    """Parse the JSON measure schema; rejects NaN and negative weights."""
    if not isinstance(obj, dict):
        raise ValueError("measure JSON must be an object")
    if "density1d" in obj:
        spec = obj["density1d"]
        try:
            breaks = [float(x) for x in spec["breaks"]]
            values = [float(x) for x in spec["values"]]
        except (TypeError, KeyError) as exc:
            raise ValueError("malformed density1d object") from exc
        if any(math.isnan(x) or math.isinf(x) for x in breaks + values):
            raise ValueError("density1d entries must be finite")
        return PiecewiseConstantDensity(breaks, values)
    if "atoms" in obj:
        dim = obj.get("dim")
        atoms = obj["atoms"]
        pts, wts = [], []
        for a in atoms:
            try:
                x = [float(v) for v in a["x"]]
                w = float(a["w"])
            except (TypeError, KeyError) as exc:
                raise ValueError("malformed atom object") from exc
            if any(math.isnan(v) or math.isinf(v) for v in x) or math.isnan(w) or math.isinf(w):
                raise ValueError("atom entries must be finite")
            if w < 0:
                raise ValueError("atom weights must be nonnegative")
            pts.append(x)
            wts.append(w)
        if dim is not None and pts and any(len(x) != dim for x in pts):
            raise ValueError("atom dimension does not match declared dim")
        d = int(dim) if dim is not None else (len(pts[0]) if pts else 1)
        arr = np.asarray(pts, dtype=np.float64).reshape(-1, d)
        return DiscreteMeasure(arr, wts)
    raise ValueError("measure JSON needs an 'atoms' or 'density1d' key")


def _reject_constant(name):
    raise ValueError(f"non-finite JSON constant {name!r} not allowed")


def measure_from_json_str(text):
    """Parse a JSON document holding one measure; NaN/Infinity are rejected."""
    return measure_from_json(json.loads(text, parse_constant=_reject_constant))

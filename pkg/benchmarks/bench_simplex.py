"""Benchmark the compiled simplex kernel against the pure-numpy fallback.

Usage: python benchmarks/bench_simplex.py [--repeats N]

Times the full solver (standardization included) on transport-shaped
instances of growing size with each available backend and checks that the
optimal values agree.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from partial_ot import linprog  # noqa: E402
from partial_ot.analytic1d import NonmonotoneFamily, dirac_marginals  # noqa: E402
from partial_ot.linprog import available_backends  # noqa: E402
from partial_ot.measure import DiscreteMeasure, discretize  # noqa: E402
from partial_ot.multimarginal import solve_mm, solve_mm_partial  # noqa: E402
from partial_ot.transport import solve_ot  # noqa: E402


def cases():
    rng = np.random.default_rng(0)
    out = [("dirac mass-2 (12 cells)", lambda: solve_mm_partial(dirac_marginals(), 2.0).cost)]

    for n in (20, 40, 60):
        pts1 = rng.uniform(-3, 3, size=(n, 1))
        pts2 = rng.uniform(-3, 3, size=(n, 1))
        w = rng.uniform(0.5, 1.5, n)
        v = rng.uniform(0.5, 1.5, n)
        mu = DiscreteMeasure(pts1, w)
        nu = DiscreteMeasure(pts2, v * (mu.mass / v.sum()))
        out.append((f"transport {n}x{n}", lambda mu=mu, nu=nu: solve_ot(mu, nu)[1]))

    for res in (6, 8, 10):
        rhos = [discretize(f, res) for f in NonmonotoneFamily(0.5).marginals]
        total = len(rhos[0]) * len(rhos[1]) * len(rhos[2])
        out.append(
            (f"partial 3-marginal, {total} cells", lambda rhos=rhos: solve_mm_partial(rhos, 0.75).cost)
        )

    rhos8 = [discretize(f, 8) for f in NonmonotoneFamily(0.5).marginals]
    sigma = solve_mm_partial(rhos8, 0.75)
    active = [np.zeros(len(r)) for r in rhos8]
    for t, w in sigma.entries:
        for j in range(3):
            active[j][t[j]] += w
    leftovers = [DiscreteMeasure(r.points, np.clip(r.weights - a, 0, None)) for r, a in zip(rhos8, active)]
    padded = []
    for j, r in enumerate(rhos8):
        others = [leftovers[k] for k in range(3) if k != j]
        padded.append(
            DiscreteMeasure(
                np.concatenate([r.points] + [o.points for o in others]),
                np.concatenate([r.weights] + [o.weights for o in others]),
            )
        )
    total = len(padded[0]) * len(padded[1]) * len(padded[2])
    out.append((f"balanced 3-marginal, {total} cells", lambda: solve_mm(padded).cost))
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    rows = []
    for label, run in cases():
        timings = {}
        values = {}
        for name, kernel in backends.items():
            old = linprog._kernel
            linprog._kernel = kernel
            try:
                best = np.inf
                for _ in range(args.repeats):
                    t0 = time.perf_counter()
                    values[name] = run()
                    best = min(best, time.perf_counter() - t0)
                timings[name] = best
            finally:
                linprog._kernel = old
        vals = list(values.values())
        assert all(abs(v - vals[0]) <= 1e-8 * (1 + abs(vals[0])) for v in vals), f"value mismatch on {label}"
        rows.append((label, timings))

    width = max(len(r[0]) for r in rows)
    header = f"{'case':<{width}}  " + "  ".join(f"{name:>10}" for name in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    for label, timings in rows:
        line = f"{label:<{width}}  " + "  ".join(f"{timings[name] * 1e3:>8.1f}ms" for name in backends)
        if len(timings) == 2:
            line += f"  {timings['python'] / timings['compiled']:>7.2f}x"
        print(line)


if __name__ == "__main__":
    main()

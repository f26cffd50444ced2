"""Command-line interface: solve transport problems, sweep the transported
mass, and run the verification checks.

Artifacts are written atomically (temp file + rename) so partial outputs
never appear on failure.  CSV files carry the schema tag `# partial-ot v1`.

Exit codes: 0 success (for verify: all checks passed), 1 check failure,
2 input error, 3 solver failure.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analytic1d, svg, verify
from .barycenter import solve_partial_barycenter
from .linprog import LpStallError
from .measure import DiscreteMeasure, discretize, measure_from_json_str
from .multimarginal import solve_mm, solve_mm_partial
from .transport import Coupling, solve_ot, solve_partial_ot

CSV_TAG = "# partial-ot v1"

PROBLEMS = ("ot", "partial_ot", "mm", "mm_partial", "barycenter")
CHECKS = ("convexity", "equivalence", "mass-filling", "naive-extension", "subthreshold-nonuniqueness")


class InputError(Exception):
    pass


def _write_atomic(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def _csv(lines):
    return "\n".join([CSV_TAG] + lines) + "\n"


def _load_measures(args, want=None):
    """Measures from --input files, or from the compiled-in fixture."""
    if args.input:
        out = []
        for path in args.input:
            try:
                out.append(measure_from_json_str(Path(path).read_text()))
            except (OSError, ValueError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read measure from {path}: {exc}") from exc
        measures = out
    elif args.fixtures == "example42":
        measures = list(analytic1d.dirac_marginals())
    elif args.fixtures == "prop41":
        family = analytic1d.NonmonotoneFamily(args.eps)
        measures = [discretize(f, args.resolution) for f in family.marginals]
    else:
        raise InputError("no inputs: pass --input files or --fixtures {example42,prop41}")
    measures = [
        discretize(m, args.resolution) if not isinstance(m, DiscreteMeasure) else m for m in measures
    ]
    if want is not None and len(measures) != want:
        raise InputError(f"problem needs exactly {want} measures, got {len(measures)}")
    return measures


def _coupling_csv(plan: Coupling):
    d = plan.source.dim
    head = ["i,j," + ",".join([f"x_{k}" for k in range(d)] + [f"y_{k}" for k in range(d)]) + ",mass"]
    for i, j, w in plan.entries:
        xs = plan.source.points[int(i)]
        ys = plan.target.points[int(j)]
        head.append(",".join([str(int(i)), str(int(j))] + [repr(float(v)) for v in xs] + [repr(float(v)) for v in ys] + [repr(float(w))]))
    return _csv(head)


def _tensor_csv(plan):
    n = plan.n_marginals
    d = plan.marginals[0].dim
    cols = [f"i{j + 1}" for j in range(n)] + [f"x{j + 1}_{k}" for j in range(n) for k in range(d)] + ["mass"]
    lines = [",".join(cols)]
    for t, w in plan.entries:
        coords = [v for j in range(n) for v in plan.marginals[j].points[t[j]]]
        lines.append(",".join([str(i) for i in t] + [repr(float(v)) for v in coords] + [repr(float(w))]))
    return _csv(lines)


def _measure_csv(mu):
    lines = [",".join([f"x_{k}" for k in range(mu.dim)] + ["w"])]
    for p, w in zip(mu.points, mu.weights):
        lines.append(",".join([repr(float(v)) for v in p] + [repr(float(w))]))
    return _csv(lines)


def _emit_actives(out, formats, measures_like):
    if "csv" not in formats:
        return
    for j, mu in enumerate(measures_like, start=1):
        _write_atomic(out / f"active_{j}.csv", _measure_csv(mu))


def cmd_solve(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats = set(args.format.split(","))
    report = {"problem": args.problem}

    if args.problem in ("ot", "partial_ot"):
        mu, nu = _load_measures(args, want=2)
        if args.problem == "ot":
            plan, cost = solve_ot(mu, nu)
            actives = [plan.marginal(0), plan.marginal(1)]
        else:
            if args.m is None:
                raise InputError("partial_ot needs --m")
            rpt = solve_partial_ot(mu, nu, args.m)
            plan, cost = rpt.plan, rpt.cost
            actives = [rpt.active_left, rpt.active_right]
            report["m"] = args.m
        report.update(cost=cost, entries=len(plan), diagnostics=plan.diagnostics)
        if "csv" in formats:
            _write_atomic(out / "plan.csv", _coupling_csv(plan))
        _emit_actives(out, formats, actives)
    elif args.problem in ("mm", "mm_partial"):
        measures = _load_measures(args)
        if args.problem == "mm":
            plan = solve_mm(measures)
        else:
            if args.m is None:
                raise InputError("mm_partial needs --m")
            plan = solve_mm_partial(measures, args.m)
            report["m"] = args.m
        report.update(cost=plan.cost, entries=len(plan), diagnostics=plan.diagnostics)
        if "csv" in formats:
            _write_atomic(out / "plan.csv", _tensor_csv(plan))
        _emit_actives(out, formats, [plan.marginal(j) for j in range(plan.n_marginals)])
    else:  # barycenter
        measures = _load_measures(args)
        if args.m is None:
            raise InputError("barycenter needs --m")
        rpt = solve_partial_barycenter(measures, args.m)
        report.update(
            m=args.m,
            objective=rpt.objective,
            plan_cost=rpt.source_plan.cost,
            per_marginal_costs=list(rpt.per_marginal_costs),
            barycenter_atoms=len(rpt.barycenter),
            diagnostics=rpt.source_plan.diagnostics,
        )
        if "csv" in formats:
            _write_atomic(out / "plan.csv", _tensor_csv(rpt.source_plan))
            _write_atomic(out / "barycenter.csv", _measure_csv(rpt.barycenter))
        _emit_actives(out, formats, [rpt.source_plan.marginal(j) for j in range(len(measures))])

    if "json" in formats:
        _write_atomic(out / "report.json", json.dumps(report, sort_keys=True, indent=2) + "\n")
    print(json.dumps(report, sort_keys=True))
    return 0


def _parse_grid(spec):
    try:
        a, b, step = (float(v) for v in spec.split(":"))
    except ValueError as exc:
        raise InputError(f"bad --m-grid {spec!r}, expected a:b:step") from exc
    if step <= 0 or b < a:
        raise InputError("m-grid needs a <= b and step > 0")
    vals = []
    v = a
    while v <= b + 1e-12:
        vals.append(round(v, 12))
        v += step
    return vals


def _binned(mu, lo, hi, width):
    edges = np.arange(lo, hi + width / 2, width)
    hist = np.zeros(len(edges) - 1)
    for x, w in zip(mu.points[:, 0], mu.weights):
        k = min(max(int((x - lo) / width), 0), len(hist) - 1)
        hist[k] += w
    return edges, hist


def cmd_sweep(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats = set(args.format.split(","))
    family = analytic1d.NonmonotoneFamily(args.eps)
    rhos = [discretize(f, args.resolution) for f in family.marginals]
    grid = _parse_grid(args.m_grid)
    width = 1.0 / args.resolution

    results = []
    for m in grid:
        rpt = solve_partial_barycenter(rhos, m)
        results.append((m, rpt))

    value_lines = ["m,objective,plan_cost"]
    hist_lines = ["m,x,w"]
    panels_analytic, panels_computed = [], []
    for m, rpt in results:
        value_lines.append(f"{m!r},{rpt.objective!r},{rpt.source_plan.cost!r}")
        for x, w in zip(rpt.barycenter.points[:, 0], rpt.barycenter.weights):
            hist_lines.append(f"{m!r},{x!r},{w!r}")
        dens = analytic1d.barycenter_density(family, m)
        xs, ys = svg.step_curve(list(dens.breaks), list(dens.values))
        panels_analytic.append({"x": xs, "y": ys, "label": f"m={m}"})
        edges, hist = _binned(rpt.barycenter, 1.0, 2.0, width)
        xs, ys = svg.step_curve(list(edges), list(hist / width))
        panels_computed.append({"x": xs, "y": ys, "label": f"m={m}"})

    # pairwise non-nesting: positive part of (earlier minus later) binned mass
    violations = []
    for a in range(len(results)):
        for b in range(a + 1, len(results)):
            m1, r1 = results[a]
            m2, r2 = results[b]
            _, h1 = _binned(r1.barycenter, 1.0, 2.0, width)
            _, h2 = _binned(r2.barycenter, 1.0, 2.0, width)
            excess = float(np.sum(np.clip(h1 - h2, 0.0, None)))
            if excess > 1e-9:
                violations.append({"m": m1, "m_bar": m2, "excess_mass": excess})
    viol_lines = ["m,m_bar,excess_mass"] + [f"{v['m']!r},{v['m_bar']!r},{v['excess_mass']!r}" for v in violations]

    if "csv" in formats:
        _write_atomic(out / "values.csv", _csv(value_lines))
        _write_atomic(out / "barycenters.csv", _csv(hist_lines))
        _write_atomic(out / "violations.csv", _csv(viol_lines))
    if "json" in formats:
        _write_atomic(out / "violations.json", json.dumps(violations, sort_keys=True, indent=2) + "\n")
    if "svg" in formats:
        doc = svg.render_panels(
            [
                {"title": "analytic barycenter density by m", "curves": panels_analytic},
                {"title": f"computed barycenter histogram (width {width:g})", "curves": panels_computed},
            ]
        )
        _write_atomic(out / "sweep.svg", doc)
    print(json.dumps({"grid": grid, "violations": violations}, sort_keys=True))
    return 0


def _run_check(name, args):
    rng = np.random.default_rng(args.seed)
    tol = {} if args.tol is None else {"tol": args.tol}
    if name == "equivalence":
        measures = _load_measures(args)
        return verify.check_equivalence(measures, args.m if args.m is not None else 1.0, **tol)
    if name == "convexity":
        pts = rng.uniform(-2, 2, size=(6, 1))
        mu = DiscreteMeasure(pts, rng.uniform(0.2, 1.0, size=6))
        m = 0.5 * mu.mass
        w0 = rng.uniform(0.2, 1.0, size=4)
        w1 = rng.uniform(0.2, 1.0, size=4)
        nu0 = DiscreteMeasure(rng.uniform(-2, 2, size=(4, 1)), w0 * (m / w0.sum()))
        nu1 = DiscreteMeasure(rng.uniform(-2, 2, size=(4, 1)), w1 * (m / w1.sum()))
        return verify.check_convexity(mu, nu0, nu1, m, **tol)
    if name == "mass-filling":
        family = analytic1d.NonmonotoneFamily(args.eps)
        rhos = [discretize(f, args.resolution) for f in family.marginals]
        m = args.m if args.m is not None else 0.75
        plan = solve_mm_partial(rhos, m)
        return verify.check_mass_filling(plan, rhos, args.tol if args.tol else 2.0 / args.resolution)
    if name == "naive-extension":
        family = analytic1d.NonmonotoneFamily(args.eps)
        m = args.m if args.m is not None else 0.75
        return verify.check_naive_extension_fails(family, m, min(args.resolution, 8))
    if name == "subthreshold-nonuniqueness":
        two = DiscreteMeasure([[0.0], [1.0]], [1.0, 1.0])
        return verify.check_subthreshold_nonuniqueness([two, two, two], 1.0, seed=args.seed)
    raise InputError(f"unknown check {name!r}; known: {', '.join(CHECKS)}")


def cmd_verify(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = list(CHECKS) if args.all else [args.check]
    if not names or names == [None]:
        raise InputError("pass --check NAME or --all")
    reports = [_run_check(n, args) for n in sorted(names)]
    _write_atomic(out / "checks.jsonl", "\n".join(r.to_json_line() for r in reports) + "\n")
    width = max(len(r.name) for r in reports)
    for r in reports:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  tol={r.tolerance:g}")
    return 0 if all(r.passed for r in reports) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="partial-ot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--m", type=float, default=None, help="transported mass")
        p.add_argument("--eps", type=float, default=0.5, help="steep-block width parameter of the prop41 fixture")
        p.add_argument("--resolution", type=int, default=10, help="cells per unit length when discretizing densities")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None, help="override check tolerance")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", default="csv,json", help="comma list of csv,svg,json")
        p.add_argument("--fixtures", choices=("example42", "prop41"), default=None)
        p.add_argument("--input", nargs="*", default=None, help="measure JSON files (override fixtures)")

    p_solve = sub.add_parser("solve", help="solve one problem instance")
    p_solve.add_argument("--problem", choices=PROBLEMS, required=True)
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep the transported mass on the prop41 fixture")
    p_sweep.add_argument("--m-grid", dest="m_grid", required=True, help="a:b:step")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run structural checks")
    p_verify.add_argument("--check", choices=CHECKS, default=None)
    p_verify.add_argument("--all", action="store_true")
    common(p_verify)
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.fixtures is None and not args.input:
        args.fixtures = "example42"
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        # includes TensorSizeError: the tuple cap is an input-scale problem
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (LpStallError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: solve, integrate, compare, catalog, construct.

Problem and coefficient files are JSON objects; unknown fields are
rejected. Every command writes CSV (or JSON with ``--format json``) whose
'#' header echoes the effective parameters, so identical inputs give
byte-identical outputs. The exit status is 0 iff no error was raised.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from .closed_form import ClosedFormParams, closed_form_trace, fit_phi
from .constructions import (
    GeneralCoefficients,
    bougoffa_solution,
    branch_residuals,
    check_bougoffa,
    check_julia,
    julia_solution,
    solve_implicit,
)
from .errors import AbelError, ClassificationAmbiguousError, SingularityError
from .expr import BaseKind, InhomogeneityClass, parse_expression
from .harness import format_float, header_value, jsonable
from .integrator import IntegratorConfig, integrate
from .problem import CanonicalProblem, ReferenceCurve
from .pz_catalog import CATALOG, ParametricCurve, pointwise_residual

PROBLEM_FIELDS = {
    "Q", "constants", "class", "x0", "y0", "interval", "beta", "phi", "branch",
    "integrator", "name", "notes", "references",
}
REQUIRED_PROBLEM_FIELDS = {"Q", "x0", "y0", "interval"}
CLASS_FIELDS = {"kind", "n", "m", "k", "base"}
INTEGRATOR_FIELDS = {"h_step", "order", "corrector_iterations", "y_min"}
REFERENCE_FIELDS = {"id", "A", "C"}
COEFF_FIELDS = {"g1", "g0", "f2", "f1", "f0", "constants", "interval", "C", "name"}
# construct drops both end points, leaving 100 interior samples
GRID_DEFAULTS = {"catalog": 200, "construct": 102}


class UsageError(Exception):
    """Bad input file or flag; reported without a traceback."""


def _check_keys(obj, allowed, what, required=()):
    if not isinstance(obj, dict):
        raise UsageError(f"{what} must be a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise UsageError(f"unknown field(s) in {what}: {', '.join(unknown)}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise UsageError(f"missing field(s) in {what}: {', '.join(missing)}")


def _interval(value, what="interval"):
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise UsageError(f"{what} must be a pair [a, b]")
    return float(value[0]), float(value[1])


def _classification(obj):
    _check_keys(obj, CLASS_FIELDS, "class", ("kind",))
    try:
        kind = BaseKind(obj["kind"])
        if kind is BaseKind.RATIONAL:
            base = BaseKind(obj.get("base", BaseKind.POLYNOMIAL.value))
            return InhomogeneityClass.rational(int(obj["m"]), int(obj["k"]), base)
        return InhomogeneityClass(kind, int(obj["n"]))
    except KeyError as exc:
        raise UsageError(f"class is missing {exc}") from None


def parse_problem(data: dict) -> tuple[CanonicalProblem, IntegratorConfig]:
    """A CanonicalProblem and integrator settings from a decoded problem file."""
    _check_keys(data, PROBLEM_FIELDS, "problem file", REQUIRED_PROBLEM_FIELDS)
    cfg = IntegratorConfig()
    if "integrator" in data:
        _check_keys(data["integrator"], INTEGRATOR_FIELDS, "integrator")
        cfg = IntegratorConfig(**data["integrator"])
    refs = []
    for r in data.get("references", []):
        _check_keys(r, REFERENCE_FIELDS, "reference", ("id",))
        if r["id"] not in CATALOG:
            raise UsageError(f"unknown catalog entry {r['id']!r}")
        refs.append(ReferenceCurve(r["id"], float(r.get("A", 1.0)), float(r.get("C", 0.0))))
    problem = CanonicalProblem(
        parse_expression(data["Q"]),
        x0=float(data["x0"]),
        y0=float(data["y0"]),
        interval=_interval(data["interval"]),
        constants={k: float(v) for k, v in data.get("constants", {}).items()},
        classification=_classification(data["class"]) if "class" in data else None,
        beta=None if data.get("beta") is None else float(data["beta"]),
        phi=None if data.get("phi") is None else float(data["phi"]),
        branch=data.get("branch"),
        name=str(data.get("name", "")),
        references=tuple(refs),
        notes=str(data.get("notes", "")),
    )
    return problem, cfg


def load_problem(source: str) -> tuple[CanonicalProblem, IntegratorConfig]:
    """Problem from a JSON file path or a ``corpus:N`` id."""
    if source.startswith("corpus:"):
        tail = source.split(":", 1)[1]
        try:
            return harness.corpus_entry(int(tail)), IntegratorConfig()
        except (ValueError, KeyError):
            raise UsageError(f"unknown corpus id {source!r}; use corpus:1 .. corpus:5") from None
    return parse_problem(_read_json(source))


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _parse_interval_flag(text):
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}") from None
    if not a < b:
        raise argparse.ArgumentTypeError(f"interval needs a < b, got {text!r}")
    return a, b


def _with_interval(problem, interval):
    return problem if interval is None else replace(problem, interval=interval)


def _problem_meta(problem):
    meta = {
        "problem": problem.name,
        "Q": str(problem.q),
        "constants": dict(sorted(problem.constants.items())),
        "x0": problem.x0,
        "y0": problem.y0,
        "interval": list(problem.interval),
    }
    try:
        cls = problem.inhomogeneity_class()
        meta["class"] = f"{cls.kind.value} n={cls.n}"
    except ClassificationAmbiguousError:
        meta["class"] = "ambiguous"
    return meta


def render(meta: dict, columns: dict, fmt: str) -> str:
    """CSV with a '#' header block, or the equivalent JSON document."""
    if fmt == "json":
        doc = {"metadata": meta, "columns": {k: list(v) for k, v in columns.items()}}
        return json.dumps(jsonable(doc), sort_keys=True, indent=1, allow_nan=False) + "\n"
    lines = [f"# {k}: {header_value(v)}" for k, v in sorted(meta.items())]
    names = list(columns)
    lines.append(",".join(names))
    for row in zip(*(columns[n] for n in names)):
        lines.append(",".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def cmd_solve(args) -> int:
    problem, _ = load_problem(args.problem)
    problem = _with_interval(problem, args.interval)
    beta = args.beta if args.beta is not None else problem.effective_beta()
    branch = args.branch or problem.branch or "auto"
    params = ClosedFormParams(phi=0.0, beta=beta, branch=branch, eps=args.eps)
    phi = args.phi if args.phi is not None else problem.phi
    fitted = phi is None
    if fitted:
        phi = fit_phi(problem, params)
    params = replace(params, phi=phi)
    grid = np.linspace(*problem.interval, args.grid)
    trace = closed_form_trace(problem, params, grid)
    meta = _problem_meta(problem)
    meta.update(
        beta=params.beta, phi=params.phi, phi_fitted=fitted, branch=params.branch,
        eps=params.eps, grid_points=args.grid, events=[list(e) for e in trace.events],
    )
    _emit(render(meta, {"x": trace.x, "y_closed": trace.y, "r_closed": trace.residual}, args.format), args.out)
    return 0


def cmd_integrate(args) -> int:
    problem, cfg = load_problem(args.problem)
    problem = _with_interval(problem, args.interval)
    changes = {k: v for k, v in (("h_step", args.step), ("order", args.order)) if v is not None}
    cfg = replace(cfg, **changes)
    pieces, events = [], []
    for x_end in problem.interval:
        if x_end == problem.x0:
            continue
        try:
            pieces.append(integrate(problem, problem.x0, problem.y0, x_end, cfg))
        except SingularityError as exc:
            events.append([exc.x_last, str(exc)])
            if exc.trace is not None:
                pieces.append(exc.trace)
    if not pieces:
        raise UsageError("x0 coincides with both interval ends")
    xs = np.concatenate([p.x for p in pieces])
    ys = np.concatenate([p.y for p in pieces])
    rs = np.concatenate([p.residual for p in pieces])
    order = np.argsort(xs, kind="stable")
    xs, ys, rs = xs[order], ys[order], rs[order]
    keep = np.concatenate([[True], np.diff(xs) > 0])
    meta = _problem_meta(problem)
    meta.update(
        h_step=cfg.h_step, order=cfg.order, corrector_iterations=cfg.corrector_iterations,
        y_min=cfg.y_min, samples=int(keep.sum()), singularities=events,
    )
    columns = {"x": xs[keep], "y_numeric": ys[keep], "r_numeric": rs[keep]}
    _emit(render(meta, columns, args.format), args.out)
    return 0


def cmd_compare(args) -> int:
    problem, cfg = load_problem(args.problem)
    problem = _with_interval(problem, args.interval)
    if args.step is not None:
        cfg = replace(cfg, h_step=args.step)
    methods = args.methods.split(",") if args.methods else None
    report = harness.run_comparison(problem, methods=methods, integrator=cfg, n_grid=args.grid)
    if args.out is not None:
        for path in harness.write_report(report, args.out):
            print(path)
    else:
        sys.stdout.write(report.to_json() if args.format == "json" else report.to_csv())
    for f in report.flags:
        if f["severity"] != "info":
            print(f"{f['severity']}: {f['code']}: {f.get('detail', '')}", file=sys.stderr)
    return 1 if report.has_error else 0


def cmd_catalog(args) -> int:
    if args.entry is None:
        for entry_id, e in sorted(CATALOG.items()):
            tag = " [diagnostic]" if e.diagnostic_only else ""
            print(f"{entry_id}\t{e.handbook_number}\tQ = {e.q_text}\t{e.description}{tag}")
        return 0
    if args.entry not in CATALOG:
        raise UsageError(f"unknown catalog entry {args.entry!r}; known: {', '.join(sorted(CATALOG))}")
    curve = ParametricCurve(args.entry, args.A, args.C)
    taus = curve.default_grid(args.grid)
    q = curve.q_function()
    xs, ys, rs = [], [], []
    for t in taus:
        try:
            x, y = curve(t)
            r = pointwise_residual(curve, t, q)
        except AbelError:
            x = y = r = math.nan
        xs.append(x)
        ys.append(y)
        rs.append(r)
    meta = {"entry": args.entry, "Q": curve.entry.q_text, "A": args.A, "C": args.C, "tau_points": len(taus)}
    _emit(render(meta, {"tau": taus, "x": xs, "y": ys, "r": rs}, args.format), args.out)
    return 0


def cmd_construct(args) -> int:
    data = _read_json(args.coefficients)
    _check_keys(data, COEFF_FIELDS, "coefficient file", ("g1", "g0", "f2", "f1", "f0"))
    coeffs = GeneralCoefficients.from_text(
        data["g1"], data["g0"], data["f2"], data["f1"], data["f0"], data.get("constants")
    )
    interval = args.interval or _interval(data.get("interval", [0.0, 1.0]))
    C = float(args.C if args.C is not None else data.get("C", 0.0))
    lam = check_bougoffa(coeffs, interval)
    julia = check_julia(coeffs, interval)
    meta = {
        "name": data.get("name", ""),
        "coefficients": {k: str(getattr(coeffs, k)) for k in ("g1", "g0", "f2", "f1", "f0")},
        "constants": dict(sorted(coeffs.constants.items())),
        "interval": list(interval),
        "C": C,
        "bougoffa": "condition fails" if lam is None else f"holds, lambda = {lam!r}",
        "julia": "condition holds" if julia else "condition fails",
    }
    if lam is not None:
        sol = bougoffa_solution(coeffs, lam, C, interval)
    elif julia:
        sol = julia_solution(coeffs, C, interval)
    else:
        sol = None
    meta["construction"] = sol.kind if sol else "none"
    columns = {"x": np.linspace(*interval, args.grid)[1:-1] if sol else []}
    if sol is not None:
        xs = columns["x"]
        for b in (0, 1):
            columns[f"U{b + 1}"] = [(solve_implicit(sol, x) or (math.nan, math.nan))[b] for x in xs]
            columns[f"r{b + 1}"] = branch_residuals(coeffs, sol, xs, b)
    _emit(render(meta, columns, args.format), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abelsolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--out", help="output path (stdout if omitted; a file stem for compare)")
    shared.add_argument("--grid", type=int, help="number of grid points (400; 200 tau points for catalog, 102 for construct)")
    shared.add_argument("--interval", type=_parse_interval_flag, help="override the working interval, as a:b")
    shared.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("solve", parents=[shared], help="closed-form candidate on a grid")
    p.add_argument("problem", help="problem file or corpus:N")
    p.add_argument("--phi", type=float, help="integration constant (fitted to x0, y0 if omitted)")
    p.add_argument("--beta", type=float, help="order-effect factor (from the class if omitted)")
    p.add_argument("--branch", choices=("auto", "Z1", "Z2", "Z3"))
    p.add_argument("--eps", type=float, default=1e-3, help="exclusion half-width around x = 0")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("integrate", parents=[shared], help="predictor-corrector integration")
    p.add_argument("problem", help="problem file or corpus:N")
    p.add_argument("--step", type=float, help="step size h")
    p.add_argument("--order", type=int, choices=(2, 3, 4))
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("compare", parents=[shared], help="compare methods and write report files")
    p.add_argument("problem", help="problem file or corpus:N")
    p.add_argument("--methods", help="comma-separated subset of closed-form, numeric and reference ids")
    p.add_argument("--step", type=float, help="integrator step size")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("catalog", parents=[shared], help="list reference curves or sample one")
    p.add_argument("entry", nargs="?", help="catalog id to sample")
    p.add_argument("-A", type=float, default=1.0)
    p.add_argument("-C", type=float, default=0.0)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("construct", parents=[shared], help="general-solution constructions")
    p.add_argument("coefficients", help="coefficient file with g1, g0, f2, f1, f0")
    p.add_argument("-C", type=float, help="integration constant of the implicit solution")
    p.set_defaults(func=cmd_construct)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.grid is None:
        args.grid = GRID_DEFAULTS.get(args.command, harness.DEFAULT_GRID_POINTS)
    if args.grid < 2:
        parser.error("--grid must be at least 2")
    try:
        return args.func(args)
    except (UsageError, AbelError, ValueError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Method comparison and reproduction of the figure data for the five test problems."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .closed_form import ClosedFormParams, closed_form_trace, fit_phi
from .errors import AbelError, ClassificationAmbiguousError, SingularityError
from .integrator import IntegratorConfig, integrate
from .problem import CanonicalProblem, ReferenceCurve
from .pz_catalog import CATALOG, ParametricCurve, curve_residual, curve_trace
from .trace import SolutionTrace, ode_residual

__all__ = [
    "CanonicalProblem",
    "ComparisonReport",
    "corpus",
    "corpus_entry",
    "ode_residual",
    "run_comparison",
    "write_report",
    "reproduce_figures",
]

DEFAULT_GRID_POINTS = 400
DEVIATION_FLAG = 0.05


def _ref_point(entry_id, tau):
    return ParametricCurve(entry_id)(tau)


def corpus() -> list[CanonicalProblem]:
    """The five test problems, with A = B = 1 wherever the captions leave them free.

    Problems 3-5 start on their reference curve (tau = 1, 0.3 and 1) so the
    numeric and reference solutions share an initial condition.
    """
    x3, y3 = _ref_point("rational-137-modified", 1.0)
    x4, y4 = _ref_point("bessel-13133", 0.3)
    x5, y5 = _ref_point("exponential-1319", 1.0)
    return [
        CanonicalProblem.from_text(
            "A*x + B", x0=1.0, y0=3.0, interval=(-0.5, 2.0),
            constants={"A": 1.0, "B": 1.0}, beta=1.0, name="fig1",
            notes="linear inhomogeneity, handbook 1.3.1.2 (closed form not reproduced)",
        ),
        CanonicalProblem.from_text(
            "(4/9)*x + 2*A*x^2 + 2*A^2*x^3", x0=1.0, y0=3.0, interval=(-1.0, 2.0),
            constants={"A": 1.0}, beta=0.705, name="fig2",
            notes="cubic inhomogeneity, handbook 1.3.1.14 (closed form not reproduced)",
        ),
        CanonicalProblem.from_text(
            "A/x + A^2/x^3", x0=x3, y0=y3, interval=(0.7, 5.0),
            constants={"A": 1.0}, beta=1.0, name="fig3",
            references=(ReferenceCurve("rational-137-modified"), ReferenceCurve("rational-137-original")),
            notes="rational inhomogeneity, handbook 1.3.1.7; x0 on the modified curve at tau = 1",
        ),
        CanonicalProblem.from_text(
            "A/x^2", x0=x4, y0=y4, interval=(-0.55, -0.15),
            constants={"A": 1.0}, beta=1.0, name="fig4",
            references=(ReferenceCurve("bessel-13133"),),
            notes="rational inhomogeneity, handbook 1.3.1.33; x0 on the Bessel curve at tau = 0.3",
        ),
        CanonicalProblem.from_text(
            "A*(exp(2*x/A) - 1)", x0=x5, y0=y5, interval=(-1.0, 1.9),
            constants={"A": 1.0}, beta=0.32, name="fig5",
            references=(ReferenceCurve("exponential-1319"),),
            notes="exponential inhomogeneity, handbook 1.3.1.9; x0 on the curve at tau = 1",
        ),
    ]


def corpus_entry(index: int) -> CanonicalProblem:
    """Corpus problem by 1-based index."""
    entries = corpus()
    if not 1 <= index <= len(entries):
        raise KeyError(f"corpus entries are numbered 1..{len(entries)}, got {index}")
    return entries[index - 1]


def default_methods(problem: CanonicalProblem) -> tuple[str, ...]:
    return ("closed-form", "numeric") + tuple(r.entry_id for r in problem.references)


def method_tag(method: str) -> str:
    if method == "closed-form":
        return "closed"
    return method.replace("-", "_")


@dataclass
class ComparisonReport:
    problem: str
    methods: list[str]
    x: np.ndarray
    traces: dict[str, SolutionTrace]
    deviations: list[dict]
    residual_stats: dict[str, dict]
    flags: list[dict]
    metadata: dict = field(default_factory=dict)

    @property
    def has_error(self) -> bool:
        return any(f["severity"] == "error" for f in self.flags)

    def flag_codes(self) -> set[str]:
        return {f["code"] for f in self.flags}

    def deviation(self, a: str, b: str) -> dict:
        for d in self.deviations:
            if {d["a"], d["b"]} == {a, b}:
                return d
        raise KeyError((a, b))

    def to_dict(self) -> dict:
        return jsonable(
            {
                "problem": self.problem,
                "methods": self.methods,
                "metadata": self.metadata,
                "residual_stats": self.residual_stats,
                "deviations": self.deviations,
                "flags": self.flags,
                "traces": {
                    m: {
                        "y": self.traces[m].y.tolist(),
                        "residual": self.traces[m].residual.tolist(),
                        "events": [list(e) for e in self.traces[m].events],
                    }
                    for m in self.methods
                    if m in self.traces
                },
                "x": self.x.tolist(),
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        lines = [f"# {k}: {header_value(v)}" for k, v in sorted(self.metadata.items())]
        cols = ["x"]
        for m in self.methods:
            cols += [f"y_{method_tag(m)}", f"r_{method_tag(m)}"]
        lines.append(",".join(cols))
        for i, x in enumerate(self.x):
            row = [format_float(x)]
            for m in self.methods:
                tr = self.traces.get(m)
                if tr is None:
                    row += ["nan", "nan"]
                else:
                    row += [format_float(tr.y[i]), format_float(tr.residual[i])]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def format_float(v) -> str:
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def header_value(v):
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(jsonable(v), sort_keys=True)
    return str(v)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _numeric_trace(problem, grid, cfg, flags):
    """Integrate outward from x0 in both directions and interpolate onto grid."""
    a, b = problem.interval
    pieces = []
    for x_end in (a, b):
        if x_end == problem.x0:
            continue
        try:
            pieces.append(integrate(problem, problem.x0, problem.y0, x_end, cfg))
        except SingularityError as exc:
            flags.append({"code": "singularity", "severity": "warning", "method": "numeric",
                          "x": exc.x_last, "detail": str(exc)})
            if exc.trace is not None and len(exc.trace) >= 2:
                pieces.append(exc.trace)
    xs = np.concatenate([p.x for p in pieces])
    ys = np.concatenate([p.y for p in pieces])
    # the integrator's own residual is second order; five-point stencils keep
    # the difference error below the method's truncation error
    rs = np.concatenate([
        ode_residual(p.x, p.y, problem.Q, order=4) if len(p) >= 3 else np.zeros(len(p)) for p in pieces
    ])
    order = np.argsort(xs, kind="stable")
    xs, ys, rs = xs[order], ys[order], rs[order]
    keep = np.concatenate([[True], np.diff(xs) > 0])
    xs, ys, rs = xs[keep], ys[keep], rs[keep]
    dy = 1.0 + np.array([problem.Q(x) for x in xs]) / ys
    spline = CubicHermiteSpline(xs, ys, dy, extrapolate=False)
    y = spline(grid)
    r = np.interp(grid, xs, rs, left=np.nan, right=np.nan)
    r[~np.isfinite(y)] = np.nan
    valid = np.isfinite(y) & np.isfinite(r)
    y[~valid] = np.nan
    return SolutionTrace(grid, y, r, "numeric", valid=valid), xs


def _closed_trace(problem, grid, params, flags):
    tr = closed_form_trace(problem, params, grid)
    for x, what in tr.events:
        code = "exclusion-gap" if what.startswith("gap") else "branch-switch"
        flags.append({"code": code, "severity": "info", "method": "closed-form", "x": x, "detail": what})
    return tr


def closed_form_params(problem: CanonicalProblem, eps: float = 1e-3) -> ClosedFormParams:
    """Effective parameters: beta and phi from the problem, fitting phi if absent."""
    params = ClosedFormParams(phi=0.0, beta=problem.effective_beta(), branch=problem.branch or "auto", eps=eps)
    if problem.phi is not None:
        return replace(params, phi=problem.phi)
    return replace(params, phi=fit_phi(problem, params))


def _stats(trace):
    r = np.abs(trace.residual[trace.valid])
    if r.size == 0:
        return {"samples": 0, "max_abs": None, "mean_abs": None}
    return {"samples": int(r.size), "max_abs": float(r.max()), "mean_abs": float(r.mean())}


def _deviation(ta, tb):
    shared = ta.valid & tb.valid
    if not shared.any():
        return {"shared_samples": 0, "max_abs": None, "mean_abs": None, "max_normalized": None, "mean_normalized": None}
    ya, yb = ta.y[shared], tb.y[shared]
    diff = np.abs(ya - yb)
    scale = np.maximum(np.abs(ya), np.abs(yb))
    norm = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)
    return {
        "shared_samples": int(shared.sum()),
        "max_abs": float(diff.max()),
        "mean_abs": float(diff.mean()),
        "max_normalized": float(norm.max()),
        "mean_normalized": float(norm.mean()),
    }


def run_comparison(
    problem: CanonicalProblem,
    methods=None,
    grid=None,
    params: ClosedFormParams | None = None,
    integrator: IntegratorConfig = IntegratorConfig(),
    n_grid: int = DEFAULT_GRID_POINTS,
    deviation_flag: float = DEVIATION_FLAG,
) -> ComparisonReport:
    """Evaluate each method on a shared grid and compare them.

    ``methods`` is drawn from ``"closed-form"``, ``"numeric"`` and the ids of
    the problem's reference curves. Method failures become error flags.
    """
    methods = list(default_methods(problem) if methods is None else methods)
    if not methods:
        raise ValueError("at least one method is required")
    known_refs = {r.entry_id: r for r in problem.references}
    for m in methods:
        if m not in ("closed-form", "numeric") and m not in known_refs:
            if m in CATALOG:
                raise ValueError(f"reference curve {m!r} does not belong to problem {problem.name!r}")
            raise ValueError(f"unknown method {m!r}")
    grid = np.linspace(*problem.interval, n_grid) if grid is None else np.asarray(grid, dtype=float)

    flags: list[dict] = []
    traces: dict[str, SolutionTrace] = {}
    meta = {
        "problem": problem.name,
        "Q": str(problem.q),
        "constants": dict(sorted(problem.constants.items())),
        "x0": problem.x0,
        "y0": problem.y0,
        "interval": list(problem.interval),
        "grid_points": len(grid),
        "methods": methods,
        "notes": problem.notes,
        "deviation_flag_threshold": deviation_flag,
    }
    try:
        meta["class"] = _class_text(problem)
    except ClassificationAmbiguousError:
        meta["class"] = "ambiguous (beta supplied explicitly)"

    for m in methods:
        try:
            if m == "closed-form":
                p = params or closed_form_params(problem)
                meta.update(beta=p.beta, phi=p.phi, branch=p.branch, eps=p.eps)
                traces[m] = _closed_trace(problem, grid, p, flags)
            elif m == "numeric":
                meta["integrator"] = {
                    "h_step": integrator.h_step,
                    "order": integrator.order,
                    "corrector_iterations": integrator.corrector_iterations,
                    "y_min": integrator.y_min,
                }
                traces[m], _ = _numeric_trace(problem, grid, integrator, flags)
            else:
                ref = known_refs[m]
                curve = ParametricCurve(ref.entry_id, ref.A, ref.C)
                meta[f"reference:{m}"] = {"A": ref.A, "C": ref.C, "tau_grid": "default"}
                traces[m] = curve_trace(curve, grid)
                if curve.entry.diagnostic_only:
                    flags.append({"code": "diagnostic-reference", "severity": "info", "method": m,
                                  "detail": "reference curve is diagnostic only"})
        except (AbelError, ValueError, ArithmeticError) as exc:
            flags.append({"code": "method-error", "severity": "error", "method": m,
                          "detail": f"{type(exc).__name__}: {exc}"})

    # among several catalog curves for one Q, the one with the smaller
    # residual over its own default grid is the reference of record
    curves = [m for m in methods if m in known_refs and m in traces]
    if len(curves) > 1:
        meta["curve_residuals"] = {
            m: float(curve_residual(ParametricCurve(known_refs[m].entry_id, known_refs[m].A, known_refs[m].C)))
            for m in curves
        }
        meta["primary_reference"] = min(curves, key=lambda m: meta["curve_residuals"][m])

    band = 10.0 * integrator.h_step ** 2
    meta["numeric_residual_band"] = band
    stats = {m: _stats(traces[m]) for m in methods if m in traces}
    for m, s in stats.items():
        if s["max_abs"] is not None and s["max_abs"] > band:
            flags.append({"code": "ode-residual-large", "severity": "warning", "method": m,
                          "detail": f"max |y y' - y - Q| = {s['max_abs']:.6g} exceeds {band:.3g}"})

    deviations = []
    present = [m for m in methods if m in traces]
    for i, a in enumerate(present):
        for b in present[i + 1 :]:
            d = {"a": a, "b": b, **_deviation(traces[a], traces[b])}
            deviations.append(d)
            if d["max_normalized"] is not None and d["max_normalized"] > deviation_flag:
                flags.append({"code": "large-deviation", "severity": "warning", "methods": [a, b],
                              "detail": f"max normalized deviation {d['max_normalized']:.6g} > {deviation_flag}"})

    return ComparisonReport(problem.name, methods, grid, traces, deviations, stats, flags, meta)


def _class_text(problem):
    cls = problem.inhomogeneity_class()
    text = f"{cls.kind.value} n={cls.n}"
    if cls.m is not None:
        text += f" (m={cls.m}, k={cls.k}, base={cls.base.value})"
    return text


def write_report(report: ComparisonReport, stem) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and its JSON mirror ``<stem>.json``."""
    stem = Path(stem)
    if stem.suffix in (".csv", ".json"):
        stem = stem.with_suffix("")
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    csv_path.write_text(report.to_csv())
    json_path.write_text(report.to_json())
    return csv_path, json_path


def reproduce_figures(out_dir, **kwargs) -> list[ComparisonReport]:
    """Run every corpus problem and write fig1..fig5 CSV/JSON into ``out_dir``."""
    out = Path(out_dir)
    reports = []
    for problem in corpus():
        report = run_comparison(problem, **kwargs)
        write_report(report, out / problem.name)
        reports.append(report)
    return reports

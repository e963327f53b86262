"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every check is evaluated and printed before the assertion, so a failing
criterion still reports the measured numbers.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from abelsolve.closed_form import closed_form_trace, evaluate_solution, solve_cardano, solve_z
from abelsolve.constructions import (
    GeneralCoefficients,
    bougoffa_solution,
    branch_residuals,
    check_bougoffa,
    check_julia,
    julia_solution,
    solve_implicit,
    symmetric_integral_check,
)
from abelsolve.expr import parse_expression
from abelsolve.harness import closed_form_params, corpus, reproduce_figures
from abelsolve.integrator import IntegratorConfig, convergence_order, integrate as integrate_ode
from abelsolve.problem import CanonicalProblem
from abelsolve.pz_catalog import ParametricCurve, curve_residual
from abelsolve.special import modified_bessel_first_kind, sine_integral

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5")


@pytest.fixture
def verdict(capsys):
    """Print one line per criterion, then fail if any check failed."""

    def report(number, title, checks):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{text} [{'ok' if passed else 'FAIL'}]" for text, passed in checks)
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {title}: {detail}")
        failed = [text for text, passed in checks if not passed]
        assert not failed, f"criterion {number} failed: {failed}"

    return report


def test_criterion_1_cardano(verdict):
    rng = np.random.default_rng(20240601)
    pairs = rng.uniform(-10, 10, (10_000, 2))
    start = time.perf_counter()
    results = [solve_cardano(float(p), float(q)) for p, q in pairs]
    elapsed = time.perf_counter() - start

    worst, case_mismatch = 0.0, 0
    for (p, q), r in zip(pairs, results):
        D = (p / 3) ** 3 + (q / 2) ** 2
        expected = 3 if abs(D) < 1e-12 * max(1, (p / 3) ** 2, (q / 2) ** 2) else (1 if D < 0 else 2)
        case_mismatch += r.case != expected
        for z in r.roots:
            worst = max(worst, abs(z**3 + p * z + q) / max(1.0, abs(z) ** 3))
    verdict(1, "Cardano suite", [
        (f"max scaled residual {worst:.3g} < 1e-9", worst < 1e-9),
        (f"case mismatches {case_mismatch} == 0", case_mismatch == 0),
        (f"runtime {elapsed:.3f}s < 1s", elapsed < 1.0),
    ])


def test_criterion_2_special_functions(verdict):
    def si_quad(x):
        return integrate.quad(lambda t: math.sin(t) / t if t else 1.0, 0.0, x, epsabs=1e-13, epsrel=1e-13, limit=200)[0]

    si_err = max(abs(sine_integral(x) - si_quad(x)) for x in np.linspace(-20, 20, 200))
    limit_err = abs(sine_integral(200.0) - math.pi / 2)
    rec_err = 0.0
    for x in np.linspace(0.5, 8.0, 100):
        lhs = modified_bessel_first_kind(-2 / 3, x) - modified_bessel_first_kind(4 / 3, x)
        rhs = 2 / (3 * x) * modified_bessel_first_kind(1 / 3, x)
        rec_err = max(rec_err, abs(lhs - rhs) / abs(rhs))
    verdict(2, "special functions", [
        (f"max |Si - quadrature| {si_err:.3g} < 1e-10", si_err < 1e-10),
        (f"|Si(200) - pi/2| {limit_err:.3g} < 0.01", limit_err < 0.01),
        (f"Bessel recurrence rel. error {rec_err:.3g} < 1e-7", rec_err < 1e-7),
    ])


def test_criterion_3_integrator(verdict):
    problem = CanonicalProblem.from_text("exp(2*x) - exp(x)", x0=0.0, y0=1.0, interval=(0.0, 1.0))
    start = time.perf_counter()
    tr = integrate_ode(problem, 0.0, 1.0, 1.0, IntegratorConfig(h_step=1e-3))
    elapsed = time.perf_counter() - start
    err = abs(tr.y[-1] - math.e)
    # at h = 1e-3 the end-point error is round-off, so the order is measured on a coarser step
    order = convergence_order(problem, 0.0, 1.0, 1.0, IntegratorConfig(h_step=0.02), exact=math.e)
    verdict(3, "integrator", [
        (f"|y(1) - e| {err:.3g} < 1e-8", err < 1e-8),
        (f"observed order {order:.3f} in [3.5, 4.5] (h = 0.02)", 3.5 <= order <= 4.5),
        (f"runtime {elapsed:.3f}s < 1s", elapsed < 1.0),
    ])


def test_criterion_4_parametric_references(verdict):
    exponential = curve_residual(ParametricCurve("exponential-1319"))
    modified = curve_residual(ParametricCurve("rational-137-modified"))
    original = curve_residual(ParametricCurve("rational-137-original"))
    verdict(4, "parametric references", [
        (f"exponential residual {exponential:.3g} < 1e-6", exponential < 1e-6),
        (f"modified rational residual {modified:.6g} < 1e-6", modified < 1e-6),
        (f"original rational residual {original:.6g} > modified {modified:.6g}", original > modified),
    ])


def test_criterion_5_constructions(verdict):
    xs = np.linspace(0.0, 1.0, 102)[1:-1]
    bougoffa = GeneralCoefficients.from_text("1", "1", "0", "0", "1")
    lam = check_bougoffa(bougoffa, (0.0, 1.0))
    sol = bougoffa_solution(bougoffa, lam, 3.0, (0.0, 1.0))
    # U^2 + 2U = 2x + C1 means U = -1 + sqrt(1 + 2x + C1) on the upper branch
    shape = max(abs(solve_implicit(sol, x)[0] - (-1 + math.sqrt(4 + 2 * x))) for x in xs)
    b_res = max(float(np.max(np.abs(branch_residuals(bougoffa, sol, xs, b)))) for b in (0, 1))

    julia = GeneralCoefficients.from_text("1", "0", "0", "0", "1")
    j_holds = check_julia(julia, (0.0, 1.0))
    j_sol = julia_solution(julia, 4.0, (0.0, 1.0))
    j_res = max(float(np.max(np.abs(branch_residuals(julia, j_sol, xs, b)))) for b in (0, 1))

    sym = abs(symmetric_integral_check(parse_expression("sin(x)/abs(x)"), 50.0))
    verdict(5, "constructions", [
        (f"Bougoffa lambda {lam!r} == 2", lam is not None and abs(lam - 2.0) < 1e-12),
        (f"implicit solution matches U^2 + 2U = 2x + C1 to {shape:.3g}", shape < 1e-12),
        (f"Bougoffa branch residual {b_res:.3g} < 1e-8 at {len(xs)} points", b_res < 1e-8),
        (f"Julia condition holds: {j_holds}", j_holds),
        (f"Julia branch residual {j_res:.3g} < 1e-8", j_res < 1e-8),
        (f"|int sin x/|x|| {sym:.3g} < 1e-8", sym < 1e-8),
    ])


def test_criterion_6_closed_form_pipeline(verdict, tmp_path):
    checks = []
    for problem in corpus():
        params = closed_form_params(problem)
        z = solve_z(problem.x0, problem, params)
        ic = abs(evaluate_solution(problem.x0, z, params) - problem.y0)
        checks.append((f"{problem.name} initial condition error {ic:.3g} < 1e-10", ic < 1e-10))
        tr = closed_form_trace(problem, params, np.linspace(*problem.interval, 400))
        finite = bool(np.all(np.isfinite(tr.y[tr.valid])))
        gaps = tr.x[~tr.valid]
        inside = bool(np.all(np.abs(gaps) < params.eps))
        checks.append((f"{problem.name} finite, {len(gaps)} gap(s) all inside |x| < eps", finite and inside))

    reports = reproduce_figures(tmp_path / "a")
    reproduce_figures(tmp_path / "b")
    for name in FIGURES:
        exists = all((tmp_path / "a" / (name + ext)).exists() for ext in (".csv", ".json"))
        same = exists and all(
            (tmp_path / "a" / (name + ext)).read_bytes() == (tmp_path / "b" / (name + ext)).read_bytes()
            for ext in (".csv", ".json")
        )
        checks.append((f"{name} files written and deterministic", same))
    for report in reports:
        dev = report.deviation("closed-form", "numeric")
        flagged = any(f["code"] == "large-deviation" and set(f["methods"]) == {"closed-form", "numeric"}
                      for f in report.flags)
        # measured, not asserted: the deviation is reported as a flag
        checks.append((f"{report.problem} closed-form vs numeric max normalized deviation "
                       f"{dev['max_normalized']:.3g} (large-deviation flag: {flagged})", True))
    verdict(6, "closed-form pipeline", checks)


def test_criterion_7_determinism(verdict, tmp_path):
    for run in ("a", "b"):
        reproduce_figures(tmp_path / run)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    differing = [n for n in files if (tmp_path / "a" / n).read_bytes() != (tmp_path / "b" / n).read_bytes()]
    verdict(7, "determinism", [
        (f"{len(files)} artifacts produced", len(files) == 2 * len(FIGURES)),
        (f"byte-identical across runs ({len(differing)} differ)", not differing),
    ])

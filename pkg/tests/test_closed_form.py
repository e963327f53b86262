import math

import numpy as np
import pytest
from scipy import integrate

from abelsolve.closed_form import (
    BRANCHES,
    ClosedFormParams,
    RiccatiDiagnostic,
    beta_factor,
    closed_form_trace,
    coefficient_c,
    compute_psi,
    cubic_at,
    cubic_coefficients,
    evaluate_solution,
    fit_phi,
    riccati_omega,
    roots_at,
    solve_cardano,
    solve_z,
)
from abelsolve.errors import ExclusionZoneError, NoBracketError, PoleError, SingularDenominatorError
from abelsolve.expr import BaseKind, InhomogeneityClass
from abelsolve.harness import closed_form_params, corpus
from abelsolve.problem import CanonicalProblem


def si_quad(x):
    value, _ = integrate.quad(lambda t: math.sin(t) / t, 0.0, x, epsabs=1e-13, epsrel=1e-13, limit=200)
    return value


def c_oracle(x):
    """c(x) with sgn(x)|x| replaced by x and Si from quadrature."""
    psi = x * si_quad(x)
    s, co = math.sin(x), math.cos(x)
    num = 0.5 * psi * math.sin(2 * x) - (2 + 1 / x) * psi * s**2 + 2 * psi**2 * (co - s / x) - s**3
    return num / (-2 * psi**3)


def cubic_residual(z, p, q):
    return abs(z**3 + p * z + q) / max(1.0, abs(z) ** 3)


# psi and c


def test_psi_even_and_identity():
    rng = np.random.default_rng(11)
    for x in rng.uniform(-30, 30, 100):
        if abs(x) < 1e-3:
            continue
        assert abs(compute_psi(-x) - compute_psi(x)) < 1e-13 * max(1, abs(compute_psi(x)))
        assert abs(compute_psi(x) - x * si_quad(x)) < 1e-12 * max(1, abs(x))


def test_psi_at_half_pi():
    assert compute_psi(math.pi / 2) == pytest.approx(math.pi / 2 * si_quad(math.pi / 2), rel=1e-13)


@pytest.mark.parametrize("x", [math.pi / 2, -math.pi / 2, 0.3, 2.0, -7.5, 25.0])
def test_coefficient_c_against_oracle(x):
    assert coefficient_c(x) == pytest.approx(c_oracle(x), rel=1e-11)


def test_coefficient_c_frozen():
    # frozen from the quadrature oracle above
    assert coefficient_c(math.pi / 2) == pytest.approx(c_oracle(math.pi / 2), rel=1e-11)
    assert coefficient_c(math.pi / 2) == pytest.approx(0.63010087, rel=1e-7)


def test_exclusion_zone():
    with pytest.raises(ExclusionZoneError):
        coefficient_c(0.5e-3)
    with pytest.raises(ExclusionZoneError):
        compute_psi(0.0)
    assert math.isfinite(coefficient_c(0.1, eps=0.05))
    with pytest.raises(ExclusionZoneError):
        coefficient_c(0.1, eps=0.2)


# beta


def test_beta_table():
    assert beta_factor(InhomogeneityClass(BaseKind.TRIGONOMETRIC, 7)) == 1.0
    assert beta_factor(InhomogeneityClass(BaseKind.EXPONENTIAL, 1)) == pytest.approx(0.3218)
    assert beta_factor(InhomogeneityClass.rational(1, 3)) == 1.0
    assert beta_factor(InhomogeneityClass(BaseKind.POLYNOMIAL, 1)) == pytest.approx(0.991)
    assert beta_factor(InhomogeneityClass(BaseKind.POLYNOMIAL, 3)) == pytest.approx(-0.252 * math.log(3) + 0.991)
    assert beta_factor(InhomogeneityClass(BaseKind.LOGARITHM, 2)) == pytest.approx(-0.0212 + 0.085 + 0.981)
    # rational with n >= 2 uses the base row
    assert beta_factor(InhomogeneityClass.rational(5, 2, BaseKind.EXPONENTIAL)) == pytest.approx(
        -0.12 * math.log(3) + 0.3218
    )
    with pytest.raises(ValueError):
        beta_factor(InhomogeneityClass(BaseKind.MIXED, 2))


# cubic


def test_cubic_coefficients_arithmetic():
    cc = cubic_coefficients(0.0, 0.0, 1.0)
    assert cc.a == -4 and cc.b == 3
    assert cc.p == pytest.approx(-7 / 3, abs=1e-15)
    assert cc.q == pytest.approx(-20 / 27, abs=1e-14)


def test_cubic_consistency_and_pole():
    cc = cubic_at(1.3, 2.5, 0.7)
    assert cc.D == (cc.p / 3) ** 3 + (cc.q / 2) ** 2
    assert cc.p == -cc.a**2 / 3 + cc.b
    assert cc.q == 2 * (cc.a / 3) ** 3 - cc.a * cc.b / 3 + cc.c
    with pytest.raises(PoleError):
        cubic_at(1.5, 2.0, -1.5)


def test_cardano_examples():
    r = solve_cardano(0.0, 0.0)
    assert r.case == 3 and r.roots == (0.0, -0.0, -0.0)
    r = solve_cardano(-3.0, 2.0)
    assert r.case == 3
    assert sorted(r.roots) == pytest.approx([-2.0, 1.0, 1.0])
    for z in r.roots:
        assert abs(z**3 - 3 * z + 2) < 1e-12
    r = solve_cardano(-7 / 3, -20 / 27)
    assert r.case == 1
    for z in r.roots:
        assert abs(z**3 - 7 / 3 * z - 20 / 27) < 1e-12


def test_cardano_random_suite():
    rng = np.random.default_rng(2024)
    for p, q in rng.uniform(-10, 10, (10_000, 2)):
        r = solve_cardano(p, q)
        D = (p / 3) ** 3 + (q / 2) ** 2
        tol = 1e-12 * max(1, (p / 3) ** 2, (q / 2) ** 2)
        expected = 3 if abs(D) < tol else (1 if D < 0 else 2)
        assert r.case == expected
        for z in r.roots:
            assert cubic_residual(z, p, q) < 1e-9
        if r.case == 1:
            assert p < 0 and len(set(r.roots)) == 3
        if r.case == 2:
            assert len(r.roots) == 1
            for w in r.complex_pair:
                assert abs(w**3 + p * w + q) < 1e-9 * max(1, abs(w) ** 3)


# evaluate / solve_z


def test_evaluate_solution():
    params = ClosedFormParams(phi=1.0, beta=1.0)
    assert evaluate_solution(1.0, 2 / 3, params) == pytest.approx(1.0)
    p = ClosedFormParams(phi=0.4, beta=0.7)
    assert evaluate_solution(2.3, -1 / (3 * 0.7), p) == pytest.approx(0.0, abs=1e-15)
    assert evaluate_solution(-0.4, 5.0, p) == 0.0
    # affine in Z with slope (x + phi) beta / 2
    slope = (evaluate_solution(2.0, 3.0, p) - evaluate_solution(2.0, 1.0, p)) / 2.0
    assert slope == pytest.approx(0.5 * 2.4 * 0.7)


def test_params_invariants():
    with pytest.raises(ValueError):
        ClosedFormParams(eps=0)
    with pytest.raises(ValueError):
        ClosedFormParams(beta=0)
    with pytest.raises(ValueError):
        ClosedFormParams(phi=math.inf)
    with pytest.raises(ValueError):
        ClosedFormParams(branch="Z4")


@pytest.fixture
def zero_q():
    return CanonicalProblem.from_text("0", x0=1.0, y0=1.0, interval=(0.5, 3.0))


@pytest.mark.parametrize("branch", BRANCHES)
def test_solve_z_satisfies_cubic(zero_q, branch):
    params = ClosedFormParams(phi=0.5, branch=branch)
    for x in np.linspace(0.5, 3.0, 40):
        z = solve_z(x, zero_q, params)
        cc = cubic_at(x, 0.0, 0.5)
        assert cubic_residual(z, cc.p, cc.q) < 1e-9


def test_solve_z_continuity(zero_q):
    params = ClosedFormParams(phi=0.5, branch="Z1")
    xs = np.linspace(1.0, 1.01, 11)
    zs = [solve_z(x, zero_q, params) for x in xs]
    assert max(abs(np.diff(zs))) < 1e-2


def test_solve_z_exclusion(zero_q):
    with pytest.raises(ExclusionZoneError):
        solve_z(1e-4, zero_q, ClosedFormParams())


def test_pinned_branch_falls_back_to_z1(zero_q):
    params = ClosedFormParams(phi=0.5, branch="Z3")
    for x in np.linspace(0.5, 3.0, 40):
        roots = roots_at(x, zero_q, params)
        z = solve_z(x, zero_q, params)
        assert z == (roots.roots[2] if len(roots.roots) == 3 else roots.roots[0])


# fit_phi


@pytest.mark.parametrize("problem", corpus(), ids=lambda p: p.name)
def test_fit_phi_meets_initial_condition(problem):
    params = closed_form_params(problem)
    z = solve_z(problem.x0, problem, params)
    assert abs(evaluate_solution(problem.x0, z, params) - problem.y0) < 1e-10


@pytest.mark.parametrize("branch", ["Z1", "Z2"])
def test_fit_phi_pinned_branches(branch):
    problem = CanonicalProblem.from_text("A*x + B", x0=1.0, y0=3.0, interval=(0.5, 2.0), constants={"A": 1, "B": 1})
    phi = fit_phi(problem, ClosedFormParams(beta=1.0, branch=branch))
    fitted = ClosedFormParams(phi=phi, beta=1.0, branch=branch)
    # idempotence: evaluating at x0 reproduces y0
    assert abs(evaluate_solution(1.0, solve_z(1.0, problem, fitted), fitted) - 3.0) < 1e-10


def test_fit_phi_unreachable_pinned_branch():
    # the middle root Z3 never lifts y(1) to 3 for any phi in the scan range
    problem = CanonicalProblem.from_text("A*x + B", x0=1.0, y0=3.0, interval=(0.5, 2.0), constants={"A": 1, "B": 1})
    with pytest.raises(NoBracketError):
        fit_phi(problem, ClosedFormParams(beta=1.0, branch="Z3"))


def test_fit_phi_no_bracket():
    problem = CanonicalProblem.from_text("A*x + B", x0=1.0, y0=1e9, interval=(0.5, 2.0), constants={"A": 1, "B": 1})
    with pytest.raises(NoBracketError):
        fit_phi(problem, ClosedFormParams())


def test_fit_phi_in_exclusion_zone():
    problem = CanonicalProblem.from_text("x", x0=0.0, y0=1.0, interval=(-1.0, 1.0))
    with pytest.raises(ExclusionZoneError):
        fit_phi(problem, ClosedFormParams())


def test_fitted_phi_regression():
    # frozen after the fit was validated against the initial condition
    phis = [closed_form_params(p).phi for p in corpus()]
    expected = [0.6321672370233341, 0.8549655993866289, 0.592233839499581, 0.6647899555069293, 22.885823111381843]
    assert phis == pytest.approx(expected, rel=1e-9)


# traces


def test_trace_gaps_only_in_exclusion_zone():
    problem = CanonicalProblem.from_text("x", x0=1.0, y0=2.0, interval=(-1.0, 1.0))
    params = replace_phi(problem)
    grid = np.linspace(-1.0, 1.0, 401)
    tr = closed_form_trace(problem, params, grid)
    gaps = grid[~tr.valid]
    assert gaps.size > 0 and np.all(np.abs(gaps) < params.eps) or np.all(np.isclose(gaps, -params.phi))
    assert np.all(np.isfinite(tr.residual[tr.valid]))
    assert any(what.startswith("gap") for _, what in tr.events)


def replace_phi(problem):
    params = ClosedFormParams(beta=1.0)
    return ClosedFormParams(phi=fit_phi(problem, params), beta=1.0)


# Riccati diagnostic


def test_riccati_particular_matches_log_derivative():
    # Z + 1/3 = d/dx (1/2) ln(sgn(x) Si(x))
    diag = RiccatiDiagnostic(C3=5.0)
    d = 1e-5
    for x in (0.5, 1.7, 4.0, -2.5, 12.0):
        fd = 0.5 * (math.log(diag.Phi(x + d)) - math.log(diag.Phi(x - d))) / (2 * d)
        assert diag.particular(x) == pytest.approx(fd, rel=1e-7, abs=1e-9)


def test_riccati_phi_even_positive():
    diag = RiccatiDiagnostic(C3=0.0)
    for x in (0.3, 2.0, 9.0):
        assert diag.Phi(x) == diag.Phi(-x) > 0


def test_riccati_tau_vanishes():
    diag = RiccatiDiagnostic(C3=0.0)
    taus = [abs(diag.tau(x)) for x in (10.0, 20.0, 40.0, 80.0)]
    assert all(a > b for a, b in zip(taus, taus[1:]))
    x = 80.0
    assert abs(riccati_omega(x, 0.0) - math.sin(x) / (2 * x * si_quad(x))) == pytest.approx(taus[-1])


def test_riccati_singular_denominator():
    diag = RiccatiDiagnostic(C3=0.0)
    diag = RiccatiDiagnostic(C3=diag.integral_Phi(2.0))
    with pytest.raises(SingularDenominatorError):
        diag.tau(2.0)
    with pytest.raises(ExclusionZoneError):
        riccati_omega(0.0, 1.0)

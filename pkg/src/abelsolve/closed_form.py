"""Closed-form candidate solution of y y' - y = Q(x).

The candidate is y = (x + phi) (beta Z + 1/3) / 2 where Z is a real root of
the depressed cubic Z^3 + p Z + q = 0 with

    a = -4,  b = 3 - c - 4 Q(x) / (x + phi),
    p = -a^2/3 + b,  q = 2 (a/3)^3 - a b / 3 + c,

and c(x) built from psi(x) = sgn(x) |x| Si(x). Nothing here asserts that the
candidate solves the ODE; the harness measures that.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import ExclusionZoneError, NoBracketError, PoleError, SingularDenominatorError
from .expr import BaseKind, InhomogeneityClass
from .problem import CanonicalProblem
from .special import sign, sine_integral
from .trace import SolutionTrace

A_COEFF = -4.0
DEFAULT_EPS = 1e-3
BRANCHES = ("auto", "Z1", "Z2", "Z3")

# h(x) = (x + phi) / 2, k = h^2 and lambda = 2 are fixed by the construction
LAMBDA = 2.0


def _guard(x, eps):
    if abs(x) < eps:
        raise ExclusionZoneError(f"x={float(x)!r} lies inside the exclusion zone |x| < {eps}")


def compute_psi(x: float, eps: float = DEFAULT_EPS) -> float:
    """psi(x) = sgn(x) |x| Si(x), an even function of x."""
    _guard(x, eps)
    return sign(x) * abs(x) * sine_integral(x)


@lru_cache(maxsize=8192)
def _coefficient_c(x):
    psi = sign(x) * abs(x) * sine_integral(x)
    sx = sign(x) * abs(x)
    s, co = math.sin(x), math.cos(x)
    numerator = (
        0.5 * psi * math.sin(2.0 * x)
        - (2.0 + 1.0 / sx) * psi * s * s
        + 2.0 * psi * psi * (co - s / sx)
        - s ** 3
    )
    return numerator / (-2.0 * psi ** 3)


def coefficient_c(x: float, eps: float = DEFAULT_EPS) -> float:
    """The cubic's constant-term coefficient c(x), evaluated term by term as printed."""
    _guard(x, eps)
    return _coefficient_c(float(x))


def beta_factor(cls: InhomogeneityClass) -> float:
    """Order-effect factor for an inhomogeneity of the given class."""
    kind, n = cls.kind, cls.n
    if kind is BaseKind.RATIONAL:
        if n < 2:
            return 1.0
        return beta_factor(InhomogeneityClass(cls.base, n))
    if kind is BaseKind.POLYNOMIAL:
        return -0.252 * math.log(n) + 0.991
    if kind is BaseKind.LOGARITHM:
        return -0.0053 * n * n + 0.0425 * n + 0.981
    if kind is BaseKind.EXPONENTIAL:
        return -0.12 * math.log(n) + 0.3218
    if kind is BaseKind.TRIGONOMETRIC:
        return 1.0
    raise ValueError("mixed inhomogeneities have no tabulated factor; override with a concrete kind")


@dataclass(frozen=True)
class CubicCoefficients:
    a: float
    b: float
    c: float
    p: float
    q: float
    D: float


def cubic_coefficients(c: float, qx: float, x_plus_phi: float) -> CubicCoefficients:
    if x_plus_phi == 0.0:
        raise PoleError("x + phi = 0: the cubic coefficient b has a pole")
    a = A_COEFF
    b = 3.0 - c - 4.0 * qx / x_plus_phi
    p = -a * a / 3.0 + b
    q = 2.0 * (a / 3.0) ** 3 - a * b / 3.0 + c
    D = (p / 3.0) ** 3 + (q / 2.0) ** 2
    return CubicCoefficients(a, b, c, p, q, D)


def cubic_at(x: float, qx: float, phi: float, eps: float = DEFAULT_EPS) -> CubicCoefficients:
    """Cubic coefficients at x given Q(x) and the integration constant phi."""
    c = coefficient_c(x, eps)
    return cubic_coefficients(c, qx, x + phi)


@dataclass(frozen=True)
class CardanoRoots:
    """Real roots of Z^3 + p Z + q = 0.

    ``case`` is 1 (D < 0, three distinct real roots), 2 (D > 0, one real
    root; the conjugate pair sits in ``complex_pair``) or 3 (D = 0 within
    tolerance; a simple root and a double root).
    """

    case: int
    roots: tuple[float, ...]
    D: float
    complex_pair: tuple[complex, complex] | None = None


def discriminant_case(p: float, q: float) -> tuple[int, float]:
    D = (p / 3.0) ** 3 + (q / 2.0) ** 2
    if abs(D) < 1e-12 * max(1.0, (p / 3.0) ** 2, (q / 2.0) ** 2):
        return 3, D
    return (1 if D < 0 else 2), D


def solve_cardano(p: float, q: float) -> CardanoRoots:
    case, D = discriminant_case(p, q)
    if case == 1:
        r = math.sqrt(-p / 3.0)
        cos_beta = -q / (2.0 * math.sqrt(-((p / 3.0) ** 3)))
        beta = math.acos(min(1.0, max(-1.0, cos_beta)))
        roots = (
            2.0 * r * math.cos(beta / 3.0),
            -2.0 * r * math.cos((beta - math.pi) / 3.0),
            -2.0 * r * math.cos((beta + math.pi) / 3.0),
        )
        return CardanoRoots(1, roots, D)
    if case == 2:
        s = math.sqrt(D)
        # take the cube root without cancellation first; u v = -p/3 gives the other
        w = -0.5 * q - math.copysign(s, q)
        u = math.copysign(abs(w) ** (1.0 / 3.0), w)
        v = -p / (3.0 * u)
        z1 = u + v
        im = 0.5 * math.sqrt(3.0) * (u - v)
        pair = (complex(-0.5 * z1, im), complex(-0.5 * z1, -im))
        return CardanoRoots(2, (z1,), D, pair)
    m = -0.5 * q
    s = math.copysign(abs(m) ** (1.0 / 3.0), m)
    return CardanoRoots(3, (2.0 * s, -s, -s), D)


@dataclass(frozen=True)
class ClosedFormParams:
    """phi (integration constant), beta (order-effect factor), root branch, eps.

    ``branch`` is ``"auto"`` (residual-minimizing root at the initial point,
    then nearest-root continuation) or one of ``"Z1"``, ``"Z2"``, ``"Z3"``.
    """

    phi: float = 0.0
    beta: float = 1.0
    branch: str = "auto"
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not math.isfinite(self.phi):
            raise ValueError("phi must be finite")
        if self.branch not in BRANCHES:
            raise ValueError(f"branch must be one of {BRANCHES}")


def evaluate_solution(x: float, z: float, params: ClosedFormParams) -> float:
    return 0.5 * (x + params.phi) * (params.beta * z + 1.0 / 3.0)


def roots_at(x: float, problem: CanonicalProblem, params: ClosedFormParams) -> CardanoRoots:
    cubic = cubic_at(x, problem.Q(x), params.phi, params.eps)
    return solve_cardano(cubic.p, cubic.q)


def _nearest(roots, target):
    return min(roots, key=lambda r: abs(r - target))


def _pinned(roots: CardanoRoots, branch):
    idx = int(branch[1]) - 1
    if idx < len(roots.roots):
        return roots.roots[idx], False
    return roots.roots[0], True


def _step(x):
    return 1e-5 * max(1.0, abs(x))


def _local_residual(x, z, problem, params):
    """|y y' - y - Q| at x following the root nearest z to x +- delta."""
    d = _step(x)
    ys = []
    for xs in (x - d, x + d):
        rs = roots_at(xs, problem, params)
        if params.branch == "auto":
            zs = _nearest(rs.roots, z)
        else:
            zs = _pinned(rs, params.branch)[0]
        ys.append(evaluate_solution(xs, zs, params))
    y = evaluate_solution(x, z, params)
    dy = (ys[1] - ys[0]) / (2.0 * d)
    return y * dy - y - problem.Q(x)


IC_TOL = 1e-10


def select_initial_root(x, problem, params, roots=None, target_y=None):
    """Real root at x whose candidate solution has the smallest ODE residual.

    With ``target_y`` given, only roots whose candidate reproduces it (to
    IC_TOL) compete, falling back to all roots when none does.
    """
    roots = roots or roots_at(x, problem, params)
    pool = list(roots.roots)
    if target_y is not None:
        hits = [z for z in pool if abs(evaluate_solution(x, z, params) - target_y) < IC_TOL]
        pool = hits or pool
    best, best_r = pool[0], math.inf
    for z in pool:
        try:
            r = abs(_local_residual(x, z, problem, params))
        except (ExclusionZoneError, PoleError):
            r = math.inf
        if r < best_r:
            best, best_r = z, r
    return best


def solve_z(
    x: float,
    problem: CanonicalProblem,
    params: ClosedFormParams,
    previous: float | None = None,
) -> float:
    """The cubic root selected by ``params.branch`` at x.

    A pinned branch that does not exist at x (e.g. Z2 when D > 0) falls back
    to Z1, the root present in every case. In auto mode, ``previous`` is the
    root at the neighbouring sample and the nearest root is returned; without
    it the residual-minimizing root is chosen, restricted at x0 to the roots
    that meet the initial condition.
    """
    roots = roots_at(x, problem, params)
    if params.branch != "auto":
        return _pinned(roots, params.branch)[0]
    if previous is not None:
        return _nearest(roots.roots, previous)
    target = problem.y0 if x == problem.x0 else None
    return select_initial_root(x, problem, params, roots, target)


def fit_phi(
    problem: CanonicalProblem,
    params: ClosedFormParams,
    x0: float | None = None,
    y0: float | None = None,
    phi_range: tuple[float, float] = (-1e3, 1e3),
    scan_points: int = 10_000,
) -> float:
    """Integration constant phi that makes the candidate pass through (x0, y0).

    ``params.phi`` is ignored. For each admissible root branch the range is
    scanned for sign changes of y(x0; phi) - y0 and every bracket is refined
    with Brent's method. Among the solutions meeting the initial condition
    to 1e-10, a pinned branch takes the smallest |phi|; auto mode takes the
    one with the smallest ODE residual at x0.
    """
    x0 = problem.x0 if x0 is None else x0
    y0 = problem.y0 if y0 is None else y0
    _guard(x0, params.eps)
    c0 = coefficient_c(x0, params.eps)
    q0 = problem.Q(x0)

    def root(phi, index, fallback):
        try:
            cubic = cubic_coefficients(c0, q0, x0 + phi)
        except PoleError:
            return math.nan
        roots = solve_cardano(cubic.p, cubic.q).roots
        if index < len(roots):
            return roots[index]
        return roots[0] if fallback else math.nan

    def g(phi, index, fallback):
        return 0.5 * (x0 + phi) * (params.beta * root(phi, index, fallback) + 1.0 / 3.0) - y0

    if params.branch == "auto":
        branches = [(i, False) for i in range(3)]
    else:
        branches = [(int(params.branch[1]) - 1, True)]

    grid = np.linspace(phi_range[0], phi_range[1], scan_points)
    found = []
    for index, fallback in branches:
        values = [g(phi, index, fallback) for phi in grid]
        for i in range(scan_points - 1):
            ga, gb = values[i], values[i + 1]
            if not (math.isfinite(ga) and math.isfinite(gb)):
                continue
            if ga == 0.0:
                phi = grid[i]
            elif ga * gb < 0:
                try:
                    phi = optimize.brentq(
                        g, grid[i], grid[i + 1], args=(index, fallback),
                        xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200,
                    )
                except (ValueError, RuntimeError):
                    continue
            else:
                continue
            if abs(g(phi, index, fallback)) < IC_TOL:
                found.append((float(phi), root(phi, index, fallback)))
    if not found:
        raise NoBracketError(
            f"no phi in [{phi_range[0]}, {phi_range[1]}] reproduces y({x0})={y0}"
        )
    if params.branch != "auto":
        return min(found, key=lambda c: (abs(c[0]), c[0]))[0]

    def score(cand):
        phi, z = cand
        try:
            r = abs(_local_residual(x0, z, problem, replace(params, phi=phi)))
        except (ExclusionZoneError, PoleError):
            r = math.inf
        return (r, abs(phi), phi)

    return min(found, key=score)[0]


def closed_form_trace(
    problem: CanonicalProblem, params: ClosedFormParams, grid: np.ndarray
) -> SolutionTrace:
    """Evaluate the candidate on ``grid`` (ascending), marching out from x0.

    Samples with |x| < eps or x = -phi become gaps. The residual uses a
    local centred difference that follows the same root.
    """
    grid = np.asarray(grid, dtype=float)
    n = len(grid)
    y = np.full(n, np.nan)
    z_all = np.full(n, np.nan)
    res = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)
    events: list[tuple[float, str]] = []

    z0 = solve_z(problem.x0, problem, params)
    start = int(np.searchsorted(grid, problem.x0))
    for order in (range(start, n), range(start - 1, -1, -1)):
        prev_z, prev_case, in_gap = z0, None, False
        for i in order:
            x = grid[i]
            try:
                roots = roots_at(x, problem, params)
            except (ExclusionZoneError, PoleError) as exc:
                if not in_gap:
                    events.append((float(x), f"gap: {exc}"))
                in_gap = True
                continue
            in_gap = False
            if params.branch == "auto":
                z = _nearest(roots.roots, prev_z)
            else:
                z, fell_back = _pinned(roots, params.branch)
                if fell_back:
                    events.append((float(x), f"branch {params.branch} absent (case {roots.case}); using Z1"))
            if prev_case is not None and roots.case != prev_case:
                events.append((float(x), f"branch switch: root case {prev_case} -> {roots.case}"))
            prev_case = roots.case
            prev_z = z
            z_all[i] = z
            y[i] = evaluate_solution(x, z, params)
            try:
                res[i] = _local_residual(x, z, problem, params)
            except (ExclusionZoneError, PoleError):
                res[i] = math.nan
            valid[i] = math.isfinite(y[i]) and math.isfinite(res[i])
            if not valid[i]:
                y[i] = math.nan
    events.sort(key=lambda e: e[0])
    trace = SolutionTrace(grid, y, res, "closed-form", valid=valid, events=events)
    trace.z = z_all
    return trace


class RiccatiDiagnostic:
    """General Riccati solution omega_g = particular(x) + tau(x) for a constant C3.

    particular(x) = sin x / (2 sgn(x) |x| Si(x)) and
    tau(x) = Phi(x) / (C3 - int_0^x Phi), Phi(x) = sgn(x) Si(x).
    """

    def __init__(self, C3: float, eps: float = DEFAULT_EPS):
        self.C3 = C3
        self.eps = eps

    @staticmethod
    def Phi(x):
        return sign(x) * sine_integral(x)

    def integral_Phi(self, x):
        value, _ = integrate.quad(self.Phi, 0.0, x, epsabs=1e-13, epsrel=1e-13, limit=400)
        return value

    def particular(self, x):
        _guard(x, self.eps)
        return math.sin(x) / (2.0 * sign(x) * abs(x) * sine_integral(x))

    def tau(self, x):
        _guard(x, self.eps)
        acc = self.integral_Phi(x)
        denom = self.C3 - acc
        if abs(denom) <= 1e-12 * max(1.0, abs(self.C3), abs(acc)):
            raise SingularDenominatorError(f"C3 - int Phi vanishes at x={x!r}")
        return self.Phi(x) / denom

    def omega(self, x):
        return self.particular(x) + self.tau(x)


def riccati_omega(x: float, C3: float, eps: float = DEFAULT_EPS) -> float:
    return RiccatiDiagnostic(C3, eps).omega(x)

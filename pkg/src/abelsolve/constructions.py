"""General-solution constructions for [g1 U + g0] U' = f2 U^2 + f1 U + f0.

Both constructions reduce the equation to an implicit quadratic
alpha(x) U^2 + gamma(x) U = rho(x) + C. Every indefinite integral is taken
from the left end of the working interval; the missing constant is absorbed
into C.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate

from .errors import CoefficientZeroError, QuadratureError
from .expr import Node, compile_expression, parse_expression

QUAD_TOL = 1e-10
_COEFF_NAMES = ("g1", "g0", "f2", "f1", "f0")


@dataclass(frozen=True)
class GeneralCoefficients:
    g1: Node
    g0: Node
    f2: Node
    f1: Node
    f0: Node
    constants: Mapping[str, float] = field(default_factory=dict)

    @classmethod
    def from_text(cls, g1, g0, f2, f1, f0, constants=None):
        return cls(*(parse_expression(t) for t in (g1, g0, f2, f1, f0)), constants=dict(constants or {}))

    def functions(self):
        return {name: compile_expression(getattr(self, name), self.constants) for name in _COEFF_NAMES}

    def residual(self, x, u, du):
        """[g1 U + g0] U' - (f2 U^2 + f1 U + f0) at one point."""
        f = self.functions()
        return (f["g1"](x) * u + f["g0"](x)) * du - (f["f2"](x) * u * u + f["f1"](x) * u + f["f0"](x))


def _quad(func, a, b):
    if a == b:
        return 0.0
    with warnings.catch_warnings():
        # convergence trouble is reported through the error estimate below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(func, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    if not err < QUAD_TOL:
        raise QuadratureError(f"quadrature error estimate {err:.3g} on [{a}, {b}] exceeds {QUAD_TOL}")
    return value


def _require_nonzero(func, name, xs):
    vals = np.array([func(x) for x in xs])
    zero = np.flatnonzero(vals == 0.0)
    if zero.size:
        raise CoefficientZeroError(f"{name} vanishes at x={float(xs[zero[0]])!r}")
    flips = np.flatnonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))
    if flips.size:
        i = flips[0]
        raise CoefficientZeroError(f"{name} changes sign between x={float(xs[i])!r} and x={float(xs[i + 1])!r}")


class _Cumulative:
    """Anchored integral F(x) = int_a^x f, memoized per abscissa."""

    def __init__(self, f, a):
        self.f, self.a = f, a
        self._cache: dict[float, float] = {}

    def __call__(self, x):
        x = float(x)
        if x not in self._cache:
            self._cache[x] = _quad(self.f, self.a, x)
        return self._cache[x]


def bougoffa_factors(coeffs: GeneralCoefficients, a: float):
    """B1(x) = exp(-2 int f2/g1) and B2(x) = exp(-int f1/g0), anchored at a."""
    f = coeffs.functions()
    i1 = _Cumulative(lambda t: f["f2"](t) / f["g1"](t), a)
    i2 = _Cumulative(lambda t: f["f1"](t) / f["g0"](t), a)
    return (lambda x: math.exp(-2.0 * i1(x))), (lambda x: math.exp(-i2(x)))


def check_bougoffa(coeffs: GeneralCoefficients, interval, samples: int = 101) -> float | None:
    """The constant lambda with 2 B1 g0 = lambda B2 g1, or None if it varies."""
    a, b = interval
    xs = np.linspace(a, b, samples)
    f = coeffs.functions()
    _require_nonzero(f["g1"], "g1", xs)
    _require_nonzero(f["g0"], "g0", xs)
    B1, B2 = bougoffa_factors(coeffs, a)
    lam = np.array([2.0 * B1(x) * f["g0"](x) / (B2(x) * f["g1"](x)) for x in xs])
    mean = float(lam.mean())
    if np.max(np.abs(lam - mean)) < 1e-8 * (1.0 + abs(mean)):
        return mean
    return None


@dataclass
class ImplicitQuadraticSolution:
    """alpha(x) U^2 + gamma(x) U = rho(x) + C on a working interval."""

    kind: str
    alpha: Callable[[float], float]
    gamma: Callable[[float], float]
    rho: Callable[[float], float]
    C: float
    interval: tuple[float, float]

    def with_constant(self, C: float) -> ImplicitQuadraticSolution:
        return ImplicitQuadraticSolution(self.kind, self.alpha, self.gamma, self.rho, C, self.interval)

    def constant_through(self, x: float, u: float) -> float:
        """The C that puts (x, u) on the implicit curve."""
        return self.alpha(x) * u * u + self.gamma(x) * u - self.rho(x)


def bougoffa_solution(coeffs: GeneralCoefficients, lam: float, C1: float, interval) -> ImplicitQuadraticSolution:
    a = interval[0]
    f = coeffs.functions()
    B1, B2 = bougoffa_factors(coeffs, a)
    rho_int = _Cumulative(lambda t: f["f0"](t) / f["g1"](t) * B1(t), a)
    return ImplicitQuadraticSolution(
        "bougoffa",
        alpha=B1,
        gamma=lambda x: lam * B2(x),
        rho=lambda x: 2.0 * rho_int(x),
        C=C1,
        interval=tuple(interval),
    )


def _derivative(func, x, scale):
    d = 1e-6 * scale
    return (func(x + d) - func(x - d)) / (2.0 * d)


def check_julia(coeffs: GeneralCoefficients, interval, samples: int = 101) -> bool:
    """Whether g0 [2 f2 + g1'] = g1 [f1 + g0'] holds at every sample (rel. 1e-6)."""
    a, b = interval
    xs = np.linspace(a, b, samples)
    f = coeffs.functions()
    _require_nonzero(f["g1"], "g1", xs)
    scale = max(1.0, abs(a), abs(b))
    for x in xs:
        left = f["g0"](x) * (2.0 * f["f2"](x) + _derivative(f["g1"], x, scale))
        right = f["g1"](x) * (f["f1"](x) + _derivative(f["g0"], x, scale))
        if abs(left - right) > 1e-6 * max(1.0, abs(left), abs(right)):
            return False
    return True


def julia_factor(coeffs: GeneralCoefficients, a: float):
    """J(x) = exp(2 int f2/g1), anchored at a."""
    f = coeffs.functions()
    i = _Cumulative(lambda t: f["f2"](t) / f["g1"](t), a)
    return lambda x: math.exp(2.0 * i(x))


def julia_solution(coeffs: GeneralCoefficients, C2: float, interval) -> ImplicitQuadraticSolution:
    a = interval[0]
    f = coeffs.functions()
    g1 = f["g1"]
    _require_nonzero(g1, "g1", np.linspace(interval[0], interval[1], 101))
    J = julia_factor(coeffs, a)
    rho_int = _Cumulative(lambda t: f["f0"](t) / (g1(t) * J(t)), a)
    return ImplicitQuadraticSolution(
        "julia",
        alpha=lambda x: 1.0 / J(x),
        gamma=lambda x: 2.0 * f["g0"](x) / (g1(x) * J(x)),
        rho=lambda x: 2.0 * rho_int(x),
        C=C2,
        interval=tuple(interval),
    )


def solve_implicit(sol: ImplicitQuadraticSolution, x: float) -> tuple[float, ...]:
    """Real roots of alpha U^2 + gamma U - (rho + C) = 0, larger root first."""
    alpha = sol.alpha(x)
    if alpha == 0.0:
        raise CoefficientZeroError(f"alpha vanishes at x={x!r}")
    gamma = sol.gamma(x)
    rhs = sol.rho(x) + sol.C
    disc = gamma * gamma + 4.0 * alpha * rhs
    if disc < 0:
        return ()
    sq = math.sqrt(disc)
    # stable quadratic formula
    t = -0.5 * (gamma + math.copysign(sq, gamma)) if gamma != 0 else 0.5 * sq
    if t == 0.0:
        return (0.0, 0.0) if disc == 0 else (sq / (2 * alpha), -sq / (2 * alpha))
    r1, r2 = t / alpha, -rhs / t
    return tuple(sorted((r1, r2), reverse=True))


def branch_residuals(coeffs: GeneralCoefficients, sol: ImplicitQuadraticSolution, xs, branch: int = 0):
    """Residual of the general Abel equation along one root branch, with U' from a five-point stencil."""
    span = sol.interval[1] - sol.interval[0]
    d = 1e-3 * span
    out = []
    for x in xs:
        us = []
        for k in (-2, -1, 0, 1, 2):
            roots = solve_implicit(sol, x + k * d)
            if len(roots) < 2:
                us = None
                break
            us.append(roots[branch])
        if us is None:
            out.append(math.nan)
            continue
        du = (us[0] - 8 * us[1] + 8 * us[3] - us[4]) / (12 * d)
        out.append(coeffs.residual(x, us[2], du))
    return np.array(out)


def symmetric_integral_check(f: Node | Callable[[float], float], a: float, bindings=None) -> float:
    """Integral of f over [-a, a], split at the origin so x = 0 is never sampled."""
    func = compile_expression(f, bindings) if isinstance(f, Node) else f
    left, _ = integrate.quad(func, -a, 0.0, epsabs=1e-14, epsrel=1e-13, limit=1000)
    right, _ = integrate.quad(func, 0.0, a, epsabs=1e-14, epsrel=1e-13, limit=1000)
    return left + right

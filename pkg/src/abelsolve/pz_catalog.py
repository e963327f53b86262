"""Parametric reference solutions (x(tau), y(tau)) from the handbook catalog.

Entries:

* ``rational-137-original``: Q = A/x + A^2/x^3, radicand tau - ln(1+tau) - C
* ``rational-137-modified``: same Q, radicand tau + ln(1+tau) - C
* ``bessel-13133``: Q = A/x^2, built from I_{-2/3}, I_{1/3}, I_{4/3}
* ``exponential-1319``: Q = A (exp(2x/A) - 1)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import DomainError, TurningPointError
from .expr import compile_expression, parse_expression
from .special import modified_bessel_first_kind
from .trace import SolutionTrace


def _cbrt(v):
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def rational_137_xy(tau, A, C, log_sign):
    """Rational-family curve with the ln(1+tau) term entering with ``log_sign``."""
    if tau <= -1.0 or tau == 0.0:
        raise DomainError(f"tau={tau!r} outside the rational curve's domain")
    s = tau + log_sign * math.log1p(tau) - C
    if s <= 0.0:
        raise DomainError(f"negative radicand {s!r} at tau={tau!r}")
    if A <= 0:
        raise DomainError("A must be positive for sqrt(2A)")
    root = math.sqrt(s)
    k = math.sqrt(2.0 * A)
    x = k / tau * root
    y = k * ((1.0 + tau) / tau * root - tau / (2.0 * root))
    return x, y


def bessel_13133_u(tau):
    """The auxiliary combinations U1, U2, U3 and I_{1/3}(tau)."""
    if tau <= 0.0:
        raise DomainError(f"tau={tau!r} must be positive for the fractional Bessel orders")
    i13 = modified_bessel_first_kind(1.0 / 3.0, tau)
    u1 = 0.5 * tau * (modified_bessel_first_kind(-2.0 / 3.0, tau) + modified_bessel_first_kind(4.0 / 3.0, tau)) + i13 / 3.0
    u2 = u1 * u1 + tau * tau * i13 * i13
    u3 = 2.0 / 3.0 * tau * tau * i13 * i13 - 2.0 * u1 * u2
    return u1, u2, u3, i13


def bessel_13133_xy(tau, A):
    u1, u2, u3, i13 = bessel_13133_u(tau)
    x = -2.0 * _cbrt(A / 36.0 * tau ** (4.0 / 3.0) / u2 * i13 * i13)
    y = -3.0 * _cbrt(A / 36.0 * tau ** (-2.0 / 3.0) / u2 * u3 / i13)
    return x, y


def exponential_1319_xy(tau, A, C):
    if tau == 0.0:
        raise DomainError("tau = 0 is outside the exponential curve's domain")
    arg = (tau * tau + 1.0) / tau * (math.atan(tau) - C)
    if arg == 0.0:
        raise DomainError(f"log of zero at tau={tau!r}")
    x = A * math.log(abs(arg))
    y = A / tau * (tau + (tau * tau + 1.0) * (math.atan(tau) - C))
    return x, y


@dataclass(frozen=True)
class CatalogEntry:
    entry_id: str
    handbook_number: str
    q_text: str
    description: str
    evaluate: Callable[[float, float, float], tuple[float, float]]
    default_grid: Callable[[int], np.ndarray]
    diagnostic_only: bool = False


def _geometric_grid(n=200):
    return np.geomspace(0.05, 10.0, n)


def _linear_grid(n=200):
    return np.linspace(0.1, 5.0, n)


CATALOG = {
    e.entry_id: e
    for e in (
        CatalogEntry(
            "rational-137-original",
            "1.3.1.7",
            "A/x + A^2/x^3",
            "rational curve with radicand tau - ln(1+tau) - C, as printed in the handbook",
            lambda t, A, C: rational_137_xy(t, A, C, -1.0),
            _geometric_grid,
        ),
        CatalogEntry(
            "rational-137-modified",
            "1.3.1.7",
            "A/x + A^2/x^3",
            "rational curve with radicand tau + ln(1+tau) - C (sign-corrected variant)",
            lambda t, A, C: rational_137_xy(t, A, C, 1.0),
            _geometric_grid,
        ),
        CatalogEntry(
            "bessel-13133",
            "1.3.1.33",
            "A/x^2",
            "curve built from modified Bessel functions of orders -2/3, 1/3, 4/3",
            lambda t, A, C: bessel_13133_xy(t, A),
            _geometric_grid,
            diagnostic_only=True,
        ),
        CatalogEntry(
            "exponential-1319",
            "1.3.1.9",
            "A*(exp(2*x/A) - 1)",
            "exponential curve x = A ln|(tau^2+1)/tau (atan tau - C)|",
            exponential_1319_xy,
            _linear_grid,
        ),
    )
}


@dataclass(frozen=True)
class ParametricCurve:
    """A catalog entry instantiated with parameters A and C."""

    entry_id: str
    A: float = 1.0
    C: float = 0.0

    def __post_init__(self):
        if self.entry_id not in CATALOG:
            raise KeyError(f"unknown catalog entry {self.entry_id!r}; known: {sorted(CATALOG)}")

    @property
    def entry(self) -> CatalogEntry:
        return CATALOG[self.entry_id]

    def __call__(self, tau: float) -> tuple[float, float]:
        return self.entry.evaluate(float(tau), self.A, self.C)

    def q_function(self):
        return compile_expression(parse_expression(self.entry.q_text), {"A": self.A})

    def default_grid(self, n: int = 200) -> np.ndarray:
        return self.entry.default_grid(n)


def eval_curve(curve: ParametricCurve, tau: float) -> tuple[float, float]:
    return curve(tau)


def _derivatives(curve, tau):
    """dx/dtau and dy/dtau by a five-point centred stencil."""
    d = 1e-3 * max(abs(tau), 1e-2)
    pts = [curve(tau + k * d) for k in (-2, -1, 1, 2)]
    dx = (pts[0][0] - 8 * pts[1][0] + 8 * pts[2][0] - pts[3][0]) / (12 * d)
    dy = (pts[0][1] - 8 * pts[1][1] + 8 * pts[2][1] - pts[3][1]) / (12 * d)
    return dx, dy


def pointwise_residual(curve: ParametricCurve, tau: float, q=None) -> float:
    """y y' - y - Q(x) at curve(tau), with y' = (dy/dtau) / (dx/dtau)."""
    q = q or curve.q_function()
    x, y = curve(tau)
    dx, dy = _derivatives(curve, tau)
    if abs(dx) < 1e-10 * max(1.0, abs(dy)):
        raise TurningPointError(f"dx/dtau vanishes near tau={tau!r}")
    return y * dy / dx - y - q(x)


def curve_residual(curve: ParametricCurve, tau_grid=None, q=None) -> float:
    """Maximum |y y' - y - Q| of the curve over ``tau_grid`` (default grid if None)."""
    taus = curve.default_grid() if tau_grid is None else tau_grid
    q = q or curve.q_function()
    return max(abs(pointwise_residual(curve, t, q)) for t in taus)


def monotone_pieces(xs):
    """Index ranges over which the sampled x(tau) is strictly monotone."""
    pieces = []
    start = 0
    direction = 0
    for i in range(1, len(xs)):
        step = np.sign(xs[i] - xs[i - 1])
        if step == 0 or (direction and step != direction):
            pieces.append((start, i - 1))
            start = i - 1 if step != 0 else i
            direction = step
        else:
            direction = step
    pieces.append((start, len(xs) - 1))
    return [p for p in pieces if p[1] > p[0]]


def resample(curve: ParametricCurve, x_grid, tau_grid=None):
    """y values of the curve on ``x_grid`` by inverting x(tau) with Brent's method.

    Only the monotone piece of the sampled curve with the widest x extent is
    used. Returns ``(y, tau)`` arrays with NaN outside that piece.
    """
    taus = curve.default_grid() if tau_grid is None else np.asarray(tau_grid, dtype=float)
    xs = np.array([curve(t)[0] for t in taus])
    pieces = monotone_pieces(xs)
    lo, hi = max(pieces, key=lambda p: abs(xs[p[1]] - xs[p[0]]))
    px, pt = xs[lo : hi + 1], taus[lo : hi + 1]
    if px[0] > px[-1]:
        px, pt = px[::-1], pt[::-1]
    x_grid = np.asarray(x_grid, dtype=float)
    ys = np.full(len(x_grid), np.nan)
    ts = np.full(len(x_grid), np.nan)
    for i, xt in enumerate(x_grid):
        if not px[0] <= xt <= px[-1]:
            continue
        j = min(int(np.searchsorted(px, xt)), len(px) - 1)
        j = max(j, 1)
        ta, tb = pt[j - 1], pt[j]
        fa, fb = px[j - 1] - xt, px[j] - xt
        if fa == 0.0:
            t = ta
        elif fb == 0.0:
            t = tb
        else:
            t = optimize.brentq(lambda s: curve(s)[0] - xt, ta, tb, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        ts[i] = t
        ys[i] = curve(t)[1]
    return ys, ts


def curve_trace(curve: ParametricCurve, x_grid, tau_grid=None) -> SolutionTrace:
    """The curve resampled on ``x_grid`` with its chain-rule residual."""
    q = curve.q_function()
    ys, ts = resample(curve, x_grid, tau_grid)
    res = np.full(len(ys), np.nan)
    for i, t in enumerate(ts):
        if math.isfinite(t):
            try:
                res[i] = pointwise_residual(curve, t, q)
            except (TurningPointError, DomainError):
                ys[i] = np.nan
    valid = np.isfinite(ys) & np.isfinite(res)
    ys[~valid] = np.nan
    return SolutionTrace(x_grid, ys, res, "parametric", valid=valid)

"""Sine integral, signum and fractional-order modified Bessel functions."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DomainError, OverflowSignal

HALF_PI = 0.5 * math.pi
_EPS = 2.220446049250313e-16


@dataclass(frozen=True)
class SpecialFunctionConfig:
    """Switchover points and stopping rules for the series evaluations.

    ``si_series_max``: |x| up to which Si uses its power series.
    ``si_asymptotic_min``: |x| from which Si uses the asymptotic expansion of
    its auxiliary functions; between the two, the auxiliary functions come
    from their continued fraction.
    ``bessel_asymptotic_min``: x from which I_nu uses its large-argument form.
    """

    si_series_max: float = 4.0
    si_asymptotic_min: float = 40.0
    bessel_asymptotic_min: float = 50.0
    tolerance: float = 1e-12
    max_terms: int = 500

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not 0 < self.si_series_max <= self.si_asymptotic_min:
            raise ValueError("need 0 < si_series_max <= si_asymptotic_min")
        if self.bessel_asymptotic_min <= 0:
            raise ValueError("bessel_asymptotic_min must be positive")


DEFAULT_CONFIG = SpecialFunctionConfig()


def sign(x: float) -> float:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def _si_series(x, cfg):
    # Si(x) = sum_k (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)
    x2 = x * x
    power = x  # (-1)^k x^(2k+1) / (2k+1)!
    total = x
    for k in range(1, cfg.max_terms):
        power *= -x2 / ((2 * k) * (2 * k + 1))
        term = power / (2 * k + 1)
        total += term
        # alternating series: truncation error is below the first omitted term
        if abs(term) < 0.01 * cfg.tolerance * max(1.0, abs(total)) or abs(term) < _EPS * abs(total):
            return total
    raise ArithmeticError(f"Si series did not converge at x={x!r}")


def _si_auxiliary_cf(x, cfg):
    """Auxiliary functions via the continued fraction of E1(ix) (modified Lentz)."""
    tiny = 1e-300
    b = complex(1.0, x)
    c = 1.0 / tiny
    d = h = 1.0 / b
    for i in range(2, cfg.max_terms):
        a = -((i - 1) ** 2)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta.real - 1.0) + abs(delta.imag) < _EPS:
            # E1(ix) = h * exp(-ix); Si = pi/2 + Im(E1(ix))
            return HALF_PI + (h * cmath.exp(complex(0.0, -x))).imag
    raise ArithmeticError(f"Si continued fraction did not converge at x={x!r}")


def _si_asymptotic(x, cfg):
    # Si(x) = pi/2 - f(x) cos x - g(x) sin x with
    # f ~ (1/x) sum (-1)^k (2k)!/x^(2k), g ~ (1/x^2) sum (-1)^k (2k+1)!/x^(2k)
    inv2 = 1.0 / (x * x)
    f_term, g_term = 1.0, 1.0
    f_sum, g_sum = 1.0, 1.0
    for k in range(1, cfg.max_terms):
        f_next = -f_term * (2 * k - 1) * (2 * k) * inv2
        g_next = -g_term * (2 * k) * (2 * k + 1) * inv2
        if abs(f_next) > abs(f_term):
            break  # divergent tail begins
        f_term, g_term = f_next, g_next
        f_sum += f_term
        g_sum += g_term
        if abs(f_term) < _EPS and abs(g_term) < _EPS:
            break
    f = f_sum / x
    g = g_sum * inv2
    return HALF_PI - f * math.cos(x) - g * math.sin(x)


def sine_integral(x: float, config: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    """Si(x), the integral of sin(t)/t from 0 to x. Odd in x, tends to pi/2."""
    if not math.isfinite(x):
        if math.isnan(x):
            raise DomainError("Si of NaN")
        return math.copysign(HALF_PI, x)
    ax = abs(x)
    if ax <= config.si_series_max:
        value = _si_series(ax, config)
    elif ax < config.si_asymptotic_min:
        value = _si_auxiliary_cf(ax, config)
    else:
        value = _si_asymptotic(ax, config)
    return value if x >= 0 else -value


def _is_integer(v):
    return float(v).is_integer()


def _bessel_series(nu, x, cfg):
    half = 0.5 * x
    q = half * half
    term = half ** nu / math.gamma(nu + 1.0)
    total = term
    for j in range(1, cfg.max_terms):
        term *= q / (j * (j + nu))
        total += term
        if abs(term) < _EPS * abs(total) and j > abs(nu):
            return total
    raise ArithmeticError(f"I_{nu} series did not converge at x={x!r}")


def _bessel_asymptotic(nu, x, cfg):
    mu = 4.0 * nu * nu
    term, total = 1.0, 1.0
    for k in range(1, cfg.max_terms):
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) > abs(term):
            break
        term = nxt
        total += term
        if abs(term) < _EPS * abs(total):
            break
    try:
        scale = math.exp(x) / math.sqrt(2.0 * math.pi * x)
    except OverflowError:
        raise OverflowSignal(f"I_{nu}({x!r}) overflows double precision") from None
    return scale * total


def modified_bessel_first_kind(
    nu: float, x: float, config: SpecialFunctionConfig = DEFAULT_CONFIG
) -> float:
    """I_nu(x) on the real branch (x >= 0 unless nu is an integer)."""
    if math.isnan(x) or math.isnan(nu):
        raise DomainError("NaN argument")
    if _is_integer(nu):
        nu = abs(nu)  # I_{-n} = I_n for integer n
        if x < 0:
            # I_n(-x) = (-1)^n I_n(x)
            return (-1.0) ** int(nu) * modified_bessel_first_kind(nu, -x, config)
    elif x < 0:
        raise DomainError(f"I_{nu} is complex for negative argument {x!r}")
    if x == 0.0:
        if nu == 0.0:
            return 1.0
        if nu > 0:
            return 0.0
        raise DomainError(f"I_{nu}(0) is infinite")
    if x >= config.bessel_asymptotic_min:
        value = _bessel_asymptotic(nu, x, config)
    else:
        value = _bessel_series(nu, x, config)
    if not math.isfinite(value):
        raise OverflowSignal(f"I_{nu}({x!r}) overflows double precision")
    return value

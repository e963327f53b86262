"""Adams-Bashforth-Moulton predictor-corrector for y' = 1 + Q(x)/y."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError
from .problem import CanonicalProblem
from .trace import SolutionTrace, ode_residual

# Adams-Bashforth weights (newest first) and Adams-Moulton weights
# (implicit point first, then newest history), indexed by order.
AB_WEIGHTS = {
    2: (np.array([3.0, -1.0]), 2.0),
    3: (np.array([23.0, -16.0, 5.0]), 12.0),
    4: (np.array([55.0, -59.0, 37.0, -9.0]), 24.0),
}
AM_WEIGHTS = {
    2: (np.array([1.0, 1.0]), 2.0),
    3: (np.array([5.0, 8.0, -1.0]), 12.0),
    4: (np.array([9.0, 19.0, -5.0, 1.0]), 24.0),
}


@dataclass(frozen=True)
class IntegratorConfig:
    h_step: float = 1e-3
    order: int = 4
    corrector_iterations: int = 2
    y_min: float = 1e-8

    def __post_init__(self):
        if not self.h_step > 0:
            raise ValueError("h_step must be positive")
        if self.order not in AB_WEIGHTS:
            raise ValueError("order must be 2, 3 or 4")
        if self.corrector_iterations < 1:
            raise ValueError("corrector_iterations must be >= 1")
        if not self.y_min > 0:
            raise ValueError("y_min must be positive")


def _rhs(q):
    def f(x, y):
        return 1.0 + q(x) / y

    return f


def _rk4_step(f, x, y, h):
    k1 = f(x, y)
    k2 = f(x + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(x + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(x + h, y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _partial_trace(xs, ys, q):
    xs, ys = np.array(xs), np.array(ys)
    if len(xs) >= 3:
        r = ode_residual(xs, ys, q)
    else:
        r = np.zeros(len(xs))
    return SolutionTrace(xs, ys, r, "numeric")


def integrate(
    problem: CanonicalProblem,
    x0: float,
    y0: float,
    x_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> SolutionTrace:
    """Fixed-step integration from (x0, y0) to x_end (either direction).

    The step is h_step shrunk so that a whole number of steps lands exactly
    on x_end. The first order-1 steps use classical RK4; afterwards an
    Adams-Bashforth predictor is followed by ``corrector_iterations``
    Adams-Moulton sweeps. Raises :class:`SingularityError` (carrying the
    partial trace) when y enters |y| < y_min or changes sign.
    """
    if y0 == 0:
        raise ValueError("y0 must be nonzero")
    q = problem.Q
    f = _rhs(q)
    span = x_end - x0
    n = max(1, math.ceil(abs(span) / cfg.h_step - 1e-9))
    h = span / n
    xs = [x0 + i * h for i in range(n + 1)]
    xs[-1] = x_end
    ys = [float(y0)]
    fs = [f(x0, y0)]
    ab, ab_den = AB_WEIGHTS[cfg.order]
    am, am_den = AM_WEIGHTS[cfg.order]

    for i in range(n):
        x_new = xs[i + 1]
        if i < cfg.order - 1:
            y_new = _rk4_step(f, xs[i], ys[i], h)
        else:
            hist = fs[-1 : -cfg.order - 1 : -1]
            y_new = ys[i] + h / ab_den * float(np.dot(ab, hist))
            for _ in range(cfg.corrector_iterations):
                if abs(y_new) < cfg.y_min:
                    break
                f_new = f(x_new, y_new)
                y_new = ys[i] + h / am_den * (am[0] * f_new + float(np.dot(am[1:], hist[: cfg.order - 1])))
        if not math.isfinite(y_new) or abs(y_new) < cfg.y_min or y_new * ys[i] < 0:
            raise SingularityError(
                "solution reached y = 0 where y' = 1 + Q/y is singular",
                xs[i],
                _partial_trace(xs[: i + 1], ys, q),
            )
        ys.append(y_new)
        fs.append(f(x_new, y_new))

    return _partial_trace(xs, ys, q)


def convergence_order(
    problem: CanonicalProblem,
    x0: float,
    y0: float,
    x_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    exact: float | None = None,
) -> float:
    """Observed order from the end-point error at h and h/2.

    Without an exact value the Richardson form log2(|y_h - y_h/2| / |y_h/2 - y_h/4|)
    is used. Returns inf when the coarse error is already at round-off level.
    """
    def end(h):
        c = IntegratorConfig(h, cfg.order, cfg.corrector_iterations, cfg.y_min)
        return float(integrate(problem, x0, y0, x_end, c).y[-1])

    h = cfg.h_step
    if exact is not None:
        e1, e2 = abs(end(h) - exact), abs(end(h / 2) - exact)
    else:
        y1, y2, y4 = end(h), end(h / 2), end(h / 4)
        e1, e2 = abs(y1 - y2), abs(y2 - y4)
    floor = 1e-13 * max(1.0, abs(exact) if exact is not None else 1.0)
    if e1 <= floor or e2 == 0.0:
        return math.inf
    return math.log2(e1 / e2)

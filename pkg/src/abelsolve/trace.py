"""Sampled solution traces and the canonical ODE residual."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PROVENANCES = ("numeric", "closed-form", "parametric", "construction")


@dataclass
class SolutionTrace:
    """Samples (x, y, residual) of one solution method.

    Gap samples (excluded or singular regions) carry ``valid = False`` and NaN
    in ``y`` and ``residual``. ``events`` lists notable occurrences such as
    branch switches, as ``(x, description)`` pairs.
    """

    x: np.ndarray
    y: np.ndarray
    residual: np.ndarray
    provenance: str
    valid: np.ndarray | None = None
    events: list[tuple[float, str]] = field(default_factory=list)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.residual = np.asarray(self.residual, dtype=float)
        if self.valid is None:
            self.valid = np.isfinite(self.y)
        self.valid = np.asarray(self.valid, dtype=bool)
        if not (len(self.x) == len(self.y) == len(self.residual) == len(self.valid)):
            raise ValueError("trace arrays differ in length")

    def __len__(self):
        return len(self.x)

    def segments(self):
        """Index slices of maximal runs of valid samples."""
        out = []
        start = None
        for i, ok in enumerate(self.valid):
            if ok and start is None:
                start = i
            elif not ok and start is not None:
                out.append(slice(start, i))
                start = None
        if start is not None:
            out.append(slice(start, len(self.valid)))
        return out


# one-sided fourth-order first-derivative weights for the two edge samples
_EDGE4 = (
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
)


def _gradient4(y, h):
    dy = np.empty_like(y)
    dy[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    dy[0] = _EDGE4[0] @ y[:5] / h
    dy[1] = _EDGE4[1] @ y[:5] / h
    dy[-1] = -(_EDGE4[0] @ y[-1:-6:-1]) / h
    dy[-2] = -(_EDGE4[1] @ y[-1:-6:-1]) / h
    return dy


def ode_residual(
    x: np.ndarray, y: np.ndarray, q: Callable[[float], float], order: int = 2
) -> np.ndarray:
    """r = y y' - y - Q(x) on a uniform grid.

    y' comes from centered differences in the interior and one-sided ones at
    the ends, of second order by default. ``order=4`` switches to five-point
    stencils; it needs at least five samples on a uniform grid and otherwise
    falls back to second order.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise ValueError("need at least three samples for a residual")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    steps = np.diff(x)
    uniform = np.allclose(steps, steps[0], rtol=1e-6, atol=0.0)
    if order == 4 and len(x) >= 5 and uniform:
        dy = _gradient4(y, (x[-1] - x[0]) / (len(x) - 1))
    else:
        dy = np.gradient(y, x, edge_order=2)
    qx = np.array([q(xi) for xi in x])
    return y * dy - y - qx


def segment_residual(x, y, valid, q, order=2):
    """ode_residual applied to each run of valid samples; NaN elsewhere."""
    r = np.full(len(x), np.nan)
    trace = SolutionTrace(x, y, np.zeros(len(x)), "numeric", valid=valid)
    for seg in trace.segments():
        if seg.stop - seg.start >= 3:
            r[seg] = ode_residual(x[seg], y[seg], q, order)
    return r

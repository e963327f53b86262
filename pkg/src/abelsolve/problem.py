"""The canonical problem y y' - y = Q(x) consumed by every solver."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from .expr import InhomogeneityClass, Node, classify_inhomogeneity, compile_expression, parse_expression


@dataclass(frozen=True)
class ReferenceCurve:
    """A catalog curve attached to a problem: entry id plus its parameters."""

    entry_id: str
    A: float = 1.0
    C: float = 0.0


@dataclass(frozen=True)
class CanonicalProblem:
    q: Node
    x0: float
    y0: float
    interval: tuple[float, float]
    constants: Mapping[str, float] = field(default_factory=dict)
    classification: InhomogeneityClass | None = None
    beta: float | None = None
    phi: float | None = None
    branch: str | None = None
    name: str = ""
    references: tuple[ReferenceCurve, ...] = ()
    notes: str = ""

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise ValueError(f"interval must satisfy a < b, got {self.interval}")
        if not a <= self.x0 <= b:
            raise ValueError(f"x0={self.x0} lies outside the interval {self.interval}")
        missing = self.q.constants() - set(self.constants)
        if missing:
            raise ValueError(f"unbound constants in Q: {sorted(missing)}")

    @classmethod
    def from_text(cls, q: str, **kwargs) -> CanonicalProblem:
        return cls(parse_expression(q), **kwargs)

    @cached_property
    def Q(self):
        """Compiled scalar Q(x) with this problem's constants bound."""
        return compile_expression(self.q, self.constants)

    def inhomogeneity_class(self) -> InhomogeneityClass:
        return classify_inhomogeneity(self.q, self.classification)

    def effective_beta(self) -> float:
        """Explicit beta if given, otherwise the tabulated order-effect factor."""
        from .closed_form import beta_factor

        if self.beta is not None:
            return self.beta
        return beta_factor(self.inhomogeneity_class())

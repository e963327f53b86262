"""Toolkit for the canonical Abel equation y y' - y = Q(x).

Closed-form candidate, reference parametric curves, general-solution
constructions, a predictor-corrector integrator and a residual harness.
"""
from .closed_form import ClosedFormParams, closed_form_trace, fit_phi, solve_cardano
from .constructions import GeneralCoefficients, check_bougoffa, check_julia
from .expr import InhomogeneityClass, classify_inhomogeneity, evaluate, parse_expression, serialize
from .harness import corpus, run_comparison
from .integrator import IntegratorConfig, integrate
from .problem import CanonicalProblem
from .pz_catalog import ParametricCurve, curve_residual
from .special import modified_bessel_first_kind, sine_integral
from .trace import SolutionTrace, ode_residual

__version__ = "0.1.0"

__all__ = [
    "CanonicalProblem",
    "ClosedFormParams",
    "GeneralCoefficients",
    "InhomogeneityClass",
    "IntegratorConfig",
    "ParametricCurve",
    "SolutionTrace",
    "check_bougoffa",
    "check_julia",
    "classify_inhomogeneity",
    "closed_form_trace",
    "corpus",
    "curve_residual",
    "evaluate",
    "fit_phi",
    "integrate",
    "modified_bessel_first_kind",
    "ode_residual",
    "parse_expression",
    "run_comparison",
    "serialize",
    "sine_integral",
    "solve_cardano",
]

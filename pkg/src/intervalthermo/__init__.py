"""Numerical thermodynamic formalism for piecewise-monotone interval maps.

The pressure function ``p(t) = P(-t log|Df|)`` is computed from periodic
orbits and, independently, from first-return inducing schemes built on the
Hofbauer tower; the resulting curve is analysed for kinks, Lyapunov-exponent
extremes and the acip criterion.
"""

from .errors import (AmbiguityError, BracketError, ConfigError, DependencyError, DomainError,
                     NumericError, PreconditionError, StructuralError, ThermoError, TruncationBoundary)
from .maps import IntervalMap, builtin, from_expressions
from .pressure import (CurveConfig, PressureCurve, TransitionReport, derivative_analysis, detect_transitions,
                       equilibrium_summary, maximizing_measure_probe, pressure_curve, pressure_induced,
                       pressure_periodic)

__version__ = "0.1.0"

__all__ = [
    "AmbiguityError", "BracketError", "ConfigError", "DependencyError", "DomainError", "NumericError",
    "PreconditionError", "StructuralError", "ThermoError", "TruncationBoundary",
    "IntervalMap", "builtin", "from_expressions",
    "CurveConfig", "PressureCurve", "TransitionReport", "derivative_analysis", "detect_transitions",
    "equilibrium_summary", "maximizing_measure_probe", "pressure_curve", "pressure_induced",
    "pressure_periodic",
]

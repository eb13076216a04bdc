"""Semi-analytic benchmark solutions for time-dependent transport in an
infinite, isotropically scattering medium, with a Monte Carlo oracle."""

from .core import (
    EvalPoint,
    FluxResult,
    InvalidParameter,
    ProblemKind,
    ProblemSpec,
    source_mass,
    support_bound,
    validate,
)
from .quadrature import QuadResult, QuadSpec, QuadratureFailure, integrate_1d, integrate_nested
from .solutions import collided, evaluate, uncollided, uncollided_source_term
from .special import DomainError, erf, expint_ei, positive_part

__all__ = [
    "EvalPoint",
    "FluxResult",
    "InvalidParameter",
    "ProblemKind",
    "ProblemSpec",
    "source_mass",
    "support_bound",
    "validate",
    "QuadResult",
    "QuadSpec",
    "QuadratureFailure",
    "integrate_1d",
    "integrate_nested",
    "collided",
    "evaluate",
    "uncollided",
    "uncollided_source_term",
    "DomainError",
    "erf",
    "expint_ei",
    "positive_part",
]

__version__ = "0.1.0"

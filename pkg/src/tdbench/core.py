"""Problem catalog, coordinate conventions and result containers.

Space is measured in mean free paths and time in mean free times, so the
particle speed and the total cross section are both one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Optional

import numpy as np

__all__ = [
    "ProblemKind",
    "ProblemSpec",
    "EvalPoint",
    "FluxResult",
    "InvalidParameter",
    "validate",
    "support_bound",
    "source_mass",
    "eta",
    "eta_prime",
    "eta_dprime",
    "eta_p",
    "eta_p_prime",
    "eta_p_dprime",
    "GAUSSIAN_CUTOFF",
]

# Gaussian shapes are treated as zero beyond this many standard deviations
# (exp(-64) < 2e-28).
GAUSSIAN_CUTOFF = 8.0


class InvalidParameter(ValueError):
    """A problem parameter is missing, out of range or inconsistent."""

    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.name = name


class ProblemKind(Enum):
    PLANE_PULSE = "plane_pulse"
    SQUARE_PULSE = "square_pulse"
    GAUSSIAN_PULSE = "gaussian_pulse"
    SQUARE_SOURCE = "square_source"
    GAUSSIAN_SOURCE = "gaussian_source"
    LINE_PULSE = "line_pulse"
    CYL_GAUSSIAN_PULSE = "cyl_gaussian_pulse"

    @property
    def cylindrical(self) -> bool:
        return self in (ProblemKind.LINE_PULSE, ProblemKind.CYL_GAUSSIAN_PULSE)

    @property
    def gaussian(self) -> bool:
        return self in (ProblemKind.GAUSSIAN_PULSE, ProblemKind.GAUSSIAN_SOURCE,
                        ProblemKind.CYL_GAUSSIAN_PULSE)

    @property
    def required(self) -> tuple:
        return _REQUIRED[self]


_REQUIRED = {
    ProblemKind.PLANE_PULSE: (),
    ProblemKind.SQUARE_PULSE: ("x0",),
    ProblemKind.GAUSSIAN_PULSE: ("sigma",),
    ProblemKind.SQUARE_SOURCE: ("x0", "t0"),
    ProblemKind.GAUSSIAN_SOURCE: ("sigma", "t0"),
    ProblemKind.LINE_PULSE: (),
    ProblemKind.CYL_GAUSSIAN_PULSE: ("sigma",),
}


@dataclass(frozen=True)
class ProblemSpec:
    """One benchmark configuration.

    Shape parameters that ``kind`` does not use are dropped during
    validation, so two specs describing the same problem compare equal.
    """

    kind: ProblemKind
    c: float = 1.0
    x0: Optional[float] = None
    sigma: Optional[float] = None
    t0: Optional[float] = None

    def __post_init__(self):
        kind = self.kind
        if not isinstance(kind, ProblemKind):
            try:
                kind = ProblemKind(kind)
            except ValueError:
                raise InvalidParameter("kind", f"unknown problem {kind!r}") from None
            object.__setattr__(self, "kind", kind)
        _check_number("c", self.c)
        if not 0.0 <= self.c <= 1.0:
            raise InvalidParameter("c", f"scattering ratio must lie in [0, 1], got {self.c}")
        for name in ("x0", "sigma", "t0"):
            value = getattr(self, name)
            if name not in kind.required:
                object.__setattr__(self, name, None)
                continue
            if value is None:
                raise InvalidParameter(name, f"required for {kind.value}")
            _check_number(name, value)
            if not value > 0:
                raise InvalidParameter(name, f"must be positive, got {value}")
            object.__setattr__(self, name, float(value))
        object.__setattr__(self, "c", float(self.c))

    def params(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name != "kind" and getattr(self, f.name) is not None}


def _check_number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise InvalidParameter(name, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise InvalidParameter(name, f"must be finite, got {value}")


def validate(spec: ProblemSpec) -> ProblemSpec:
    """Return a normalized copy of ``spec`` (raises :class:`InvalidParameter`)."""
    return replace(spec)


@dataclass(frozen=True)
class EvalPoint:
    """A position (signed ``x`` or radius ``r``) and time ``t > 0``."""

    coord: float
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise InvalidParameter("t", f"time must be positive, got {self.t}")


@dataclass(frozen=True)
class FluxResult:
    """Scalar flux split into uncollided and collided parts.

    All fields are arrays of the same shape as the evaluation coordinates.
    ``singular`` marks points on the line-pulse wavefront, where the
    uncollided flux is reported as ``inf``.
    """

    coord: np.ndarray
    t: float
    phi_u: np.ndarray
    phi_c: np.ndarray
    err_u: np.ndarray
    err_c: np.ndarray
    singular: np.ndarray = field(default=None)
    phi_total: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "phi_total", self.phi_u + self.phi_c)
        if self.singular is None:
            object.__setattr__(self, "singular", np.zeros(np.shape(self.phi_u), dtype=bool))


def support_bound(spec: ProblemSpec, t: float) -> tuple:
    """Largest ``|coord|`` with nonzero flux at time ``t``.

    Returns ``(bound, exact)``. Gaussian shapes have unbounded support; for
    them the effective bound ``t + 8 sigma`` is returned with ``exact=False``.
    """
    if not t > 0:
        raise InvalidParameter("t", "time must be positive")
    if spec.kind.gaussian:
        return t + GAUSSIAN_CUTOFF * spec.sigma, False
    if spec.x0 is not None:
        return t + spec.x0, True
    return float(t), True


def source_mass(spec: ProblemSpec, t: float) -> float:
    """Total number of particles emitted up to time ``t``.

    Cylindrical problems count per unit length along the axis.
    """
    k = spec.kind
    if k in (ProblemKind.PLANE_PULSE, ProblemKind.LINE_PULSE):
        return 1.0
    if k is ProblemKind.SQUARE_PULSE:
        return 2.0 * spec.x0
    if k is ProblemKind.GAUSSIAN_PULSE:
        return spec.sigma * math.sqrt(math.pi)
    if k is ProblemKind.SQUARE_SOURCE:
        return 2.0 * spec.x0 * min(t, spec.t0)
    if k is ProblemKind.GAUSSIAN_SOURCE:
        return spec.sigma * math.sqrt(math.pi) * min(t, spec.t0)
    return math.pi * spec.sigma ** 2


def eta(x, t):
    return np.asarray(x) / t


def eta_prime(x, s, t):
    return (np.asarray(x) - s) / t


def eta_dprime(x, s, t, tau):
    return (np.asarray(x) - s) / (t - tau)


def eta_p(r, t):
    return np.asarray(r) / t


def eta_p_prime(r, theta, rho, theta_p, t):
    """Distance from a source point ``(rho, theta_p)`` to ``(r, theta)``, over ``t``."""
    dx = r * np.cos(theta) - rho * np.cos(theta_p)
    dy = r * np.sin(theta) - rho * np.sin(theta_p)
    return np.hypot(dx, dy) / t


def eta_p_dprime(r, s, v, t):
    return np.hypot(np.asarray(r) - s, v) / t

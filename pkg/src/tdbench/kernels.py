"""Green's function kernels for the plane, line and point pulses.

The collided kernels are written with ``cos(u/2)`` multiplied through, so
``sec^2(u/2) xi^2`` becomes ``(log q + iu)^2 / (eta cos(u/2) + i sin(u/2))^2``.
That form is regular on the whole range ``0 < u <= pi``; at ``u = pi`` it
equals the analytic endpoint limit and no overflow occurs.
"""

from __future__ import annotations

import math

import numpy as np

from .core import InvalidParameter
from .quadrature import QuadSpec, integrate_batch
from .special import DomainError

__all__ = [
    "WAVEFRONT_CLIP",
    "plane_uncollided_kernel",
    "plane_collided_kernel",
    "plane_collided_u_integrand",
    "f1_integrand",
    "f1_endpoint_limit",
    "f2_integrand",
    "line_uncollided_kernel",
    "point_collided_kernels",
    "point_f1",
    "point_f2_integrand",
    "xi",
    "log_q",
]

# collided formulas treat |eta| >= 1 - WAVEFRONT_CLIP as outside the light cone
WAVEFRONT_CLIP = 1e-12
_TINY_TIME = 1e-14


def log_q(eta, one_m_eta2=None):
    """``log((1 + eta)/(1 - eta))``, optionally from a precomputed ``1 - eta^2``."""
    eta = np.asarray(eta, dtype=float)
    if one_m_eta2 is None:
        return 2.0 * np.arctanh(eta)
    # near the front, log((1+e)^2 / (1-e^2)) keeps accuracy when 1 - e^2 is
    # known better than 1 - |e|
    with np.errstate(divide="ignore", invalid="ignore"):
        front = 2.0 * np.log1p(eta) - np.log(one_m_eta2)
    return np.where(np.abs(eta) < 0.5, 2.0 * np.arctanh(np.clip(eta, -0.5, 0.5)), front)


def _ratio(num, den):
    """``num / den`` with the value 2 near ``eta = u = 0``, where both vanish
    (``log q ~ 2 eta`` and ``sin(u/2) ~ u/2``)."""
    zero = np.abs(den) < 1e-150
    if np.any(zero):
        return np.where(zero, 2.0 + 0j, num / np.where(zero, 1.0, den))
    return num / den


def xi(u, eta):
    """Complex similarity function ``(log q + iu) / (eta + i tan(u/2))``."""
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    lam = log_q(eta)
    half = 0.5 * u
    return _ratio(lam + 1j * u, eta * np.cos(half) + 1j * np.sin(half)) * np.cos(half)


def plane_uncollided_kernel(x, t):
    """Uncollided scalar flux of a plane pulse, ``e^-t/(2t)`` inside ``|x| < t``.

    Exactly on the wavefront the step takes its midpoint value.
    """
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    base = math.exp(-t) / (2.0 * t)
    out = np.where(a < t, base, np.where(a == t, 0.5 * base, 0.0))
    return float(out) if out.ndim == 0 else out


def plane_collided_u_integrand(eta, t, c, u, one_m_eta2=None):
    """``sec^2(u/2) Re[xi^2 exp(ct(1-eta^2) xi / 2)]``, in the regular form."""
    eta = np.asarray(eta, dtype=float)
    if one_m_eta2 is None:
        one_m_eta2 = 1.0 - eta * eta
    lam = log_q(eta, one_m_eta2)
    half = 0.5 * np.asarray(u, dtype=float)
    cs = np.cos(half)
    num = lam + 1j * u
    ratio = _ratio(num, eta * cs + 1j * np.sin(half))
    k = 0.5 * c * t * one_m_eta2
    return (ratio ** 2 * np.exp(k * ratio * cs)).real


def f1_integrand(x, s, t, u, c):
    """Collided plane kernel integrand at shifted position ``x - s``.

    Zero outside the (slightly clipped) light cone and for ``c = 0``.
    """
    x, s, t, u = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, s, t, u)))
    e = (x - s) / np.where(t > 0, t, 1.0)
    inside = (np.abs(e) < 1.0 - WAVEFRONT_CLIP) & (t > _TINY_TIME)
    out = np.zeros(e.shape)
    if c == 0 or not inside.any():
        return float(out) if out.ndim == 0 else out
    ei, ti, ui = e[inside], t[inside], u[inside]
    om = 1.0 - ei * ei
    out[inside] = (c * np.exp(-ti) / (8.0 * math.pi) * om
                   * plane_collided_u_integrand(ei, ti, c, ui, om))
    return float(out) if out.ndim == 0 else out


def f1_endpoint_limit(x, s, t, c):
    """Value of :func:`f1_integrand` at ``u = pi``.

    There ``xi = 0`` and the kernel reduces to
    ``c e^-t (1 - eta^2) (pi^2 - log^2 q) / (8 pi)``.
    """
    e = (np.asarray(x, dtype=float) - s) / t
    lam = log_q(e)
    out = c * np.exp(-t) / (8 * math.pi) * (1 - e * e) * (math.pi ** 2 - lam * lam)
    return np.where(np.abs(e) < 1 - WAVEFRONT_CLIP, out, 0.0)


def f2_integrand(x, s, t, tau, u, c):
    """Time-shifted kernel integrand: :func:`f1_integrand` at time ``t - tau``."""
    return f1_integrand(x, s, np.asarray(t, dtype=float) - tau, u, c)


def plane_collided_kernel(x, t, c, quad: QuadSpec = QuadSpec(), return_error=False):
    """Collided scalar flux of a plane pulse, vectorized over ``x``.

    The ``u``-integral runs adaptively for every point at once; points on or
    outside the light cone short-circuit to zero.
    """
    if not t > 0:
        raise InvalidParameter("t", "time must be positive")
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    val = np.zeros(flat.size)
    err = np.zeros(flat.size)
    e = flat / t
    inside = np.abs(e) < 1.0 - WAVEFRONT_CLIP
    if c > 0 and inside.any():
        ein = e[inside]
        om = 1.0 - ein * ein

        def g(u, own):
            return plane_collided_u_integrand(ein[own], t, c, u, om[own])

        res = integrate_batch(g, 0.0 * ein, np.full(ein.size, math.pi), quad)
        _check(res, quad, "plane collided kernel")
        pref = c * math.exp(-t) / (8.0 * math.pi) * om
        val[inside] = pref * res.value
        err[inside] = pref * res.err_estimate
    val = val.reshape(x.shape) if x.ndim else float(val[0])
    err = err.reshape(x.shape) if x.ndim else float(err[0])
    return (val, err) if return_error else val


def _check(res, quad, what):
    from .quadrature import QuadratureFailure
    if quad.strict and not np.all(res.converged):
        raise QuadratureFailure(f"{what}: quadrature did not converge", result=res)


def line_uncollided_kernel(r, t):
    """Uncollided flux of a line pulse, ``e^-t / (2 pi t^2 sqrt(1 - (r/t)^2))``.

    Returns ``inf`` exactly on the wavefront ``r = t`` (an integrable
    singularity, not an error) and zero beyond it.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InvalidParameter("r", "radius must be non-negative")
    e = r / t
    om = np.where(e < 1.0, (1.0 - e) * (1.0 + e), 1.0)
    with np.errstate(divide="ignore"):
        out = np.where(e < 1.0, math.exp(-t) / (2 * math.pi * t * t) / np.sqrt(om),
                       np.where(e == 1.0, np.inf, 0.0))
    return float(out) if out.ndim == 0 else out


def point_f1(eta, t, c, one_m_eta2=None):
    """First-collided point-source kernel without its step function."""
    eta = np.asarray(eta, dtype=float)
    lam = log_q(eta, one_m_eta2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(eta > 1e-8, lam / np.where(eta > 1e-8, eta, 1.0), 2.0)
    # e^-t/(4 pi r t^2) * c t * log q with r = eta t
    return c * math.exp(-t) * ratio / (4.0 * math.pi * t * t) if np.isscalar(t) else \
        c * np.exp(-t) * ratio / (4.0 * math.pi * t * t)


def point_f2_integrand(eta, t, c, u, one_m_eta2=None):
    """Integrand (in ``u``) of the multiply-collided point-source kernel."""
    eta = np.asarray(eta, dtype=float)
    if one_m_eta2 is None:
        one_m_eta2 = 1.0 - eta * eta
    lam = log_q(eta, one_m_eta2)
    half = 0.5 * np.asarray(u, dtype=float)
    cs = np.cos(half)
    num = lam + 1j * u
    ratio = _ratio(num, eta * cs + 1j * np.sin(half))
    k = 0.5 * c * t * one_m_eta2
    # sec^2 (eta + i tan) xi^3 == num^3 / den^2
    re = (ratio ** 2 * num * np.exp(k * ratio * cs)).real
    r = eta * t
    pref = np.exp(-t) / (8.0 * math.pi ** 2 * r * t * t) * (0.5 * c * t) ** 2 * one_m_eta2
    return pref * re


def point_collided_kernels(r, t, c, u):
    """Return ``(F1pt, F2pt integrand)`` at radius ``r``, time ``t``, angle ``u``."""
    if not t > 0:
        raise InvalidParameter("t", "time must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("point kernels have a 1/r factor: r must be positive")
    e = r / t
    if np.any(e >= 1.0):
        raise DomainError("point kernels are defined only inside the light cone r < t")
    e = np.minimum(e, 1.0 - WAVEFRONT_CLIP)
    f1 = point_f1(e, t, c)
    f2 = point_f2_integrand(e, t, c, u)
    if np.ndim(f1) == 0:
        return float(f1), float(f2)
    return f1, f2

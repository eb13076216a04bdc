"""Uncollided and collided scalar flux for the seven benchmark problems.

Every evaluator is vectorized over the spatial coordinate at a fixed time
and returns ``(value, error_estimate)`` arrays. :func:`evaluate` dispatches
on a :class:`~tdbench.core.ProblemSpec` and packs a :class:`FluxResult`.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import (GAUSSIAN_CUTOFF, FluxResult, InvalidParameter, ProblemKind, ProblemSpec,
                   support_bound)
from .kernels import (WAVEFRONT_CLIP, f1_integrand, f2_integrand, line_uncollided_kernel,
                      plane_collided_kernel, plane_uncollided_kernel, point_f1,
                      point_f2_integrand)
from .quadrature import (Level, QuadSpec, default_spec, integrate_batch,
                         integrate_nested_batch)
from .special import erf_sum, expint_ei, positive_part

__all__ = [
    "evaluate",
    "uncollided",
    "uncollided_source_term",
    "plane_pulse",
    "square_pulse_uncollided",
    "square_pulse_collided",
    "gaussian_pulse_uncollided",
    "gaussian_pulse_collided",
    "square_source_intervals",
    "square_source_uncollided",
    "square_source_collided",
    "gaussian_source_uncollided",
    "gaussian_source_integrand",
    "gaussian_source_collided",
    "line_pulse",
    "line_pulse_collided",
    "cyl_gaussian_uncollided",
    "cyl_gaussian_collided",
    "cyl_limits",
]

SQRT_PI = math.sqrt(math.pi)
HALF_PI = 0.5 * math.pi


def _arr(x):
    return np.atleast_1d(np.asarray(x, dtype=float)).ravel()


def _shape_like(x, v):
    x = np.asarray(x)
    return v.reshape(x.shape) if x.ndim else float(v[0])


def _check_t(t):
    if not t > 0:
        raise InvalidParameter("t", f"time must be positive, got {t}")


# ----------------------------------------------------------------------------
# plane pulse
# ----------------------------------------------------------------------------

def plane_pulse(x, t, c, quad: Optional[QuadSpec] = None):
    """Return ``(phi_u, phi_c, err_c)`` for a plane pulse at ``x``."""
    _check_t(t)
    phi_u = plane_uncollided_kernel(x, t)
    phi_c, err = plane_collided_kernel(x, t, c, quad or default_spec(1), return_error=True)
    return phi_u, phi_c, err


# ----------------------------------------------------------------------------
# square pulse
# ----------------------------------------------------------------------------

def square_pulse_uncollided(x, t, x0):
    """Closed-form uncollided flux of a square pulse of half-width ``x0``."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    e = math.exp(-t)
    inner = (-t - x0 < x) & (x < t + x0)
    conds = [
        np.abs(x) - t > x0,
        (t > x0) & (x0 - t <= x) & (x <= t - x0),
        (t <= x0) & (t - x0 <= x) & (x <= x0 - t),
        inner & (x0 + x <= t) & (t <= x0 - x),
        inner & (x0 - x <= t) & (t <= x0 + x),
    ]
    vals = [
        np.zeros_like(x),
        np.full_like(x, x0 * e / t),
        np.full_like(x, e),
        e * (t + x + x0) / (2 * t),
        e * (t - x + x0) / (2 * t),
    ]
    out = np.select(conds, vals, 0.0)
    return float(out) if out.ndim == 0 else out


def _cone_angle_limits(x, t, lo, hi):
    """Map ``s in [lo, hi]`` to ``alpha`` with ``s = x - t sin(alpha)``."""
    a_lo = np.arcsin(np.clip((x - hi) / t, -1.0, 1.0))
    a_hi = np.arcsin(np.clip((x - lo) / t, -1.0, 1.0))
    return a_lo, np.maximum(a_hi, a_lo)


def _cone_level(t, s_lo, s_hi, peak=None):
    """Outer ``s`` level expressed in the light-cone angle ``alpha``.

    ``s = x - t sin(alpha)`` flattens the ``eps log^2 eps`` behaviour of the
    collided kernel at ``|x - s| -> t``; the Jacobian is ``t cos(alpha)``.
    ``peak`` adds a breakpoint at a source maximum located at ``s = peak``.
    """
    def lower(x_):
        return _cone_angle_limits(x_, t, s_lo(x_), s_hi(x_))[0]

    def upper(x_):
        return _cone_angle_limits(x_, t, s_lo(x_), s_hi(x_))[1]

    points = None
    if peak is not None:
        def points(x_):
            ratio = (x_ - peak) / t
            return np.where(np.abs(ratio) < 1, np.arcsin(np.clip(ratio, -1, 1)), np.nan)[:, None]
    return Level(lower, upper, points)


def square_pulse_collided(x, t, x0, c, quad: Optional[QuadSpec] = None):
    """Collided flux of a square pulse: ``s``-``u`` double integral of F1.

    ``s`` covers ``[-x0, x0]`` clipped to the light cone ``[x - t, x + t]``.
    """
    _check_t(t)
    xs = _arr(x)
    if c == 0:
        return _shape_like(x, np.zeros(xs.size)), _shape_like(x, np.zeros(xs.size))
    levels = [
        _cone_level(t, lambda x_: np.maximum(-x0, x_ - t), lambda x_: np.minimum(x0, x_ + t)),
        Level(0.0, math.pi),
    ]

    def f(x_, a, u):
        return f1_integrand(x_, x_ - t * np.sin(a), t, u, c) * t * np.cos(a)

    res = integrate_nested_batch(f, levels, (xs,), quad or default_spec(2))
    return _shape_like(x, res.value), _shape_like(x, res.err_estimate)


# ----------------------------------------------------------------------------
# Gaussian pulse
# ----------------------------------------------------------------------------

def gaussian_pulse_uncollided(x, t, sigma):
    """Closed form ``sigma sqrt(pi) e^-t [erf((t-x)/s) + erf((t+x)/s)] / (4t)``."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    out = sigma * SQRT_PI * math.exp(-t) * erf_sum((t - x) / sigma, (t + x) / sigma) / (4 * t)
    return float(out) if np.ndim(out) == 0 else out


def _gauss_s_limits(x, t, sigma):
    cut = GAUSSIAN_CUTOFF * sigma
    return np.maximum(x - t, -cut), np.minimum(x + t, cut)


def gaussian_pulse_collided(x, t, sigma, c, quad: Optional[QuadSpec] = None):
    """Collided flux of a Gaussian pulse over ``s in [x - t, x + t]``."""
    _check_t(t)
    xs = _arr(x)
    if c == 0:
        z = np.zeros(xs.size)
        return _shape_like(x, z), _shape_like(x, z)
    levels = [
        _cone_level(t, lambda x_: _gauss_s_limits(x_, t, sigma)[0],
                    lambda x_: _gauss_s_limits(x_, t, sigma)[1], peak=0.0),
        Level(0.0, math.pi),
    ]

    def f(x_, a, u):
        s = x_ - t * np.sin(a)
        return np.exp(-(s / sigma) ** 2) * f1_integrand(x_, s, t, u, c) * t * np.cos(a)

    res = integrate_nested_batch(f, levels, (xs,), quad or default_spec(2))
    return _shape_like(x, res.value), _shape_like(x, res.err_estimate)


# ----------------------------------------------------------------------------
# square source
# ----------------------------------------------------------------------------

def square_source_intervals(x, t, x0, t0):
    """Breakpoints ``(tau_b, tau_c, tau_d)`` of the square-source time integral."""
    ax = np.abs(np.asarray(x, dtype=float))
    tau_d = positive_part(np.minimum(np.minimum(t0, t), t - ax + x0))
    tau_b = positive_part(np.minimum(tau_d, t - ax - x0))
    tau_c = positive_part(np.minimum(tau_d, t + ax - x0))
    return tau_b, tau_c, tau_d


def _coef_ei(coef, tau, t):
    # coef * Ei(tau - t); the coefficient always vanishes when tau == t
    arg = np.asarray(tau - t, dtype=float)
    live = (coef != 0) & (arg < 0)
    out = np.zeros(np.broadcast(coef, arg).shape)
    if np.any(live):
        cb = np.broadcast_to(coef, out.shape)
        ab = np.broadcast_to(arg, out.shape)
        out[live] = cb[live] * expint_ei(ab[live])
    return out


def square_source_uncollided(x, t, x0, t0):
    """Closed-form uncollided flux of a square source switched off at ``t0``."""
    _check_t(t)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    tb, tc, td = (np.asarray(v, dtype=float) for v in square_source_intervals(x, t, x0, t0))
    ones = np.ones_like(ax)
    first = _coef_ei(-x0 * ones, tb, t) - _coef_ei(-x0 * ones, 0.0 * tb, t)
    first = np.where(tb > 0, first, 0.0)

    def second_at(tau):
        return 0.5 * (_coef_ei(ax - x0, tau, t) + np.exp(tau - t))

    second = np.where(tc > tb, second_at(tc) - second_at(tb), 0.0)
    third = np.where(td > tc, np.exp(-(t - td)) - np.exp(-(t - tc)), 0.0)
    out = first + second + third
    return float(out) if out.ndim == 0 else out


def _tau_max(x, s, t, t0):
    return positive_part(np.minimum(min(t, t0), t - np.abs(x - s)))


def _source_collided(x, t, t0, c, s_lo, s_hi, weight, peak, quad):
    # s = x - t sin(alpha); tau = tau_max (1 - w^2) clusters nodes at the light cone
    xs = _arr(x)
    if c == 0:
        z = np.zeros(xs.size)
        return _shape_like(x, z), _shape_like(x, z)
    levels = [_cone_level(t, s_lo, s_hi, peak), Level(0.0, 1.0), Level(0.0, math.pi)]

    def f(x_, a, w, u):
        s = x_ - t * np.sin(a)
        tmax = _tau_max(x_, s, t, t0)
        tau = tmax * (1.0 - w * w)
        jac = t * np.cos(a) * 2.0 * tmax * w
        return weight(s) * f2_integrand(x_, s, t, tau, u, c) * jac

    res = integrate_nested_batch(f, levels, (xs,), quad or default_spec(3))
    return _shape_like(x, res.value), _shape_like(x, res.err_estimate)


def square_source_collided(x, t, x0, t0, c, quad: Optional[QuadSpec] = None):
    """Collided flux of a square source.

    Space is integrated outermost over ``[-x0, x0]``; time runs over
    ``[0, min(t, t0, t - |x - s|)]``, which is empty outside the light cone.
    """
    _check_t(t)
    return _source_collided(x, t, t0, c,
                            lambda x_: np.maximum(-x0, x_ - t), lambda x_: np.minimum(x0, x_ + t),
                            np.ones_like, None, quad)


# ----------------------------------------------------------------------------
# Gaussian source
# ----------------------------------------------------------------------------

def gaussian_source_integrand(x, t, tau, sigma):
    """Time integrand of the Gaussian-source uncollided flux.

    Equal to the Gaussian-pulse closed form at elapsed time ``t - tau``.
    As ``tau -> t`` it tends to ``exp(-x^2/sigma^2)``; for elapsed times
    below ``1e-3 sigma`` a two-term expansion about that limit replaces the
    erf difference, which would otherwise cancel.
    """
    x, tau = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(tau, dtype=float))
    eps = t - tau
    z = x / sigma
    small = eps < 1e-3 * sigma
    out = np.empty(x.shape)
    if np.any(small):
        d = eps[small] / sigma
        zs = z[small]
        out[small] = np.exp(-eps[small] - zs * zs) * (1.0 + d * d * (2 * zs * zs - 1) / 3.0)
    big = ~small
    if np.any(big):
        eb = eps[big]
        out[big] = (sigma * SQRT_PI * np.exp(-eb)
                    * erf_sum((eb - x[big]) / sigma, (eb + x[big]) / sigma) / (4 * eb))
    return float(out) if out.ndim == 0 else out


def gaussian_source_uncollided(x, t, sigma, t0, quad: Optional[QuadSpec] = None):
    """Uncollided flux of a Gaussian source; one-dimensional ``tau`` integral."""
    _check_t(t)
    xs = _arr(x)
    val = np.zeros(xs.size)
    err = np.zeros(xs.size)
    live = np.abs(xs) <= t + GAUSSIAN_CUTOFF * sigma
    if live.any():
        xl = xs[live]
        res = integrate_batch(lambda tau, own: gaussian_source_integrand(xl[own], t, tau, sigma),
                              np.zeros(xl.size), np.full(xl.size, min(t, t0)),
                              quad or default_spec(1))
        _strict(res, quad or default_spec(1), "gaussian source uncollided")
        val[live] = res.value
        err[live] = res.err_estimate
    return _shape_like(x, val), _shape_like(x, err)


def gaussian_source_collided(x, t, sigma, t0, c, quad: Optional[QuadSpec] = None):
    """Collided flux of a Gaussian source, ``s in [x - t, x + t]`` outermost."""
    _check_t(t)
    return _source_collided(x, t, t0, c,
                            lambda x_: _gauss_s_limits(x_, t, sigma)[0],
                            lambda x_: _gauss_s_limits(x_, t, sigma)[1],
                            lambda s: np.exp(-(s / sigma) ** 2), 0.0, quad)


def _strict(res, quad, what):
    from .quadrature import QuadratureFailure
    if quad.strict and not np.all(res.converged):
        raise QuadratureFailure(f"{what}: quadrature did not converge", result=res)


# ----------------------------------------------------------------------------
# cylindrical problems
# ----------------------------------------------------------------------------

def _line_terms(t, c):
    """Integrands of the line-pulse collided flux in the variables
    ``(eta_s, phi[, u])``, where ``eta_s`` is the in-plane distance over
    ``t`` and ``omega = sqrt(1 - eta_s^2) sin(phi)`` is the axial offset.
    The ``cos(phi)`` Jacobian tames the log singularity of F1 at the
    front."""

    def geom(om_s, ph):
        w2 = om_s
        sn = np.sin(ph)
        cs = np.cos(ph)
        eta = np.sqrt(np.maximum(1.0 - w2 * cs * cs, 0.0))
        om = np.maximum(w2 * cs * cs, 1e-300)
        eta = np.minimum(eta, 1.0 - WAVEFRONT_CLIP)
        jac = np.sqrt(w2) * cs
        return eta, om, jac

    def f1(om_s, ph):
        eta, om, jac = geom(om_s, ph)
        return point_f1(eta, t, c, om) * jac

    def f2(om_s, ph, u):
        eta, om, jac = geom(om_s, ph)
        return point_f2_integrand(eta, t, c, u, om) * jac

    return f1, f2


def line_pulse_collided(r, t, c, quad: Optional[QuadSpec] = None):
    """Collided flux of a line pulse: ``2t * int domega phi_c^pt``.

    Computed as a 1-D integral of F1pt plus a 2-D integral of F2pt.
    """
    _check_t(t)
    rs = _arr(r)
    val = np.zeros(rs.size)
    err = np.zeros(rs.size)
    e = rs / t
    inside = e < 1.0 - WAVEFRONT_CLIP
    if c > 0 and inside.any():
        om_s = (1.0 - e[inside]) * (1.0 + e[inside])
        spec = quad or default_spec(2)
        f1, f2 = _line_terms(t, c)
        a = integrate_batch(lambda ph, own: f1(om_s[own], ph), np.zeros(om_s.size),
                            np.full(om_s.size, HALF_PI), spec)
        _strict(a, spec, "line pulse collided (first-collision term)")
        b = integrate_nested_batch(f2, [Level(0.0, HALF_PI), Level(0.0, math.pi)], (om_s,), spec)
        val[inside] = 2 * t * (a.value + b.value)
        err[inside] = 2 * t * (a.err_estimate + b.err_estimate)
    return _shape_like(r, val), _shape_like(r, err)


def line_pulse(r, t, c, quad: Optional[QuadSpec] = None):
    """Return ``(phi_u, phi_c, err_c, singular)`` for a line pulse."""
    _check_t(t)
    r_arr = np.asarray(r, dtype=float)
    phi_u = line_uncollided_kernel(r_arr, t)
    phi_c, err = line_pulse_collided(r_arr, t, c, quad)
    return phi_u, phi_c, err, r_arr == t


def cyl_limits(r, t, theta, theta_p, v=None):
    """Integration limits for the cylindrical Gaussian pulse.

    Returns ``(rho_a, rho_b)`` for the polar form (the radicand is clipped
    at zero) and, if ``v`` is given, also ``(s_a, s_b)`` for the Cartesian
    form evaluated at ``y = 0``.
    """
    r = np.asarray(r, dtype=float)
    d = theta - np.asarray(theta_p, dtype=float)
    rad = positive_part((r * r * np.cos(2 * d) - r * r) / 2 + t * t)
    root = np.sqrt(rad)
    rho_a = r * np.cos(d) - root
    rho_b = r * np.cos(d) + root
    if v is None:
        return rho_a, rho_b
    y = 0.0
    rad_s = np.sqrt(positive_part(t * t - v * v + 2 * v * y - y * y))
    return rho_a, rho_b, r - rad_s, r + rad_s


def cyl_gaussian_uncollided(r, t, sigma, quad: Optional[QuadSpec] = None):
    """Uncollided flux of a cylindrical Gaussian pulse.

    The Cartesian double integral over ``v`` and ``s`` at ``y = 0``; the
    inverse-square-root edges of the ``s`` range are removed by the
    substitution ``s = r + sqrt(t^2 - v^2) sin(phi)``, which turns the
    kernel into the constant ``t``.
    """
    _check_t(t)
    rs = _arr(r)
    if np.any(rs < 0):
        raise InvalidParameter("r", "radius must be non-negative")
    val = np.zeros(rs.size)
    err = np.zeros(rs.size)
    live = rs <= t + GAUSSIAN_CUTOFF * sigma
    if live.any():
        vmax = min(t, GAUSSIAN_CUTOFF * sigma)

        def peak(r_, v):
            w = np.sqrt(np.maximum(t * t - v * v, 0.0))
            ratio = np.where(w > 0, -r_ / np.where(w > 0, w, 1.0), 0.0)
            return np.arcsin(np.clip(ratio, -1.0, 1.0))[:, None]

        levels = [
            Level(-vmax, vmax, lambda r_: np.zeros((r_.size, 1))),
            Level(-HALF_PI, HALF_PI, peak),
        ]

        def f(r_, v, ph):
            w = np.sqrt(np.maximum(t * t - v * v, 0.0))
            s = r_ + w * np.sin(ph)
            return np.exp(-(s * s + v * v) / (sigma * sigma))

        spec = quad or default_spec(2)
        res = integrate_nested_batch(f, levels, (rs[live],), spec)
        pref = math.exp(-t) / (2 * math.pi * t)
        val[live] = pref * res.value
        err[live] = pref * res.err_estimate
    return _shape_like(r, val), _shape_like(r, err)


def cyl_gaussian_collided(r, t, sigma, c, quad: Optional[QuadSpec] = None, theta: float = 0.0):
    """Collided flux of a cylindrical Gaussian pulse at polar angle ``theta``.

    Sum of a 4-D integral of ``Q(rho) rho F2pt`` over ``(theta', rho,
    omega, u)`` and a 3-D integral of ``Q(rho) rho F1pt``. ``rho`` runs over
    ``[max(rho_a, 0), min(rho_b, 8 sigma)]``.
    """
    _check_t(t)
    rs = _arr(r)
    if np.any(rs < 0):
        raise InvalidParameter("r", "radius must be non-negative")
    val = np.zeros(rs.size)
    err = np.zeros(rs.size)
    live = rs < t + GAUSSIAN_CUTOFF * sigma
    if c == 0 or not live.any():
        return _shape_like(r, val), _shape_like(r, err)
    cut = GAUSSIAN_CUTOFF * sigma
    rl = rs[live]
    f1, f2 = _line_terms(t, c)

    def om_prime(r_, tp, rho):
        # 1 - eta_p'^2 from the law of cosines, computed without cancellation at the front
        return (t * t - r_ * r_ - rho * rho + 2 * r_ * rho * np.cos(theta - tp)) / (t * t)

    def rho_lo(r_, tp):
        return np.maximum(cyl_limits(r_, t, theta, tp)[0], 0.0)

    def rho_hi(r_, tp):
        return np.minimum(cyl_limits(r_, t, theta, tp)[1], cut)

    def src(rho):
        return rho * np.exp(-(rho / sigma) ** 2)

    def third(r_, tp, rho, ph):
        om = np.clip(om_prime(r_, tp, rho), 0.0, 1.0)
        return src(rho) * f1(om, ph)

    def fourth(r_, tp, rho, ph, u):
        om = np.clip(om_prime(r_, tp, rho), 0.0, 1.0)
        return src(rho) * f2(om, ph, u)

    theta_lv = Level(0.0, 2 * math.pi,
                     lambda r_: np.full((r_.size, 1), np.mod(theta, 2 * math.pi)))
    rho_lv = Level(rho_lo, rho_hi)
    ph_lv = Level(0.0, HALF_PI)
    spec = quad or default_spec(4)
    from .quadrature import QuadratureFailure
    try:
        a = integrate_nested_batch(third, [theta_lv, rho_lv, ph_lv], (rl,), spec)
    except QuadratureFailure as exc:
        raise QuadratureFailure(f"cylindrical collided, first-collision (3-D) term: {exc}",
                                exc.result, exc.level) from exc
    try:
        b = integrate_nested_batch(fourth, [theta_lv, rho_lv, ph_lv, Level(0.0, math.pi)],
                                   (rl,), spec)
    except QuadratureFailure as exc:
        raise QuadratureFailure(f"cylindrical collided, multiple-collision (4-D) term: {exc}",
                                exc.result, exc.level) from exc
    val[live] = 2 * t * (a.value + b.value)
    err[live] = 2 * t * (a.err_estimate + b.err_estimate)
    return _shape_like(r, val), _shape_like(r, err)


# ----------------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------------

def _check_coords(spec, coords):
    coords = np.asarray(coords, dtype=float)
    if not np.all(np.isfinite(coords)):
        raise InvalidParameter("coord", "coordinates must be finite")
    if spec.kind.cylindrical and np.any(coords < 0):
        raise InvalidParameter("coord", "radius must be non-negative for cylindrical problems")
    return coords


def uncollided(spec: ProblemSpec, coords, t, quad: Optional[QuadSpec] = None):
    """Uncollided flux and its error estimate for any problem kind."""
    _check_t(t)
    coords = _check_coords(spec, coords)
    k = spec.kind
    zeros = np.zeros(coords.shape) if coords.ndim else 0.0
    if k is ProblemKind.PLANE_PULSE:
        return plane_uncollided_kernel(coords, t), zeros
    if k is ProblemKind.SQUARE_PULSE:
        return square_pulse_uncollided(coords, t, spec.x0), zeros
    if k is ProblemKind.GAUSSIAN_PULSE:
        return gaussian_pulse_uncollided(coords, t, spec.sigma), zeros
    if k is ProblemKind.SQUARE_SOURCE:
        return square_source_uncollided(coords, t, spec.x0, spec.t0), zeros
    if k is ProblemKind.GAUSSIAN_SOURCE:
        return gaussian_source_uncollided(coords, t, spec.sigma, spec.t0, quad)
    if k is ProblemKind.LINE_PULSE:
        return line_uncollided_kernel(coords, t), zeros
    return cyl_gaussian_uncollided(coords, t, spec.sigma, quad)


def collided(spec: ProblemSpec, coords, t, quad: Optional[QuadSpec] = None):
    """Collided flux and its error estimate for any problem kind."""
    _check_t(t)
    coords = _check_coords(spec, coords)
    k, c = spec.kind, spec.c
    if k is ProblemKind.PLANE_PULSE:
        return plane_collided_kernel(coords, t, c, quad or default_spec(1), return_error=True)
    if k is ProblemKind.SQUARE_PULSE:
        return square_pulse_collided(coords, t, spec.x0, c, quad)
    if k is ProblemKind.GAUSSIAN_PULSE:
        return gaussian_pulse_collided(coords, t, spec.sigma, c, quad)
    if k is ProblemKind.SQUARE_SOURCE:
        return square_source_collided(coords, t, spec.x0, spec.t0, c, quad)
    if k is ProblemKind.GAUSSIAN_SOURCE:
        return gaussian_source_collided(coords, t, spec.sigma, spec.t0, c, quad)
    if k is ProblemKind.LINE_PULSE:
        return line_pulse_collided(coords, t, c, quad)
    return cyl_gaussian_collided(coords, t, spec.sigma, c, quad)


def evaluate(spec: ProblemSpec, coords, t, quad: Optional[QuadSpec] = None) -> FluxResult:
    """Evaluate uncollided, collided and total flux on ``coords`` at time ``t``.

    Collided evaluation is skipped for points outside the exact support.
    """
    _check_t(t)
    coords = _check_coords(spec, coords)
    flat = np.atleast_1d(coords).ravel()
    phi_u, err_u = uncollided(spec, flat, t, quad)
    phi_c = np.zeros(flat.size)
    err_c = np.zeros(flat.size)
    bound, exact = support_bound(spec, t)
    live = np.abs(flat) < bound if exact else np.abs(flat) <= bound
    if live.any():
        v, e = collided(spec, flat[live], t, quad)
        phi_c[live] = v
        err_c[live] = e
    singular = np.isinf(phi_u)
    shape = coords.shape
    return FluxResult(coords, float(t), np.asarray(phi_u, dtype=float).reshape(shape),
                      phi_c.reshape(shape), np.asarray(err_u, dtype=float).reshape(shape),
                      err_c.reshape(shape), singular.reshape(shape))


def uncollided_source_term(spec: ProblemSpec, coords, t, quad: Optional[QuadSpec] = None):
    """First-collision source ``S_u = (c/2) phi_u`` for use as a prescribed source."""
    phi_u, _ = uncollided(spec, coords, t, quad)
    return 0.5 * spec.c * np.asarray(phi_u, dtype=float) if np.ndim(phi_u) else 0.5 * spec.c * phi_u

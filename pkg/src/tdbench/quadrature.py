"""Adaptive Gauss-Kronrod quadrature, vectorized across many integrals.

The workhorse is :func:`integrate_batch`, which integrates one vectorized
integrand over ``M`` independent intervals at once. Each interval is refined
by its own adaptive bisection, but every round of refinement evaluates all
pending panels in a single call of the integrand. Nested (iterated)
integrals with variable limits are built on top of it by recursion: the
integrand of an outer level is itself a batch of inner integrals.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "QuadSpec",
    "QuadResult",
    "BatchResult",
    "Level",
    "QuadratureFailure",
    "SingularKind",
    "integrate_1d",
    "integrate_batch",
    "integrate_nested",
    "integrate_nested_batch",
    "singular_endpoint_transform",
    "default_spec",
]

# Gauss-Kronrod 15(7) abscissae on [-1, 1] (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5, 13, 11, 9]] = np.concatenate([_WG[:3], _WG[:3]])
GAUSS_WEIGHTS[7] = _WG[3]

_EPS = np.finfo(float).eps
_CHUNK = 1 << 16


class QuadratureFailure(RuntimeError):
    """Raised when an integral misses its tolerance within the budget.

    ``result`` holds the best available estimate; ``level`` is the nesting
    level (0 = outermost) where the budget ran out, when known.
    """

    def __init__(self, message, result=None, level=None):
        super().__init__(message)
        self.result = result
        self.level = level


@dataclass(frozen=True)
class QuadSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 200
    inner_tighten: float = 10.0
    strict: bool = True

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def tightened(self) -> "QuadSpec":
        return replace(self, abs_tol=self.abs_tol / self.inner_tighten,
                       rel_tol=self.rel_tol / self.inner_tighten)

    def scaled_budget(self, factor: float) -> "QuadSpec":
        return replace(self, max_subdivisions=int(self.max_subdivisions * factor))


def default_spec(dim: int) -> QuadSpec:
    """Default tolerances by integral dimension."""
    if dim <= 2:
        return QuadSpec(1e-10, 1e-8)
    if dim == 3:
        return QuadSpec(1e-8, 1e-6)
    return QuadSpec(1e-6, 1e-4)


@dataclass
class QuadResult:
    value: float
    err_estimate: float
    evals: int
    converged: bool


@dataclass
class BatchResult:
    value: np.ndarray
    err_estimate: np.ndarray
    evals: int
    converged: np.ndarray

    def __getitem__(self, i) -> QuadResult:
        return QuadResult(float(self.value[i]), float(self.err_estimate[i]),
                          self.evals, bool(self.converged[i]))


def _gk_panels(g, pa, pb, owner):
    """Apply GK15 to every panel; returns Kronrod value, error estimate,
    roundoff floor of that estimate and the Kronrod-weighted integral of the
    integrand's own error (if any)."""
    half = 0.5 * (pb - pa)
    mid = 0.5 * (pb + pa)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    own = np.repeat(owner, 15)
    fv = np.empty(x.size)
    fe = np.zeros(x.size)
    has_err = False
    for lo in range(0, x.size, _CHUNK):
        hi = min(lo + _CHUNK, x.size)
        out = g(x[lo:hi], own[lo:hi])
        if isinstance(out, tuple):
            fv[lo:hi], fe[lo:hi] = out
            has_err = True
        else:
            fv[lo:hi] = out
    fv = fv.reshape(-1, 15)
    kron = half * (fv @ KRONROD_WEIGHTS)
    gauss = half * (fv @ GAUSS_WEIGHTS)
    # QUADPACK qk15 error heuristic
    mean = kron / (2.0 * half) if np.all(half > 0) else np.where(half > 0, kron / np.where(half > 0, 2 * half, 1), 0)
    resasc = np.abs(half) * (np.abs(fv - mean[:, None]) @ KRONROD_WEIGHTS)
    resabs = np.abs(half) * (np.abs(fv) @ KRONROD_WEIGHTS)
    err = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > np.finfo(float).tiny / (50 * _EPS), np.maximum(err, floor), err)
    inner = np.abs(half) * (fe.reshape(-1, 15) @ KRONROD_WEIGHTS) if has_err else np.zeros_like(kron)
    if not np.all(np.isfinite(kron)):
        bad = ~np.isfinite(kron)
        err = np.where(bad, np.inf, err)
    return kron, err, 2.0 * floor, inner


def _initial_panels(a, b, points):
    m = a.size
    if points is None:
        edges = np.stack([a, b], axis=1)
    else:
        pts = np.asarray(points, dtype=float).reshape(m, -1)
        pts = np.where(np.isfinite(pts), pts, a[:, None])
        pts = np.clip(pts, a[:, None], b[:, None])
        edges = np.sort(np.concatenate([a[:, None], pts, b[:, None]], axis=1), axis=1)
    pa = edges[:, :-1].ravel()
    pb = edges[:, 1:].ravel()
    owner = np.repeat(np.arange(m), edges.shape[1] - 1)
    keep = pb > pa
    return pa[keep], pb[keep], owner[keep]


def integrate_batch(g, a, b, spec: QuadSpec = QuadSpec(), points=None) -> BatchResult:
    """Integrate ``g`` over ``M`` intervals ``[a[i], b[i]]`` simultaneously.

    ``g(x, owner)`` receives flat arrays of abscissae and the index of the
    interval each belongs to, and returns either values or a ``(values,
    errors)`` pair when the integrand is itself only known approximately.
    ``points`` is an optional ``(M, K)`` array of interior breakpoints
    (non-finite entries are ignored). Collapsed intervals (``a >= b``)
    contribute exactly zero without any evaluation.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    a = a.astype(float).ravel()
    b = b.astype(float).ravel()
    m = a.size
    if np.any(~np.isfinite(a) | ~np.isfinite(b)):
        raise ValueError("integration limits must be finite")
    length = np.maximum(b - a, 0.0)

    acc_val = np.zeros(m)
    acc_err = np.zeros(m)
    acc_inner = np.zeros(m)
    acc_floor = np.zeros(m)
    nsub = np.zeros(m, dtype=np.int64)
    converged = np.ones(m, dtype=bool)
    evals = 0

    pa, pb, owner = _initial_panels(a, b, points)
    np.add.at(nsub, owner, 1)
    while pa.size:
        kron, err, floor, inner = _gk_panels(g, pa, pb, owner)
        evals += 15 * pa.size
        tot_val = acc_val + np.bincount(owner, kron, m)
        tot_err = acc_err + np.bincount(owner, err, m)
        # tolerances below the roundoff floor of the estimate cannot be met
        tot_floor = acc_floor + np.bincount(owner, floor, m)
        tol = np.maximum(np.maximum(spec.abs_tol, spec.rel_tol * np.abs(tot_val)), tot_floor)
        done_owner = tot_err <= tol
        exhausted = nsub >= spec.max_subdivisions
        width = pb - pa
        tiny = width <= 64 * _EPS * np.maximum(np.abs(pa), np.abs(pb))

        finish = (done_owner | exhausted)[owner]
        local_ok = (err <= 0.5 * tol[owner] * width / np.where(length[owner] > 0, length[owner], 1.0)) \
            | (err <= floor)
        accept = finish | local_ok | tiny
        # an unconverged owner must split at least its worst panel
        pending = ~accept
        need = ~(done_owner | exhausted)
        has_pending = np.bincount(owner[pending], minlength=m) > 0
        stuck = need & ~has_pending & (np.bincount(owner[~tiny], minlength=m) > 0)
        if stuck.any():
            order = np.lexsort((-err, owner))
            first = np.ones(order.size, dtype=bool)
            first[1:] = owner[order][1:] != owner[order][:-1]
            worst = order[first]
            worst = worst[stuck[owner[worst]] & ~tiny[worst]]
            accept[worst] = False

        converged[np.unique(owner[exhausted[owner] & ~done_owner[owner]])] = False

        np.add.at(acc_val, owner[accept], kron[accept])
        np.add.at(acc_err, owner[accept], err[accept])
        np.add.at(acc_inner, owner[accept], inner[accept])
        np.add.at(acc_floor, owner[accept], floor[accept])

        split = ~accept
        if not split.any():
            break
        sa, sb, so = pa[split], pb[split], owner[split]
        sm = 0.5 * (sa + sb)
        np.add.at(nsub, so, 1)
        pa = np.concatenate([sa, sm])
        pb = np.concatenate([sm, sb])
        owner = np.concatenate([so, so])
        order = np.argsort(owner, kind="stable")
        pa, pb, owner = pa[order], pb[order], owner[order]

    tol = np.maximum(np.maximum(spec.abs_tol, spec.rel_tol * np.abs(acc_val)), acc_floor)
    converged &= acc_err <= tol * (1 + 1e-12)
    converged |= length == 0
    return BatchResult(acc_val, acc_err + acc_inner, evals, converged)


def integrate_1d(f, a, b, spec: QuadSpec = QuadSpec(), points=None) -> QuadResult:
    """Adaptive GK15 integral of a vectorized ``f`` over ``[a, b]``.

    >>> round(integrate_1d(np.sin, 0.0, np.pi).value, 12)
    2.0
    """
    if b < a:
        raise ValueError("require a <= b")
    pts = None if points is None else np.asarray(points, dtype=float).reshape(1, -1)
    res = integrate_batch(lambda x, _o: f(x), a, b, spec, pts)[0]
    if spec.strict and not res.converged:
        raise QuadratureFailure(
            f"integral did not converge (value={res.value:.6g}, err={res.err_estimate:.3g})",
            result=res, level=0)
    return res


@dataclass
class Level:
    """One level of an iterated integral.

    ``lower``/``upper`` map the arrays of all outer variables (parameters
    first, then enclosing integration variables) to arrays of limits;
    ``points`` optionally returns breakpoints with shape ``(M, K)``.
    """

    lower: Callable
    upper: Callable
    points: Optional[Callable] = None


def _as_level(lv) -> Level:
    return lv if isinstance(lv, Level) else Level(*lv)


def _limit(fn, outer, m):
    v = fn(*outer) if callable(fn) else fn
    return np.broadcast_to(np.asarray(v, dtype=float), (m,)).astype(float)


def _nested(f, levels: Sequence[Level], outer: tuple, m: int, spec: QuadSpec, depth: int,
            counter: list, failures: list):
    lv = levels[0]
    lo = _limit(lv.lower, outer, m)
    hi = _limit(lv.upper, outer, m)
    hi = np.maximum(hi, lo)
    pts = None
    if lv.points is not None:
        pts = np.asarray(lv.points(*outer), dtype=float).reshape(m, -1)

    if len(levels) == 1:
        def g(x, own):
            counter[0] += x.size
            return f(*(o[own] for o in outer), x)
    else:
        inner_spec = spec.tightened()

        def g(x, own):
            sub = tuple(o[own] for o in outer) + (x,)
            val, err, ok = _nested(f, levels[1:], sub, x.size, inner_spec, depth + 1,
                                   counter, failures)
            return val, err

    res = integrate_batch(g, lo, hi, spec, pts)
    if not res.converged.all():
        failures.append(depth)
    return res.value, res.err_estimate, res.converged


def integrate_nested_batch(f, levels, params: tuple = (), spec: Optional[QuadSpec] = None,
                           size: Optional[int] = None) -> BatchResult:
    """Iterated adaptive integral, batched over parameter arrays.

    ``f(*params, x1, ..., xn)`` is vectorized; ``levels[k]`` gives limits
    of ``x_{k+1}`` as functions of ``(*params, x1, ..., xk)``. Inner levels
    run with tolerances tightened by ``spec.inner_tighten`` and their error
    estimates are integrated into the outer estimate.
    """
    levels = [_as_level(lv) for lv in levels]
    if not levels:
        raise ValueError("need at least one level")
    spec = spec or default_spec(len(levels))
    params = tuple(np.atleast_1d(np.asarray(p, dtype=float)) for p in params)
    if params:
        params = tuple(np.broadcast_arrays(*params))
        params = tuple(p.ravel() for p in params)
        m = params[0].size
    else:
        m = 1 if size is None else size
    counter = [0]
    failures: list = []
    val, err, ok = _nested(f, levels, params, m, spec, 0, counter, failures)
    res = BatchResult(val, err, counter[0], ok)
    if spec.strict and failures:
        raise QuadratureFailure(
            f"nested integral failed to converge at level {min(failures)}",
            result=res, level=min(failures))
    return res


def integrate_nested(f, levels, spec: Optional[QuadSpec] = None) -> QuadResult:
    """Iterated integral with outer-variable-dependent limits.

    >>> r = integrate_nested(lambda x, y: np.ones_like(x), [(0.0, 1.0), (lambda x: 0 * x, lambda x: x)])
    >>> round(r.value, 12)
    0.5
    """
    levels = [_as_level(lv) for lv in levels]
    if not 2 <= len(levels) <= 4:
        raise ValueError("integrate_nested supports 2 to 4 levels")
    return integrate_nested_batch(f, levels, (), spec)[0]


class SingularKind(Enum):
    INVERSE_SQRT_UPPER = "inverse_sqrt_upper"
    INVERSE_SQRT_LOWER = "inverse_sqrt_lower"
    INVERSE_SQRT_BOTH = "inverse_sqrt_both"


def singular_endpoint_transform(kind: SingularKind, f, a, b):
    """Change variables so an inverse-square-root endpoint singularity
    becomes a bounded integrand. Returns ``(g, a_new, b_new)``."""
    kind = SingularKind(kind)
    span = b - a
    if kind is SingularKind.INVERSE_SQRT_UPPER:
        # x = b - (b - a) cos^2(th), th in [0, pi/2]
        def g(th):
            c = np.cos(th)
            return f(b - span * c * c) * 2.0 * span * c * np.sin(th)
        return g, 0.0, 0.5 * np.pi
    if kind is SingularKind.INVERSE_SQRT_LOWER:
        def g(th):
            s = np.sin(th)
            return f(a + span * s * s) * 2.0 * span * s * np.cos(th)
        return g, 0.0, 0.5 * np.pi
    mid = 0.5 * (a + b)
    half = 0.5 * span

    def g(th):
        return f(mid + half * np.sin(th)) * half * np.cos(th)
    return g, -0.5 * np.pi, 0.5 * np.pi

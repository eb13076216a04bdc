"""Analog Monte Carlo oracle for infinite-medium, isotropic-scattering transport.

Particles fly exponentially distributed distances (unit cross section,
unit speed), survive each collision with probability ``c`` and rescatter
isotropically. Scalar flux at a snapshot time is estimated by a census: a
particle alive at time ``T`` scores its weight divided by the measure of
the bin it occupies. Scores are accumulated as integer counts per
(time, collision class, bin), so merging blocks is exact and the result does
not depend on how histories are partitioned.

Random numbers come from counter-based Philox streams: block ``b`` of
``block_size`` histories always uses the stream keyed by ``seed`` with
counter offset ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .core import GAUSSIAN_CUTOFF, ProblemKind, ProblemSpec, source_mass
from .special import erf_sum

__all__ = [
    "Geometry",
    "McConfig",
    "TallyField",
    "CompareReport",
    "UnsupportedGeometry",
    "EnvelopeError",
    "GridMismatch",
    "run",
    "run_mms",
    "compare",
    "compare_arrays",
    "bin_averages",
    "geometry_for",
    "pulse_uncollided",
]

UNCOLLIDED, COLLIDED = 0, 1


class UnsupportedGeometry(ValueError):
    """Problem kind and simulation geometry do not match."""


class EnvelopeError(RuntimeError):
    """A rejection-sampling envelope fell below the target density."""


class GridMismatch(ValueError):
    """Tally and analytic field are defined on different grids."""


class Geometry(Enum):
    SLAB_1D = "slab"
    CYLINDRICAL_2D = "cylindrical"


def geometry_for(kind: ProblemKind) -> Geometry:
    return Geometry.CYLINDRICAL_2D if kind.cylindrical else Geometry.SLAB_1D


@dataclass(frozen=True)
class McConfig:
    histories: int
    edges: Sequence[float]
    tally_times: Sequence[float]
    seed: int = 42
    geometry: Optional[Geometry] = None
    split_orders: bool = True
    block_size: int = 1 << 16

    def __post_init__(self):
        if int(self.histories) < 1:
            raise ValueError("histories must be >= 1")
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        times = tuple(float(v) for v in np.atleast_1d(self.tally_times))
        if not times or min(times) <= 0:
            raise ValueError("tally times must be positive")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        object.__setattr__(self, "edges", tuple(edges.tolist()))
        object.__setattr__(self, "tally_times", times)
        object.__setattr__(self, "histories", int(self.histories))
        if self.geometry is not None:
            object.__setattr__(self, "geometry", Geometry(self.geometry))


@dataclass
class TallyField:
    """Census flux estimates, shaped ``(n_times, n_bins)``.

    Every history carries the full source mass ``weight``, so a history in
    bin ``i`` scores ``weight / measure[i]`` and the estimate is the mean
    score. ``var_*`` are variances of those means.
    """

    edges: np.ndarray
    times: tuple
    histories: int
    weight: float
    measure: np.ndarray
    counts: np.ndarray  # (n_times, 2, n_bins) integer counts by collision class
    uncollided: np.ndarray = field(init=False)
    collided: np.ndarray = field(init=False)
    total: np.ndarray = field(init=False)
    var_uncollided: np.ndarray = field(init=False)
    var_collided: np.ndarray = field(init=False)
    var_total: np.ndarray = field(init=False)

    def __post_init__(self):
        n = self.histories
        score = self.weight / self.measure
        unc = self.counts[:, UNCOLLIDED, :].astype(float)
        col = self.counts[:, COLLIDED, :].astype(float)

        def moments(k):
            mean = k * score / n
            if n > 1:
                var = (k * score ** 2 - n * mean ** 2) / (n - 1) / n
            else:
                var = np.zeros_like(mean)
            return mean, np.maximum(var, 0.0)

        self.uncollided, self.var_uncollided = moments(unc)
        self.collided, self.var_collided = moments(col)
        _, self.var_total = moments(unc + col)
        self.total = self.uncollided + self.collided

    @classmethod
    def merge(cls, parts) -> "TallyField":
        """Combine tallies from disjoint sets of histories (exact: counts add)."""
        parts = list(parts)
        first = parts[0]
        for p in parts[1:]:
            if p.counts.shape != first.counts.shape or not np.array_equal(p.edges, first.edges) \
                    or p.times != first.times or p.weight != first.weight:
                raise GridMismatch("tallies to merge must share grid, times and per-history weight")
        n = sum(p.histories for p in parts)
        counts = sum(p.counts for p in parts)
        return cls(first.edges, first.times, n, first.weight, first.measure, counts)

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def _measure(edges, geometry):
    if geometry is Geometry.SLAB_1D:
        return np.diff(edges)
    return math.pi * np.diff(edges ** 2)


def _stream(seed, block):
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(block), 0]))


def _directions(rng, n, geometry):
    mu = rng.uniform(-1.0, 1.0, n)
    if geometry is Geometry.SLAB_1D:
        return mu[:, None]
    phi = rng.uniform(0.0, 2 * math.pi, n)
    st = np.sqrt(1.0 - mu * mu)
    return np.stack([st * np.cos(phi), st * np.sin(phi)], axis=1)


def _coord(pos, geometry):
    return pos[:, 0] if geometry is Geometry.SLAB_1D else np.hypot(pos[:, 0], pos[:, 1])


def _transport(rng, pos, tb, c, edges, times, geometry, counts, ncoll0=0):
    """Follow a batch of particles born at ``pos`` and time ``tb`` until
    they are absorbed or pass the last census time."""
    n = tb.size
    tmax = times[-1]
    nb = edges.size - 1
    ncoll = np.full(n, ncoll0, dtype=np.int64)
    t_cur = tb.copy()
    idx = np.arange(n)
    while idx.size:
        omega = _directions(rng, idx.size, geometry)
        flight = rng.exponential(1.0, idx.size)
        t_next = t_cur + flight
        for j, T in enumerate(times):
            hit = (t_cur <= T) & (T < t_next)
            if not hit.any():
                continue
            at = pos[hit] + omega[hit] * (T - t_cur[hit])[:, None]
            b = np.searchsorted(edges, _coord(at, geometry), side="right") - 1
            ok = (b >= 0) & (b < nb)
            cls = np.minimum(ncoll[hit], 1)[ok]
            np.add.at(counts[j], (cls, b[ok]), 1)
        pos = pos + omega * flight[:, None]
        t_cur = t_next
        keep = t_cur <= tmax
        keep &= rng.random(idx.size) < c
        pos, t_cur, idx = pos[keep], t_cur[keep], idx[keep]
        ncoll = ncoll[keep] + 1


def _birth(spec, rng, n, tmax):
    """Sample birth positions and times from the problem's source."""
    k = spec.kind
    t_on = min(spec.t0, tmax) if spec.t0 is not None else 0.0
    tb = rng.uniform(0.0, t_on, n) if spec.t0 is not None else np.zeros(n)
    if k in (ProblemKind.PLANE_PULSE,):
        pos = np.zeros((n, 1))
    elif k in (ProblemKind.SQUARE_PULSE, ProblemKind.SQUARE_SOURCE):
        pos = rng.uniform(-spec.x0, spec.x0, (n, 1))
    elif k in (ProblemKind.GAUSSIAN_PULSE, ProblemKind.GAUSSIAN_SOURCE):
        pos = rng.normal(0.0, spec.sigma / math.sqrt(2.0), (n, 1))
    elif k is ProblemKind.LINE_PULSE:
        pos = np.zeros((n, 2))
    else:
        pos = rng.normal(0.0, spec.sigma / math.sqrt(2.0), (n, 2))
    return pos, tb


def _check_geometry(spec, cfg):
    geom = cfg.geometry or geometry_for(spec.kind)
    if geom is not geometry_for(spec.kind):
        raise UnsupportedGeometry(f"{spec.kind.value} cannot be simulated in {geom.value} geometry")
    return geom


def _blocks(n, size, subset=None):
    """Yield ``(block index, histories in block)``, optionally for a subset."""
    nblocks = -(-n // size)
    for b in (range(nblocks) if subset is None else subset):
        if not 0 <= b < nblocks:
            raise ValueError(f"block {b} out of range (0..{nblocks - 1})")
        yield b, min(size, n - b * size)


def run(spec: ProblemSpec, cfg: McConfig, blocks=None) -> TallyField:
    """Simulate ``cfg.histories`` analog histories of the problem's source.

    ``blocks`` restricts the run to the given block indices so the work can be
    split across processes; :meth:`TallyField.merge` recombines the parts
    into exactly the full-run result.
    """
    geom = _check_geometry(spec, cfg)
    edges = np.asarray(cfg.edges)
    times = tuple(sorted(cfg.tally_times))
    tmax = times[-1]
    counts = np.zeros((len(times), 2, edges.size - 1), dtype=np.int64)
    done = 0
    for b, n in _blocks(cfg.histories, cfg.block_size, blocks):
        rng = _stream(cfg.seed, b)
        pos, tb = _birth(spec, rng, n, tmax)
        _transport(rng, pos, tb, spec.c, edges, times, geom, counts)
        done += n
    weight = source_mass(spec, tmax)
    return TallyField(edges, times, done, weight, _measure(edges, geom), counts)


# ----------------------------------------------------------------------------
# uncollided-as-source (MMS) mode
# ----------------------------------------------------------------------------

def pulse_uncollided(spec, x, age):
    """Uncollided flux of the pulse underlying ``spec``, vectorized over ``age``.

    Finite-duration sources reuse the shape of the matching pulse.
    """
    k = spec.kind
    x = np.asarray(x, dtype=float)
    age = np.asarray(age, dtype=float)
    if k is ProblemKind.PLANE_PULSE:
        return np.where(np.abs(x) < age, np.exp(-age) / (2 * age), 0.0)
    if k in (ProblemKind.SQUARE_PULSE, ProblemKind.SQUARE_SOURCE):
        # overlap of [x - a, x + a] with the source slab
        lo = np.maximum(x - age, -spec.x0)
        hi = np.minimum(x + age, spec.x0)
        return np.exp(-age) / (2 * age) * np.maximum(hi - lo, 0.0)
    s = spec.sigma
    return s * math.sqrt(math.pi) * np.exp(-age) * erf_sum((age - x) / s, (age + x) / s) / (4 * age)


def _half_width(spec, age):
    k = spec.kind
    if k is ProblemKind.PLANE_PULSE:
        return age
    if spec.x0 is not None:
        return age + spec.x0
    return age + GAUSSIAN_CUTOFF * spec.sigma


def _mms_total_mass(spec, tmax):
    if spec.t0 is None:
        return spec.c * source_mass(spec, tmax) * (1.0 - math.exp(-tmax))
    rate = source_mass(spec, spec.t0) / spec.t0
    t_on = min(spec.t0, tmax)
    return spec.c * rate * (t_on - math.exp(-tmax) * (math.exp(t_on) - 1.0))


def _mms_birth(spec, rng, n, tmax):
    """Draw ``n`` emission events from the density ``c * phi_u(x, tau)``.

    The emission time is the pulse time ``tau'`` (zero for pulses, uniform
    for finite sources, thinned by the surviving uncollided fraction) plus
    an elapsed time drawn from the truncated exponential decay of the
    uncollided population. The position is then drawn by rejection from a
    uniform proposal under the constant envelope ``phi_u(0, age)``, which
    bounds the profile because every shape here is non-increasing in
    ``|x|``.
    """
    if spec.t0 is None:
        t_emit = np.zeros(n)
    else:
        t_on = min(spec.t0, tmax)
        t_emit = np.empty(n)
        need = np.arange(n)
        top = 1.0 - math.exp(-tmax)
        while need.size:
            cand = rng.uniform(0.0, t_on, need.size)
            acc = rng.random(need.size) * top < 1.0 - np.exp(-(tmax - cand))
            t_emit[need[acc]] = cand[acc]
            need = need[~acc]
    span = tmax - t_emit
    # truncated exponential on (0, span]
    u = rng.random(n)
    age = -np.log1p(-u * (-np.expm1(-span)))
    age = np.maximum(age, 1e-300)

    x = np.empty(n)
    need = np.arange(n)
    while need.size:
        a = age[need]
        half = _half_width(spec, a)
        cand = rng.uniform(-1.0, 1.0, need.size) * half
        env = pulse_uncollided(spec, np.zeros(need.size), a)
        val = pulse_uncollided(spec, cand, a)
        if np.any(val > env * (1.0 + 1e-9)):
            raise EnvelopeError("uncollided profile exceeds its rejection envelope")
        acc = rng.random(need.size) * env < val
        x[need[acc]] = cand[acc]
        need = need[~acc]
    return x[:, None], t_emit + age


def run_mms(spec: ProblemSpec, cfg: McConfig, blocks=None) -> TallyField:
    """Simulate only the collided equation, sourced by the analytic uncollided flux.

    Particles are emitted isotropically with density ``c * phi_u(x, t)``
    (twice the angular source ``S_u = (c/2) phi_u``). The returned ``total``
    tally estimates the collided flux.
    """
    geom = _check_geometry(spec, cfg)
    if geom is not Geometry.SLAB_1D:
        raise UnsupportedGeometry("MMS mode is implemented for slab problems only")
    edges = np.asarray(cfg.edges)
    times = tuple(sorted(cfg.tally_times))
    tmax = times[-1]
    counts = np.zeros((len(times), 2, edges.size - 1), dtype=np.int64)
    weight = _mms_total_mass(spec, tmax)
    done = 0
    for b, n in _blocks(cfg.histories, cfg.block_size, blocks):
        if weight > 0:
            rng = _stream(cfg.seed, b)
            pos, tb = _mms_birth(spec, rng, n, tmax)
            _transport(rng, pos, tb, spec.c, edges, times, geom, counts)
        done += n
    return TallyField(edges, times, done, weight, _measure(edges, geom), counts)


# ----------------------------------------------------------------------------
# comparison against analytic fields
# ----------------------------------------------------------------------------

@dataclass
class CompareReport:
    z: np.ndarray
    max_abs_z: float
    frac_beyond_3: float
    frac_within_3: float
    n_bins: int

    def passes(self, max_frac_beyond: float = 0.005, min_frac_within: float = 0.0) -> bool:
        return self.frac_beyond_3 <= max_frac_beyond and self.frac_within_3 >= min_frac_within

    def as_dict(self) -> dict:
        return {"max_abs_z": self.max_abs_z, "frac_beyond_3": self.frac_beyond_3,
                "frac_within_3": self.frac_within_3, "n_bins": self.n_bins,
                "z": [float(v) for v in np.ravel(self.z)]}


def compare_arrays(estimate, variance, analytic) -> CompareReport:
    """Per-bin z-scores of Monte Carlo estimates against analytic bin values.

    Bins with zero variance score ``z = 0`` when the values agree exactly
    and ``inf`` otherwise.
    """
    estimate = np.asarray(estimate, dtype=float)
    variance = np.asarray(variance, dtype=float)
    analytic = np.asarray(analytic, dtype=float)
    if estimate.shape != analytic.shape or variance.shape != estimate.shape:
        raise GridMismatch(f"shapes differ: tally {estimate.shape}, analytic {analytic.shape}")
    diff = estimate - analytic
    sd = np.sqrt(variance)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, diff / np.where(sd > 0, sd, 1.0),
                     np.where(diff == 0, 0.0, np.copysign(np.inf, diff)))
    az = np.abs(z)
    n = z.size
    return CompareReport(z, float(az.max()) if n else 0.0, float(np.mean(az > 3)) if n else 0.0,
                         float(np.mean(az <= 3)) if n else 1.0, n)


def compare(tally: TallyField, analytic, part: str = "total") -> CompareReport:
    """Compare one tally class (``uncollided``, ``collided`` or ``total``)
    against analytic bin values.

    ``analytic`` is an array shaped like the tally (``(n_times, n_bins)``),
    or a 1-D array of bin values when the tally has a single snapshot time.
    Empty bins have zero sample variance; they are given the variance of a
    single count instead, so their z-score is minus the expected count.
    """
    if part not in ("uncollided", "collided", "total"):
        raise ValueError(f"unknown tally class {part!r}")
    est = getattr(tally, part)
    var = getattr(tally, "var_" + part)
    cls = {"uncollided": [UNCOLLIDED], "collided": [COLLIDED], "total": [UNCOLLIDED, COLLIDED]}[part]
    empty = tally.counts[:, cls, :].sum(axis=1) == 0
    one_count = (tally.weight / tally.measure / tally.histories) ** 2
    var = np.where(empty, np.broadcast_to(one_count, var.shape), var)
    ref = np.asarray(analytic, dtype=float)
    if ref.ndim == 1 and est.shape[0] == 1:
        ref = ref[None, :]
    return compare_arrays(est, var, ref)


def _breakpoints(spec, t):
    pts = [0.0, t, -t]
    if spec.x0 is not None:
        x0 = spec.x0
        pts += [x0, -x0, t + x0, -t - x0, t - x0, x0 - t]
    return np.array(pts)


def bin_averages(spec: ProblemSpec, edges, t, quad=None, nodes: int = 8,
                 parts=("phi_u", "phi_c")):
    """Exact-in-the-limit bin averages of the analytic flux.

    Each bin is split at the solution's kinks (light cone, source edges) and
    integrated with ``nodes``-point Gauss-Legendre per piece; cylindrical
    bins use the annular measure. Returns a dict keyed by ``parts``.
    """
    from .solutions import evaluate
    edges = np.asarray(edges, dtype=float)
    cyl = spec.kind.cylindrical
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    kinks = _breakpoints(spec, t)
    pieces_lo, pieces_hi, owner = [], [], []
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        inner = np.sort(kinks[(kinks > a) & (kinks < b)])
        cuts = np.concatenate([[a], inner, [b]])
        pieces_lo.extend(cuts[:-1])
        pieces_hi.extend(cuts[1:])
        owner.extend([i] * (cuts.size - 1))
    lo = np.array(pieces_lo)
    hi = np.array(pieces_hi)
    owner = np.array(owner)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    if cyl:
        w = w * 2 * math.pi * pts
    own = np.repeat(owner, nodes)
    res = evaluate(spec, pts, t, quad)
    meas = _measure(edges, geometry_for(spec.kind))
    out = {}
    for name in parts:
        vals = getattr(res, name)
        if cyl and spec.kind is ProblemKind.LINE_PULSE and name in ("phi_u", "phi_total"):
            vals = np.where(np.isfinite(vals), vals, 0.0)
            avg = _line_uncollided_annulus(edges, t) * meas
            if name == "phi_total":
                avg = avg + np.bincount(own, w * res.phi_c, edges.size - 1)
            out[name] = avg / meas
            continue
        out[name] = np.bincount(own, w * vals, edges.size - 1) / meas
    return out


def _line_uncollided_annulus(edges, t):
    # e^-t / (2 pi t^2) / sqrt(1 - (r/t)^2) integrated against 2 pi r dr, per unit area
    e = np.clip(edges / t, 0.0, 1.0)
    mass = math.exp(-t) * (np.sqrt(1 - e[:-1] ** 2) - np.sqrt(1 - e[1:] ** 2))
    return mass / (math.pi * np.diff(edges ** 2))

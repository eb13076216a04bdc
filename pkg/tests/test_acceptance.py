"""End-to-end acceptance checks.

Each test records one line in the ``acceptance criteria`` section printed at
the end of the pytest run. Tolerances and run sizes are fixed here and never
relaxed after the fact.
"""

import math
import time

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from tdbench.core import ProblemSpec, source_mass, support_bound
from tdbench.kernels import f2_integrand, line_uncollided_kernel, plane_uncollided_kernel
from tdbench.montecarlo import McConfig, bin_averages, compare, run, run_mms
from tdbench.quadrature import (Level, QuadSpec, SingularKind, default_spec, integrate_1d,
                                integrate_nested_batch, singular_endpoint_transform)
from tdbench.solutions import (evaluate, gaussian_source_collided, square_pulse_uncollided,
                               square_source_collided, square_source_uncollided)
from tdbench.special import erf, expint_ei

pytestmark = pytest.mark.slow

C, X0, SIGMA, T0 = 1.0, 0.5, 0.5, 5.0
HISTORIES = 10_000_000
SEED = 42

FIGURE_SPECS = {
    "plane_pulse": ProblemSpec("plane_pulse", c=C),
    "square_pulse": ProblemSpec("square_pulse", c=C, x0=X0),
    "gaussian_pulse": ProblemSpec("gaussian_pulse", c=C, sigma=SIGMA),
    "square_source": ProblemSpec("square_source", c=C, x0=X0, t0=T0),
    "gaussian_source": ProblemSpec("gaussian_source", c=C, sigma=SIGMA, t0=T0),
    "line_pulse": ProblemSpec("line_pulse", c=C),
    "cyl_gaussian_pulse": ProblemSpec("cyl_gaussian_pulse", c=C, sigma=SIGMA),
}
PLANAR = [k for k, s in FIGURE_SPECS.items() if not s.kind.cylindrical]


def _edges(spec, t, n):
    bound, _ = support_bound(spec, t)
    lo = 0.0 if spec.kind.cylindrical else -bound
    return np.linspace(lo, bound, n + 1)


# 1. particle conservation -----------------------------------------------------

def test_conservation(criterion):
    # composite Gauss-Legendre on bins split at every kink of the solution
    start = time.perf_counter()
    worst, lines = 0.0, []
    for name, spec in FIGURE_SPECS.items():
        for t in (1.0, 5.0):
            edges = _edges(spec, t, 20 if spec.kind.cylindrical else 40)
            avg = bin_averages(spec, edges, t, nodes=12, parts=("phi_total",))["phi_total"]
            if spec.kind.cylindrical:
                meas = math.pi * np.diff(edges ** 2)
            else:
                meas = np.diff(edges)
            mass = float(np.sum(avg * meas))
            rel = abs(mass / source_mass(spec, t) - 1.0)
            worst = max(worst, rel)
            lines.append(f"{name}@t={t:g}:{rel:.1e}")
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed <= 600
    criterion(1, ok, f"conservation worst rel {worst:.2e} (tol 1e-3), {elapsed:.0f}s; "
                     + " ".join(lines))
    assert worst <= 1e-3
    assert elapsed <= 600


# 2. uncollided closed forms vs direct integration -----------------------------

def _square_pulse_convolution(x, t):
    lo, hi = max(-X0, x - t), min(X0, x + t)
    if hi <= lo:
        return 0.0
    return integrate.quad(lambda s: plane_uncollided_kernel(x - s, t), lo, hi,
                          epsabs=1e-14, epsrel=1e-12)[0]


def _square_source_double_integral(x, t):
    def over_s(tau):
        a = t - tau
        lo, hi = max(-X0, x - a), min(X0, x + a)
        if hi <= lo or a <= 0:
            return 0.0
        return integrate.quad(lambda s: plane_uncollided_kernel(x - s, a), lo, hi,
                              epsabs=1e-15, epsrel=1e-12)[0]

    top = min(t, T0)
    kinks = [p for p in (t - abs(x) - X0, t - abs(x) + X0, t + abs(x) - X0) if 0 < p < top]
    return integrate.quad(over_s, 0.0, top, epsabs=1e-14, epsrel=1e-12, limit=400,
                          points=kinks or None)[0]


def test_uncollided_closed_forms(criterion):
    times = (1.0, 5.0, 10.0)
    d_pulse = d_source = 0.0
    for t in times:
        for x in np.linspace(-(t + X0 + 0.5), t + X0 + 0.5, 50):
            d_pulse = max(d_pulse, abs(square_pulse_uncollided(x, t, X0)
                                       - _square_pulse_convolution(x, t)))
            d_source = max(d_source, abs(square_source_uncollided(x, t, X0, T0)
                                         - _square_source_double_integral(x, t)))
    ok = d_pulse <= 1e-6 and d_source <= 1e-6
    criterion(2, ok, f"uncollided closed forms: square pulse max diff {d_pulse:.1e}, "
                     f"square source max diff {d_source:.1e} (tol 1e-6, 50x3 grid)")
    assert d_pulse <= 1e-6
    assert d_source <= 1e-6


# 3. integration order ------------------------------------------------------------

def _time_outer(x, t, weight, s_lo, s_hi):
    """Collided source flux with time outermost and space inside."""
    budget = default_spec(3).scaled_budget(100)
    levels = [
        Level(0.0, min(t, T0)),
        Level(lambda x_, tau: np.full_like(tau, s_lo), lambda x_, tau: np.full_like(tau, s_hi),
              lambda x_, tau: np.stack([x_ - (t - tau), x_ + (t - tau)], axis=-1)),
        Level(0.0, math.pi),
    ]

    def f(x_, tau, s, u):
        return weight(s) * f2_integrand(x_, s, t, tau, u, C)

    return float(integrate_nested_batch(f, levels, (np.array([x]),), budget).value[0])


def test_integration_order(criterion):
    start = time.perf_counter()
    t = 1.0
    d_square = d_gauss = 0.0
    for x in (0.0, 0.25, 0.5, 0.9, 1.3):
        ref = _time_outer(x, t, np.ones_like, -X0, X0)
        val, _ = square_source_collided(x, t, X0, T0, C)
        d_square = max(d_square, abs(val - ref))
    for x in (0.0, 0.5, 1.0, 1.5, 2.5):
        reach = abs(x) + t
        ref = _time_outer(x, t, lambda s: np.exp(-(s / SIGMA) ** 2), -reach, reach)
        val, _ = gaussian_source_collided(x, t, SIGMA, T0, C)
        d_gauss = max(d_gauss, abs(val - ref))
    elapsed = time.perf_counter() - start
    ok = d_square <= 1e-5 and d_gauss <= 1e-5 and elapsed <= 300
    criterion(3, ok, f"integration order: square source max diff {d_square:.1e}, "
                     f"Gaussian source max diff {d_gauss:.1e} (tol 1e-5), {elapsed:.0f}s")
    assert d_square <= 1e-5
    assert d_gauss <= 1e-5
    assert elapsed <= 300


# 4. Monte Carlo, slab problems ------------------------------------------------

def test_monte_carlo_slab(criterion):
    start = time.perf_counter()
    t, results = 1.0, {}
    for name in ("plane_pulse", "square_pulse", "gaussian_pulse", "square_source", "gaussian_source"):
        spec = FIGURE_SPECS[name]
        edges = _edges(spec, t, 40)
        tally = run(spec, McConfig(histories=HISTORIES, edges=edges, tally_times=[t], seed=SEED))
        ref = bin_averages(spec, edges, t, nodes=12, parts=("phi_total",))["phi_total"]
        results[name] = compare(tally, ref, "total")
    elapsed = time.perf_counter() - start
    ok = all(r.passes(0.005, 0.95) for r in results.values()) and elapsed <= 900
    detail = " ".join(f"{k}:beyond={int(round(r.frac_beyond_3 * r.n_bins))}/{r.n_bins},"
                      f"max|z|={r.max_abs_z:.2f}" for k, r in results.items())
    criterion(4, ok, f"Monte Carlo slab, 1e7 histories, seed {SEED}, {elapsed:.0f}s; {detail}")
    for r in results.values():
        assert r.frac_within_3 >= 0.95
        assert r.frac_beyond_3 <= 0.005
    assert elapsed <= 900


# 5. cylindrical problems ---------------------------------------------------------

def test_cylindrical(criterion):
    start = time.perf_counter()
    mass_err = 0.0
    for t in (1.0, 5.0):
        g, a, b = singular_endpoint_transform(
            SingularKind.INVERSE_SQRT_UPPER,
            lambda r, t=t: line_uncollided_kernel(r, t) * 2 * math.pi * r, 0.0, t)
        mass = integrate_1d(g, a, b, QuadSpec(1e-12, 1e-10)).value
        mass_err = max(mass_err, abs(mass - math.exp(-t)))

    spec, t = FIGURE_SPECS["cyl_gaussian_pulse"], 1.0
    edges = _edges(spec, t, 20)
    tally = run(spec, McConfig(histories=HISTORIES, edges=edges, tally_times=[t], seed=SEED))
    ref = bin_averages(spec, edges, t, quad=QuadSpec(1e-6, 1e-4), nodes=8,
                       parts=("phi_total",))["phi_total"]
    report = compare(tally, ref, "total")
    elapsed = time.perf_counter() - start
    ok = mass_err <= 1e-4 and report.frac_beyond_3 == 0 and elapsed <= 1800
    criterion(5, ok, f"cylindrical: line uncollided mass err {mass_err:.1e} (tol 1e-4); "
                     f"cylindrical Gaussian vs MC max|z|={report.max_abs_z:.2f} on "
                     f"{report.n_bins} bins, {elapsed:.0f}s")
    assert mass_err <= 1e-4
    assert report.frac_beyond_3 == 0
    assert elapsed <= 1800


# 6. uncollided-as-source workflow ------------------------------------------------

def test_manufactured_source(criterion):
    start = time.perf_counter()
    t, results = 1.0, {}
    for name in ("plane_pulse", "gaussian_pulse"):
        spec = FIGURE_SPECS[name]
        edges = _edges(spec, t, 40)
        tally = run_mms(spec, McConfig(histories=HISTORIES, edges=edges, tally_times=[t], seed=SEED))
        ref = bin_averages(spec, edges, t, nodes=12, parts=("phi_c",))["phi_c"]
        results[name] = compare(tally, ref, "total")
    elapsed = time.perf_counter() - start
    ok = all(r.frac_beyond_3 == 0 for r in results.values()) and elapsed <= 600
    detail = " ".join(f"{k}:max|z|={r.max_abs_z:.2f}/{r.n_bins} bins" for k, r in results.items())
    criterion(6, ok, f"uncollided-as-source, 1e7 histories, {elapsed:.0f}s; {detail}")
    for r in results.values():
        assert r.frac_beyond_3 == 0
    assert elapsed <= 600


# 7. narrow-source limits --------------------------------------------------------

def test_narrow_limits(criterion):
    worst = 0.0
    narrow = ((ProblemSpec("square_pulse", c=C, x0=1e-3), 2e-3),
              (ProblemSpec("gaussian_pulse", c=C, sigma=1e-3), 1e-3 * math.sqrt(math.pi)))
    for t in (1.0, 5.0):
        x = np.array([0.0, 0.5 * t])
        ref = evaluate(FIGURE_SPECS["plane_pulse"], x, t).phi_total
        for spec, mass in narrow:
            val = evaluate(spec, x, t).phi_total / mass
            worst = max(worst, float(np.max(np.abs(val / ref - 1))))
    criterion(7, worst <= 5e-3, f"narrow-source limits worst rel {worst:.1e} (tol 5e-3)")
    assert worst <= 5e-3


# 8. structure of the figure data -------------------------------------------------

def test_figure_structure(criterion):
    failures = []
    for name, spec in FIGURE_SPECS.items():
        for t in (1.0, 5.0, 10.0):
            bound, exact = support_bound(spec, t)
            n = 9 if spec.kind.cylindrical else 41
            lo = 0.0 if spec.kind.cylindrical else -bound
            grid = np.linspace(lo, bound, n)[:-1]
            res = evaluate(spec, grid, t)
            if not np.all(res.phi_c >= -res.err_c - 1e-12):
                failures.append(f"{name}@{t:g}: uncollided above total")
            if not spec.kind.cylindrical and not np.allclose(
                    res.phi_total, evaluate(spec, -grid, t).phi_total, rtol=1e-8, atol=1e-14):
                failures.append(f"{name}@{t:g}: not even")
            if exact:
                outside = evaluate(spec, np.array([bound * (1 + 1e-9), bound + 0.5]), t).phi_total
                inside = evaluate(spec, np.array([bound - 1e-3]), t).phi_total
                if np.any(outside != 0.0) or not inside[0] > 0:
                    failures.append(f"{name}@{t:g}: support not truncated at {bound:g}")
    plane = FIGURE_SPECS["plane_pulse"]
    edge = evaluate(plane, np.array([1 - 1e-6, 1 + 1e-6]), 1.0).phi_total
    jump = edge[0] - edge[1]
    if not jump >= math.exp(-1) / 2:
        failures.append(f"plane pulse wavefront jump {jump:.3g} at x=1")
    criterion(8, not failures, "figure structure (support, symmetry, uncollided <= total, "
                               f"wavefront jump {jump:.3f} at x=1): "
                               + ("; ".join(failures) or "all checks hold"))
    assert not failures


# 9. special functions ---------------------------------------------------------------

def test_special_functions(criterion):
    mp.mp.dps = 40
    xs_erf = [-6.0, -3.7, -2.2, -1.3, -0.8, -0.31, -1e-3, -1e-8, 0.0, 1e-10, 2e-5, 0.07, 0.44,
              0.5, 0.99, 1.5, 2.75, 3.9, 4.8, 5.95]
    xs_ei = [-50.0, -41.3, -30.0, -17.7, -9.1, -5.0, -2.5, -1.01, -1.0, -0.999, -0.6, -0.25,
             -0.1, -1e-2, -1e-4, -1e-6, -1e-9, -1e-12, 0.5, 7.0]

    def rel(got, want):
        want = float(want)
        return abs(got - want) / abs(want) if want else abs(got)

    e_erf = max(rel(float(erf(x)), mp.erf(mp.mpf(x))) for x in xs_erf)
    e_ei = max(rel(float(expint_ei(x)), mp.ei(mp.mpf(x))) for x in xs_ei)
    ok = e_erf <= 1e-14 and e_ei <= 1e-12
    criterion(9, ok, f"special functions vs 40-digit reference: erf max rel {e_erf:.1e} "
                     f"(tol 1e-14), Ei max rel {e_ei:.1e} (tol 1e-12), 20 arguments each")
    assert e_erf <= 1e-14
    assert e_ei <= 1e-12

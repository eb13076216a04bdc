import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdbench.core import (
    EvalPoint,
    FluxResult,
    InvalidParameter,
    ProblemKind,
    ProblemSpec,
    eta,
    eta_dprime,
    eta_p,
    eta_prime,
    source_mass,
    support_bound,
    validate,
)


def test_plane_pulse_needs_no_shape():
    spec = validate(ProblemSpec("plane_pulse", c=1.0))
    assert spec.kind is ProblemKind.PLANE_PULSE and spec.x0 is None


def test_negative_half_width_rejected():
    with pytest.raises(InvalidParameter) as info:
        ProblemSpec("square_pulse", c=1.0, x0=-0.5)
    assert info.value.name == "x0"


def test_gaussian_source_figure_parameters():
    spec = ProblemSpec("gaussian_source", c=1.0, sigma=0.5, t0=5.0)
    assert (spec.sigma, spec.t0) == (0.5, 5.0)


@pytest.mark.parametrize("c", [-0.1, 1.01, float("nan")])
def test_scattering_ratio_range(c):
    with pytest.raises(InvalidParameter) as info:
        ProblemSpec("plane_pulse", c=c)
    assert info.value.name == "c"


@pytest.mark.parametrize("kind,missing", [("square_pulse", "x0"), ("gaussian_pulse", "sigma"),
                                          ("square_source", "t0"), ("cyl_gaussian_pulse", "sigma")])
def test_missing_parameter_named(kind, missing):
    kw = {"x0": 0.5, "sigma": 0.5, "t0": 5.0}
    kw.pop(missing)
    with pytest.raises(InvalidParameter) as info:
        ProblemSpec(kind, c=1.0, **kw)
    assert info.value.name == missing


def test_unused_parameters_are_dropped():
    spec = ProblemSpec("plane_pulse", c=0.5, x0=3.0, sigma=2.0, t0=1.0)
    assert spec.x0 is None and spec.sigma is None and spec.t0 is None
    assert spec == ProblemSpec("plane_pulse", c=0.5)


def test_support_bound_examples():
    assert support_bound(ProblemSpec("plane_pulse"), 5.0) == (5.0, True)
    assert support_bound(ProblemSpec("square_pulse", x0=0.5), 1.0) == (1.5, True)
    assert support_bound(ProblemSpec("gaussian_pulse", sigma=0.5), 1.0) == (5.0, False)


def test_support_bound_requires_positive_time():
    with pytest.raises(InvalidParameter):
        support_bound(ProblemSpec("plane_pulse"), 0.0)


def test_source_mass():
    assert source_mass(ProblemSpec("square_source", x0=0.5, t0=5.0), 1.0) == pytest.approx(1.0)
    assert source_mass(ProblemSpec("square_source", x0=0.5, t0=5.0), 10.0) == pytest.approx(5.0)
    assert source_mass(ProblemSpec("gaussian_pulse", sigma=0.5), 3.0) == pytest.approx(0.5 * math.sqrt(math.pi))
    assert source_mass(ProblemSpec("cyl_gaussian_pulse", sigma=0.5), 3.0) == pytest.approx(math.pi / 4)


def test_eval_point_requires_positive_time():
    with pytest.raises(InvalidParameter):
        EvalPoint(0.0, 0.0)


def test_flux_result_total_is_exact_sum():
    r = FluxResult(np.zeros(2), 1.0, np.array([0.1, 0.2]), np.array([0.3, 1e-17]),
                   np.zeros(2), np.zeros(2))
    assert np.array_equal(r.phi_total, r.phi_u + r.phi_c)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.1, 10), st.floats(0, 0.09))
def test_similarity_variables_are_ratios(x, s, t, tau):
    assert eta(x, t) == x / t
    assert eta_prime(x, s, t) == (x - s) / t
    assert eta_dprime(x, s, t, tau) == (x - s) / (t - tau)
    assert eta_p(abs(x), t) == abs(x) / t

"""Tests for the norms and anisotropic geometry module."""

import math

import numpy as np
import pytest

from boltzlab.core.distributions import make_heavy_tail, make_maxwellian
from boltzlab.core.errors import GeometryError, QuadratureError
from boltzlab.core.geometry_norms import (
    comparability_ratio,
    d_gs,
    in_ellipsoid,
    lift,
    lp_norm_estimate,
    seminorm_estimate,
    sqrt_density,
    t0_inverse,
    t0_map,
    weighted_lp_norm,
)
from boltzlab.core.kernel import KineticParams
from boltzlab.core.quadrature import QuadratureSpec

@pytest.fixture
def spec():
    """Create the default quadrature settings."""
    return QuadratureSpec()

@pytest.fixture
def fast_spec():
    """Create coarse settings for the seminorm."""
    return QuadratureSpec(velocity_radius=5.0, grid_nodes=12, grading_ratio=2.0, panel_order=3, direction_nodes=8)

def _unit_ball(v):
    return (np.sum(v ** 2, axis=-1) <= 1.0).astype(float)

def test_d_gs_examples():
    """Test the anisotropic distance at reference points."""
    assert d_gs([1.0, 0.0], [0.0, 1.0]) == pytest.approx(math.sqrt(2.0))
    assert d_gs([1.0, 0.0], [3.0, 0.0]) == pytest.approx(math.sqrt(20.0))
    assert d_gs([0.5, -2.0], [0.5, -2.0]) == 0.0

def test_lift():
    """Test the lift onto the paraboloid."""
    point = lift([1.0, 2.0])
    assert point.lift == (1.0, 2.0, 2.5)
    assert point.v == (1.0, 2.0)

def test_d_gs_metric_properties():
    """Test symmetry, the triangle inequality and d_GS >= |v1 - v2|."""
    rng = np.random.default_rng(0)
    a, b, c = (rng.normal(scale=3.0, size=(10000, 3)) for _ in range(3))
    ab, bc, ac = d_gs(a, b), d_gs(b, c), d_gs(a, c)
    assert np.allclose(ab, d_gs(b, a))
    assert np.all(ac <= ab + bc + 1e-12)
    assert np.all(ab >= np.linalg.norm(a - b, axis=-1) - 1e-12)

def test_t0_map_example():
    """Test the parallel contraction at a reference point."""
    assert np.allclose(t0_map([2.0, 0.0], [2.0, 3.0]), [1.0, 3.0])
    assert np.allclose(t0_inverse([2.0, 0.0], [1.0, 3.0]), [2.0, 3.0])

    # Check that the map is the identity for |v0| < 2
    assert np.allclose(t0_map([1.0, 1.0], [2.0, 3.0]), [2.0, 3.0])

def test_t0_inverse_roundtrip():
    """Test that t0_inverse inverts t0_map."""
    rng = np.random.default_rng(1)
    v0 = np.array([3.0, -4.0, 1.0])
    x = rng.normal(size=(100, 3))
    assert np.allclose(t0_inverse(v0, t0_map(v0, x)), x)

def test_comparability_bounded():
    """Test the comparability of d_GS with the rescaled Euclidean distance."""
    rng = np.random.default_rng(2)
    ratios = []
    for _ in range(2000):
        speed = rng.uniform(2.0, 50.0)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        v0 = speed * np.array([math.cos(angle), math.sin(angle)])
        y1, y2 = rng.normal(size=(2, 2))
        y1 *= rng.uniform() / np.linalg.norm(y1)
        y2 *= rng.uniform() / np.linalg.norm(y2)
        v1, v2 = v0 + t0_map(v0, y1), v0 + t0_map(v0, y2)
        assert in_ellipsoid(v0, v1)
        ratios.append(comparability_ratio(v0, v1, v2))
    assert 1.0 / 32.0 <= min(ratios)
    assert max(ratios) <= 32.0

def test_comparability_errors():
    """Test the admissibility checks of the comparability ratio."""
    v0 = np.array([4.0, 0.0])
    with pytest.raises(GeometryError, match="\\|v0\\| >= 2"):
        comparability_ratio([1.0, 0.0], [1.0, 0.1], [1.0, 0.2])
    with pytest.raises(GeometryError, match="E_1"):
        comparability_ratio(v0, v0 + [0.0, 2.0], v0)
    with pytest.raises(GeometryError, match="v1 = v2"):
        comparability_ratio(v0, v0 + [0.1, 0.0], v0 + [0.1, 0.0])

def test_unit_ball_volume(spec):
    """Test that the L^1 norm of the unit-ball indicator is pi."""
    result = lp_norm_estimate(_unit_ball, 1.0, 0.0, spec, d=2)
    assert result.value == pytest.approx(math.pi, rel=1e-12)

def test_maxwellian_norms(spec):
    """Test weighted norms of the standard Maxwellian in d=2."""
    f = make_maxwellian(2)
    assert weighted_lp_norm(f, 1.0, 0.0, spec) == pytest.approx(1.0, rel=1e-6)
    assert weighted_lp_norm(f, 1.0, 2.0, spec) == pytest.approx(3.0, rel=1e-6)
    assert weighted_lp_norm(f, 2.0, 0.0, spec) == pytest.approx((4.0 * math.pi) ** -0.5, rel=1e-6)

def test_restricted_norm_smaller(spec):
    """Test that restricting to a ball lowers the norm."""
    f = make_maxwellian(2)
    full = lp_norm_estimate(f, 1.5, 0.0, spec)
    ball = lp_norm_estimate(f, 1.5, 0.0, spec, radius=1.0)
    assert 0 < ball.value < full.value

def test_divergent_tail(spec):
    """Test that a divergent weighted tail is reported."""
    with pytest.raises(QuadratureError, match="divergent tail"):
        lp_norm_estimate(make_heavy_tail(2, eps=1.0), 1.0, 4.0, spec)
    with pytest.raises(QuadratureError, match="p >= 1"):
        lp_norm_estimate(make_maxwellian(2), 0.5, 0.0, spec)

def test_plain_function_needs_dimension(spec):
    """Test that a plain function without d is rejected."""
    with pytest.raises(GeometryError, match="dimension"):
        lp_norm_estimate(_unit_ball, 1.0, 0.0, spec)

def test_seminorm_of_constant(fast_spec):
    """Test that the seminorm of a constant vanishes."""
    params = KineticParams(d=2, gamma=-1.0, s=0.4)
    result = seminorm_estimate(lambda v: np.ones(v.shape[:-1]), params, fast_spec, d=2)
    assert result.value == 0.0

def test_seminorm_homogeneity(fast_spec):
    """Test that the seminorm is quadratic in g."""
    params = KineticParams(d=2, gamma=-1.0, s=0.4)
    root = sqrt_density(make_maxwellian(2))
    base = seminorm_estimate(root, params, fast_spec, d=2)
    tripled = seminorm_estimate(lambda v: 3.0 * root(v), params, fast_spec, d=2)
    assert base.value > 0
    assert math.isfinite(base.abs_error_estimate)
    assert tripled.value == pytest.approx(9.0 * base.value, rel=1e-10)

def test_seminorm_radius_validation(fast_spec):
    """Test that a non-positive restriction radius is rejected."""
    params = KineticParams(d=2, gamma=-1.0, s=0.4)
    with pytest.raises(GeometryError, match="rho"):
        seminorm_estimate(_unit_ball, params, fast_spec, d=2, rho=0.0)

"""Tests for the distributions module."""

import math

import numpy as np
import pytest
from scipy import integrate

from boltzlab.core.distributions import (
    DensityKind,
    FAMILIES,
    bi_maxwellian_family,
    histogram_from_samples,
    macro_state,
    make_bi_maxwellian,
    make_heavy_tail,
    make_histogram_density,
    make_maxwellian,
    make_product_perturbation,
    read_histogram_csv,
    standard_family,
    write_histogram_csv,
)
from boltzlab.core.errors import DensityError
from boltzlab.core.quadrature import QuadratureSpec, box_rule

@pytest.fixture
def spec():
    """Create the default quadrature settings."""
    return QuadratureSpec()

def test_maxwellian_value():
    """Test the standard Maxwellian at the origin."""
    f = make_maxwellian(2)
    assert float(f.eval(np.zeros(2))) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)
    assert f.kind == DensityKind.MAXWELLIAN
    assert f.has_sampler

def test_maxwellian_macro_state(spec):
    """Test mass, energy and entropy of the standard Maxwellian."""
    state = macro_state(make_maxwellian(2), spec)
    assert state.analytic
    assert state.M0 == pytest.approx(1.0)
    assert state.E0 == pytest.approx(2.0)
    assert state.H0 == pytest.approx(-math.log(2.0 * math.pi * math.e), rel=1e-12)

    # Check that the quadrature agrees with the closed forms
    assert state.discrepancy < 1e-4

    state = macro_state(make_maxwellian(3), spec)
    assert state.E0 == pytest.approx(3.0)

def test_bi_maxwellian_macro_state(spec):
    """Test the moments of a symmetric bi-Maxwellian."""
    f = make_bi_maxwellian(2, 0.5, [2.0, 0.0], 1.0, 0.5, [-2.0, 0.0], 1.0)
    state = macro_state(f, spec)
    assert state.M0 == pytest.approx(1.0)
    assert state.E0 == pytest.approx(6.0)
    assert f.center == (0.0, 0.0)
    assert state.discrepancy < 1e-3

def test_bi_maxwellian_reduces_to_maxwellian():
    """Test that a vanishing second weight gives the Maxwellian pointwise."""
    bi = make_bi_maxwellian(2, 1.0, [0.5, 0.0], 1.0, 0.0, [3.0, 0.0], 2.0)
    single = make_maxwellian(2, [0.5, 0.0], 1.0)
    v = np.random.default_rng(3).normal(size=(100, 2)) * 2
    assert np.allclose(bi.eval(v), single.eval(v), rtol=1e-12)
    assert bi.analytic.entropy == pytest.approx(single.analytic.entropy)

def test_invalid_parameters():
    """Test that invalid density parameters are rejected."""
    with pytest.raises(DensityError, match="temperature"):
        make_maxwellian(2, temperature=0.0)
    with pytest.raises(DensityError, match="weights"):
        make_bi_maxwellian(2, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0)
    with pytest.raises(DensityError, match="eps"):
        make_heavy_tail(2, eps=1.5)
    with pytest.raises(DensityError, match="amplitude"):
        make_product_perturbation(2, alpha=1.0)
    with pytest.raises(DensityError, match="components"):
        make_maxwellian(3, mean=[1.0, 2.0])

def test_zero_density_rejected(spec):
    """Test that macroscopic quantities of f = 0 are rejected."""
    with pytest.raises(DensityError, match="mass below threshold"):
        macro_state(make_maxwellian(2).scaled(0.0), spec)

def test_heavy_tail_normalisation():
    """Test that the heavy tail has unit mass."""
    f = make_heavy_tail(2, eps=1.0)
    mass, _ = integrate.quad(lambda r: float(f.eval(np.array([r, 0.0]))) * 2.0 * math.pi * r, 0.0, np.inf)
    assert mass == pytest.approx(1.0, rel=1e-6)
    assert f.analytic.energy > 0

def test_product_perturbation_moments():
    """Test mass and energy of the perturbed Maxwellian against quadrature."""
    f = make_product_perturbation(2, temperature=1.0, alpha=0.5, k=1.0)
    points, weights = box_rule(10.0, 80, 2)
    values = f.eval(points)
    assert weights @ values == pytest.approx(1.0, rel=1e-8)
    assert weights @ (values * np.sum(points ** 2, axis=-1)) == pytest.approx(f.analytic.energy, rel=1e-8)

def test_derived_densities():
    """Test the moments of scaled, shifted and dilated densities."""
    f = make_maxwellian(2)
    assert f.scaled(3.0).analytic.mass == pytest.approx(3.0)
    assert float(f.scaled(3.0).eval(np.zeros(2))) == pytest.approx(3.0 / (2.0 * math.pi))

    shifted = f.shifted([1.0, 0.0])
    assert shifted.analytic.energy == pytest.approx(3.0)
    assert shifted.center == (1.0, 0.0)
    assert float(shifted.eval(np.array([1.0, 0.0]))) == pytest.approx(1.0 / (2.0 * math.pi))

    dilated = f.dilated(2.0)
    assert dilated.analytic.energy == pytest.approx(8.0)
    assert dilated.analytic.mass == pytest.approx(1.0)
    assert float(dilated.eval(np.zeros(2))) == pytest.approx(1.0 / (8.0 * math.pi))

    with pytest.raises(DensityError):
        f.dilated(0.0)
    with pytest.raises(DensityError):
        f.scaled(-1.0)

def test_truncated_density():
    """Test that truncation caps the density."""
    f = make_maxwellian(2)
    level = 0.05
    capped = f.truncated(level)
    v = np.random.default_rng(0).normal(size=(200, 2))
    assert np.all(capped.eval(v) <= level * (1 + 1e-12))
    assert np.allclose(capped.eval(v), np.minimum(f.eval(v), level))
    assert capped.analytic is None

    # Check the rejection sampler returns the requested number of draws
    assert capped.sample(500, np.random.default_rng(1)).shape == (500, 2)

def test_sampler_mean():
    """Test the Maxwellian sampler against the bulk velocity."""
    f = make_maxwellian(2, mean=[1.0, -0.5])
    x = f.sample(10000, np.random.default_rng(42))
    assert np.allclose(x.mean(axis=0), [1.0, -0.5], atol=4.0 / math.sqrt(10000))

def test_histogram_csv(tmp_path):
    """Test writing and reading a histogram file."""
    samples = make_maxwellian(2).sample(5000, np.random.default_rng(5))
    centers, counts, width = histogram_from_samples(samples, 20, 5.0)
    assert counts.sum() == pytest.approx(5000, abs=5)
    assert width == pytest.approx(0.5)

    path = tmp_path / "hist.csv"
    write_histogram_csv(path, centers, counts)
    read_centers, read_counts, read_width = read_histogram_csv(path)
    assert np.array_equal(read_centers, centers)
    assert np.array_equal(read_counts, counts)
    assert read_width == pytest.approx(width)

def test_histogram_bad_header(tmp_path):
    """Test that a histogram file with the wrong columns is rejected."""
    path = tmp_path / "bad.csv"
    path.write_text("x,y,n\n0,0,1\n")
    with pytest.raises(DensityError, match="bin_center"):
        read_histogram_csv(path)

def test_histogram_density_mass():
    """Test that the smoothed histogram carries the requested mass."""
    samples = make_maxwellian(2).sample(5000, np.random.default_rng(6))
    centers, counts, width = histogram_from_samples(samples, 24, 5.0)
    f = make_histogram_density(centers, counts, width, mass=2.0)
    points, weights = box_rule(6.0, 160, 2)
    assert weights @ f.eval(points) == pytest.approx(2.0, rel=0.02)
    assert f.kind == DensityKind.HISTOGRAM

def test_families():
    """Test the sizes and dimensions of the test families."""
    members = standard_family(3)
    assert len(members) == 20
    assert len({name for name, _ in members}) == 20
    assert all(f.d == 3 for _, f in members)
    assert len(bi_maxwellian_family(2, (4.0,))) == 1
    assert set(FAMILIES) == {"maxwellian", "bi_maxwellian", "heavy_tail", "product_perturbation", "standard"}

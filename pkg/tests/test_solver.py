"""Tests for the particle solver module."""

import math

import numpy as np
import pytest

from boltzlab.core.distributions import DensityKind
from boltzlab.core.errors import ConfigError, SolverError
from boltzlab.core.kernel import KineticParams
from boltzlab.core.quadrature import QuadratureSpec
from boltzlab.core.solver import (
    TRAJECTORY_COLUMNS,
    init_ensemble,
    pair_rates,
    read_checkpoint,
    run,
    snapshot_density,
    step,
    suggest_dt,
    write_checkpoint,
    write_trajectory_csv,
)

@pytest.fixture
def spec():
    """Create coarse quadrature settings for snapshot diagnostics."""
    return QuadratureSpec(grid_nodes=12, theta_min=1e-2, grading_ratio=2.0, panel_order=3, direction_nodes=8)

@pytest.fixture
def params():
    """Create two-dimensional soft-potential parameters."""
    return KineticParams(d=2, gamma=-1.0, s=0.3)

def test_init_ensemble(bimodal):
    """Test that initial velocities are reproducible and carry the mass."""
    first = init_ensemble(bimodal, 2000, seed=3)
    second = init_ensemble(bimodal, 2000, seed=3)
    assert np.array_equal(first.velocities, second.velocities)
    assert first.n == 2000
    assert first.d == 2
    assert first.mass == pytest.approx(1.0)
    assert np.allclose(first.momentum, 0.0, atol=4.0 * math.sqrt(5.0 / 2000))

    with pytest.raises(ConfigError, match="at least 2"):
        init_ensemble(bimodal, 1)

def test_pair_rates(params):
    """Test the majorant and the acceptance probabilities."""
    v = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    v_star = np.array([[1e-4, 0.0], [0.5, 0.0], [3.0, 0.0]])
    majorant, accept = pair_rates(v, v_star, params, 1.0, 0.05, 1e-3)
    assert np.all(majorant > 0)
    assert accept[0] == pytest.approx(1.0)
    assert np.all((accept > 0) & (accept <= 1.0))

    # Check that Maxwell molecules accept every candidate
    maxwell = KineticParams(d=2, gamma=0.0, s=0.3)
    _, accept = pair_rates(v, v_star, maxwell, 1.0, 0.05, 0.0)
    assert np.array_equal(accept, np.ones(3))

    with pytest.raises(ConfigError, match="relative-speed floor"):
        pair_rates(v, v_star, params, 1.0, 0.05, 0.0)

def test_step_conserves_momentum_and_energy(bimodal, params):
    """Test that a collision step conserves the collision invariants."""
    ensemble = init_ensemble(bimodal, 2000, seed=1)
    dt = suggest_dt(ensemble, params)
    advanced = step(ensemble, dt, params)
    assert advanced.stats.events > 0
    assert advanced.stats.max_momentum_error <= 1e-12
    assert advanced.stats.max_energy_error <= 1e-12
    assert advanced.energy == pytest.approx(ensemble.energy, rel=1e-10)
    assert np.allclose(advanced.momentum, ensemble.momentum, atol=1e-12)
    assert advanced.time == pytest.approx(dt)
    assert advanced.step_index == 1

def test_step_is_deterministic(bimodal, params):
    """Test that steps are reproducible and independent of the thread count."""
    ensemble = init_ensemble(bimodal, 10000, seed=2)
    dt = suggest_dt(ensemble, params)
    serial = step(ensemble, dt, params)
    again = step(ensemble, dt, params)
    threaded = step(ensemble, dt, params, jobs=2)
    assert np.array_equal(serial.velocities, again.velocities)
    assert np.array_equal(serial.velocities, threaded.velocities)

def test_step_majorant_overflow(bimodal, params):
    """Test that an oversized time step is refused."""
    ensemble = init_ensemble(bimodal, 2000, seed=1)
    with pytest.raises(SolverError, match="majorant overflow"):
        step(ensemble, 100.0 * suggest_dt(ensemble, params), params)
    with pytest.raises(SolverError, match="positive"):
        step(ensemble, 0.0, params)

def test_maxwell_molecules_accept_all(bimodal):
    """Test that gamma = 0 accepts every candidate collision."""
    params = KineticParams(d=2, gamma=0.0, s=0.3)
    ensemble = init_ensemble(bimodal, 2000, seed=4)
    advanced = step(ensemble, suggest_dt(ensemble, params), params)
    assert advanced.stats.candidates > 0
    assert advanced.stats.acceptance_rate == 1.0

def test_snapshot_density(bimodal):
    """Test the smoothed density of an ensemble."""
    ensemble = init_ensemble(bimodal, 2000, seed=5)
    density = snapshot_density(ensemble)
    assert density.kind == DensityKind.HISTOGRAM
    assert density.d == 2
    assert float(density.eval(np.array([2.0, 0.0]))) > float(density.eval(np.array([0.0, 3.0])))

def test_run_relaxation(bimodal, spec, params):
    """Test a short relaxation run and its diagnostics."""
    diagnostics = run(bimodal, 0.5, 2, 2000, params, spec, seed=7)
    assert diagnostics.times == pytest.approx([0.0, 0.25, 0.5])
    assert diagnostics.mass == pytest.approx([1.0, 1.0, 1.0])
    assert diagnostics.energy[-1] == pytest.approx(diagnostics.energy[0], rel=1e-10)
    assert diagnostics.lpq_running_integral[0] == 0.0
    assert all(b >= a for a, b in zip(diagnostics.lpq_running_integral, diagnostics.lpq_running_integral[1:]))
    assert all(math.isfinite(h) for h in diagnostics.entropy)
    assert all(diagnostics.holder_holds)
    assert diagnostics.final.time == pytest.approx(0.5)
    assert list(diagnostics.rows()[0]) == TRAJECTORY_COLUMNS

def test_run_hard_potential_skips_holder(bimodal, spec):
    """Test that the Hoelder chain is skipped for gamma > 0."""
    params = KineticParams(d=2, gamma=0.5, s=0.3)
    diagnostics = run(bimodal, 0.2, 1, 2000, params, spec, seed=7)
    assert all(math.isnan(x) for x in diagnostics.holder_lhs)
    assert diagnostics.holder_holds == [True, True]

def test_run_validation(bimodal, spec, params):
    """Test the run arguments."""
    with pytest.raises(ConfigError, match="snapshots"):
        run(bimodal, 1.0, 0, 2000, params, spec)
    with pytest.raises(ConfigError, match="final time"):
        run(bimodal, 0.0, 2, 2000, params, spec)

def test_trajectory_csv(tmp_path, bimodal, spec):
    """Test the trajectory table."""
    params = KineticParams(d=2, gamma=0.5, s=0.3)
    diagnostics = run(bimodal, 0.2, 1, 2000, params, spec, seed=7)
    path = write_trajectory_csv(tmp_path / "trajectory.csv", diagnostics)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRAJECTORY_COLUMNS)
    assert len(lines) == 3

def test_checkpoint(tmp_path, bimodal):
    """Test writing and reading a checkpoint."""
    ensemble = init_ensemble(bimodal, 100, seed=9)
    path = tmp_path / "checkpoint.csv"
    write_checkpoint(path, ensemble)
    restored = read_checkpoint(path)
    assert np.array_equal(restored.velocities, ensemble.velocities)

    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(ConfigError, match="v_1"):
        read_checkpoint(bad)

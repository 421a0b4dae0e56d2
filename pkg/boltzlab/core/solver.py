"""
Particle relaxation for the spatially homogeneous Boltzmann equation.

Direct simulation Monte Carlo with an angular cutoff: deviation angles below
theta_min are dropped and the rate singularity of soft potentials is clamped
at a small relative speed, with exact rejection above the clamp.
"""

import csv
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from humanfriendly import format_timespan

from .distributions import Density, histogram_from_samples, macro_state, make_histogram_density
from .errors import ConfigError, SolverError
from .geometry_norms import lp_norm_estimate
from .io import write_csv
from .kernel import KineticParams, angular_measure, exponents, post_collision, sample_deviation, sigma_from_deviation
from .quadrature import QuadratureSpec, chunked, ordered_map, orthonormal_complement
from .verifier import holder_chain

logger = logging.getLogger(__name__)

DEFAULT_THETA_MIN = 0.05
DEFAULT_VREL_FLOOR = 1e-3
MAX_COLLISIONS_PER_STEP = 0.5
TARGET_COLLISIONS_PER_STEP = 0.25
MIN_PARTICLES = 1000
PAIR_BLOCK = 4096
TRAJECTORY_COLUMNS = ["t", "H", "mass", "energy", "lpq_norm", "lpq_running_integral", "holder_lhs", "holder_rhs"]


@dataclass
class CollisionStats:
    """Counters and worst conservation errors over collision events."""

    candidates: int = 0
    accepted: int = 0
    events: int = 0
    max_momentum_error: float = 0.0
    max_energy_error: float = 0.0

    def merge(self, other: "CollisionStats") -> "CollisionStats":
        return CollisionStats(
            candidates=self.candidates + other.candidates,
            accepted=self.accepted + other.accepted,
            events=self.events + other.events,
            max_momentum_error=max(self.max_momentum_error, other.max_momentum_error),
            max_energy_error=max(self.max_energy_error, other.max_energy_error),
        )

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.candidates if self.candidates else math.nan

    def to_dict(self) -> Dict[str, Any]:
        return {
            "candidates": self.candidates,
            "accepted": self.accepted,
            "events": self.events,
            "acceptance_rate": self.acceptance_rate,
            "max_momentum_error": self.max_momentum_error,
            "max_energy_error": self.max_energy_error,
        }


@dataclass
class ParticleEnsemble:
    """N equally weighted velocities representing f / mass."""

    velocities: np.ndarray
    mass: float = 1.0
    time: float = 0.0
    rng_seed: int = 0
    step_index: int = 0
    stats: CollisionStats = field(default_factory=CollisionStats)

    @property
    def n(self) -> int:
        return int(self.velocities.shape[0])

    @property
    def d(self) -> int:
        return int(self.velocities.shape[1])

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n, 1.0 / self.n)

    @property
    def momentum(self) -> np.ndarray:
        return self.mass * self.velocities.mean(axis=0)

    @property
    def energy(self) -> float:
        """Second moment int f |v|^2."""
        return float(self.mass * np.mean(np.sum(self.velocities ** 2, axis=-1)))


@dataclass
class TrajectoryDiagnostics:
    """Snapshot diagnostics of one relaxation run."""

    times: List[float] = field(default_factory=list)
    entropy: List[float] = field(default_factory=list)
    mass: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    lpq_norm: List[float] = field(default_factory=list)
    lpq_running_integral: List[float] = field(default_factory=list)
    holder_lhs: List[float] = field(default_factory=list)
    holder_rhs: List[float] = field(default_factory=list)
    holder_holds: List[bool] = field(default_factory=list)
    dt: float = 0.0
    stats: CollisionStats = field(default_factory=CollisionStats)
    final: Optional[ParticleEnsemble] = field(default=None, repr=False)

    @property
    def entropy_drop(self) -> float:
        """H(0) - H(T); compared with the time-integrated dissipation only as a measurement."""
        return self.entropy[0] - self.entropy[-1] if self.entropy else math.nan

    def entropy_nonincreasing(self, band: float) -> bool:
        return all(b <= a + band for a, b in zip(self.entropy, self.entropy[1:]))

    def rows(self) -> List[Dict[str, float]]:
        columns = zip(
            self.times,
            self.entropy,
            self.mass,
            self.energy,
            self.lpq_norm,
            self.lpq_running_integral,
            self.holder_lhs,
            self.holder_rhs,
        )
        return [dict(zip(TRAJECTORY_COLUMNS, values)) for values in columns]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": self.rows(),
            "holder_holds": list(self.holder_holds),
            "entropy_drop": self.entropy_drop,
            "dt": self.dt,
            "stats": self.stats.to_dict(),
        }


def init_ensemble(f0: Density, n: int, seed: int = 0, mass: Optional[float] = None) -> ParticleEnsemble:
    """Draw n i.i.d. velocities from f0 / mass.

    Raises:
        ConfigError: If n < 2.
        DensityError: If f0 has no sampler.
    """
    if n < 2:
        raise ConfigError(f"ensemble size must be at least 2, got {n}")
    if n < MIN_PARTICLES:
        logger.warning(f"Ensemble of {n} particles is below {MIN_PARTICLES}; diagnostics will be noisy")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    velocities = f0.sample(n, rng)
    if mass is None:
        mass = f0.analytic.mass if f0.analytic is not None else 1.0
    return ParticleEnsemble(velocities=velocities, mass=float(mass), rng_seed=seed)


def pair_rates(
    v: np.ndarray, v_star: np.ndarray, params: KineticParams, mass: float, theta_min: float, vrel_floor: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Clamped majorant rates per pair and the acceptance probabilities."""
    if params.gamma < 0 and not vrel_floor > 0:
        raise ConfigError("soft potentials need a positive relative-speed floor")
    g = np.linalg.norm(v - v_star, axis=-1)
    clamped = np.maximum(g, vrel_floor)
    if params.gamma == 0:
        majorant = np.full(len(g), mass * params.c_phi * angular_measure(params, theta_min))
        return majorant, np.ones_like(g)
    majorant = mass * params.c_phi * clamped ** params.gamma * angular_measure(params, theta_min)
    live = g > 0
    safe = np.where(live, g, 1.0)
    at_zero = 1.0 if params.gamma < 0 else 0.0
    accept = np.where(live, np.minimum(1.0, (safe / np.where(live, clamped, 1.0)) ** params.gamma), at_zero)
    return majorant, accept


def _scatter(
    v: np.ndarray, v_star: np.ndarray, params: KineticParams, theta_min: float, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    d = v.shape[-1]
    rel = v - v_star
    g = np.linalg.norm(rel, axis=-1)
    live = g > 0
    e = np.where(live[:, None], rel / np.where(live, g, 1.0)[:, None], np.eye(d)[0])
    basis = orthonormal_complement(e)
    if d == 2:
        normal = np.where(rng.random(len(v)) < 0.5, 1.0, -1.0)[:, None] * basis[:, 0, :]
    else:
        phi = 2.0 * math.pi * rng.random(len(v))
        normal = np.cos(phi)[:, None] * basis[:, 0, :] + np.sin(phi)[:, None] * basis[:, 1, :]
    deviation = sample_deviation(params, theta_min, len(v), rng)
    sigma = sigma_from_deviation(e, deviation, normal)
    return post_collision(v, v_star, sigma)


def _conservation_errors(
    v: np.ndarray, v_star: np.ndarray, v_new: np.ndarray, v_star_new: np.ndarray
) -> Tuple[float, float]:
    scale_p = np.linalg.norm(v, axis=-1) + np.linalg.norm(v_star, axis=-1)
    scale_e = np.sum(v ** 2, axis=-1) + np.sum(v_star ** 2, axis=-1)
    dp = np.linalg.norm((v_new + v_star_new) - (v + v_star), axis=-1)
    de = np.abs(np.sum(v_new ** 2, axis=-1) + np.sum(v_star_new ** 2, axis=-1) - scale_e)
    dp = np.where(scale_p > 0, dp / np.where(scale_p > 0, scale_p, 1.0), dp)
    de = np.where(scale_e > 0, de / np.where(scale_e > 0, scale_e, 1.0), de)
    return float(dp.max(initial=0.0)), float(de.max(initial=0.0))


def _collide_block(
    v: np.ndarray,
    v_star: np.ndarray,
    candidates: np.ndarray,
    accept: np.ndarray,
    params: KineticParams,
    theta_min: float,
    seed: np.random.SeedSequence,
) -> Tuple[np.ndarray, np.ndarray, CollisionStats]:
    rng = np.random.default_rng(seed)
    v, v_star = v.copy(), v_star.copy()
    # |v - v*| is invariant under collisions, so thinning can be drawn up front
    accepted = rng.binomial(candidates, accept)
    stats = CollisionStats(candidates=int(candidates.sum()), accepted=int(accepted.sum()))
    for round_index in range(int(accepted.max(initial=0))):
        active = accepted > round_index
        a, b = v[active], v_star[active]
        a_new, b_new = _scatter(a, b, params, theta_min, rng)
        dp, de = _conservation_errors(a, b, a_new, b_new)
        stats.max_momentum_error = max(stats.max_momentum_error, dp)
        stats.max_energy_error = max(stats.max_energy_error, de)
        stats.events += int(active.sum())
        v[active], v_star[active] = a_new, b_new
    return v, v_star, stats


def step(
    ensemble: ParticleEnsemble,
    dt: float,
    params: KineticParams,
    theta_min: float = DEFAULT_THETA_MIN,
    vrel_floor: float = DEFAULT_VREL_FLOOR,
    jobs: int = 1,
) -> ParticleEnsemble:
    """Advance the ensemble by dt with a Nanbu-Babovsky collision step.

    Particles are paired at random; each pair draws a Poisson number of
    candidate collisions from the clamped majorant rate and accepts each
    with probability Phi(g) / Phi(max(g, vrel_floor)), capped at 1.

    Raises:
        SolverError: If dt exceeds half a collision per particle on average.
    """
    if not dt > 0:
        raise SolverError("time step must be positive")
    n = ensemble.n
    seq = np.random.SeedSequence(ensemble.rng_seed, spawn_key=(ensemble.step_index,))
    pairing_seed, *block_seeds = seq.spawn(1 + len(chunked(n // 2, PAIR_BLOCK)))
    rng = np.random.default_rng(pairing_seed)
    order = rng.permutation(n)[: 2 * (n // 2)].reshape(-1, 2)
    first, second = ensemble.velocities[order[:, 0]], ensemble.velocities[order[:, 1]]
    majorant, accept = pair_rates(first, second, params, ensemble.mass, theta_min, vrel_floor)
    expected = float(np.mean(majorant)) * dt
    if expected > MAX_COLLISIONS_PER_STEP:
        suggested = TARGET_COLLISIONS_PER_STEP / float(np.mean(majorant))
        raise SolverError(
            f"majorant overflow: {expected:.3g} expected collisions per particle per step; use dt <= {suggested:.3g}"
        )
    candidates = rng.poisson(majorant * dt)

    blocks = chunked(len(order), PAIR_BLOCK)
    parts = ordered_map(
        lambda k: _collide_block(
            first[blocks[k]], second[blocks[k]], candidates[blocks[k]], accept[blocks[k]], params, theta_min, block_seeds[k]
        ),
        range(len(blocks)),
        jobs,
    )
    velocities = ensemble.velocities.copy()
    stats = ensemble.stats
    for block, (a, b, block_stats) in zip(blocks, parts):
        velocities[order[block, 0]] = a
        velocities[order[block, 1]] = b
        stats = stats.merge(block_stats)
    return replace(ensemble, velocities=velocities, time=ensemble.time + dt, step_index=ensemble.step_index + 1, stats=stats)


def suggest_dt(
    ensemble: ParticleEnsemble, params: KineticParams, theta_min: float = DEFAULT_THETA_MIN, vrel_floor: float = DEFAULT_VREL_FLOOR
) -> float:
    """Time step giving 0.25 expected collisions per particle per step for the current state."""
    rng = np.random.default_rng(np.random.SeedSequence(ensemble.rng_seed, spawn_key=(2 ** 31,)))
    order = rng.permutation(ensemble.n)[: 2 * (ensemble.n // 2)].reshape(-1, 2)
    majorant, _ = pair_rates(
        ensemble.velocities[order[:, 0]], ensemble.velocities[order[:, 1]], params, ensemble.mass, theta_min, vrel_floor
    )
    return TARGET_COLLISIONS_PER_STEP / float(np.mean(majorant))


def snapshot_density(ensemble: ParticleEnsemble, bins: Optional[int] = None) -> Density:
    """Smoothed histogram density of the ensemble (48 bins per axis in d=2, 24 in d=3)."""
    bins = bins or (48 if ensemble.d == 2 else 24)
    radius = float(np.max(np.abs(ensemble.velocities))) * (1.0 + 1e-9) + 1e-12
    centers, counts, width = histogram_from_samples(ensemble.velocities, bins, radius)
    return make_histogram_density(centers, counts, width, ensemble.mass)


def run(
    f0: Density,
    T: float,
    snapshots: int,
    n: int,
    params: KineticParams,
    spec: QuadratureSpec,
    theta_min: float = DEFAULT_THETA_MIN,
    vrel_floor: float = DEFAULT_VREL_FLOOR,
    dt: Optional[float] = None,
    seed: Optional[int] = None,
    holder_radius: float = 4.0,
    on_snapshot: Optional[Callable[[int, float], None]] = None,
) -> TrajectoryDiagnostics:
    """Relax f0 to time T and record diagnostics at t = k T / snapshots, k = 0..snapshots.

    Each snapshot rebuilds a smoothed density and evaluates its entropy, the
    L^p_{-q} norm and (for gamma <= 0) the Hoelder chain on B_holder_radius.
    The running time integral of the norm uses the trapezoid rule.

    Raises:
        ConfigError: If T <= 0 or snapshots < 1.
        SolverError: If the time step overflows the majorant.
    """
    if not T > 0:
        raise ConfigError("final time T must be positive")
    if snapshots < 1:
        raise ConfigError("snapshots must be at least 1")
    started = time.time()
    seed = spec.seed if seed is None else seed
    ensemble = init_ensemble(f0, n, seed)
    if dt is None:
        dt = suggest_dt(ensemble, params, theta_min, vrel_floor)
    logger.info(f"Relaxing {n} particles to T={T:g} with dt={dt:.4g}")
    pq = exponents(params)
    diagnostics = TrajectoryDiagnostics(dt=dt)

    def record(state: ParticleEnsemble) -> None:
        density = snapshot_density(state)
        diagnostics.times.append(state.time)
        diagnostics.entropy.append(macro_state(density, spec).H0)
        diagnostics.mass.append(state.mass)
        diagnostics.energy.append(state.energy)
        diagnostics.lpq_norm.append(lp_norm_estimate(density, pq.p, -pq.q, spec).value)
        if len(diagnostics.times) == 1:
            diagnostics.lpq_running_integral.append(0.0)
        else:
            width = diagnostics.times[-1] - diagnostics.times[-2]
            area = 0.5 * width * (diagnostics.lpq_norm[-1] + diagnostics.lpq_norm[-2])
            diagnostics.lpq_running_integral.append(diagnostics.lpq_running_integral[-1] + area)
        if params.gamma <= 0:
            chain = holder_chain(density, holder_radius, params, spec)
            diagnostics.holder_lhs.append(chain.lhs)
            diagnostics.holder_rhs.append(chain.rhs)
            diagnostics.holder_holds.append(chain.holds)
        else:
            diagnostics.holder_lhs.append(math.nan)
            diagnostics.holder_rhs.append(math.nan)
            diagnostics.holder_holds.append(True)

    try:
        record(ensemble)
        for k in range(1, snapshots + 1):
            target = k * T / snapshots
            steps = max(1, math.ceil((target - ensemble.time) / dt - 1e-9))
            h = (target - ensemble.time) / steps
            for _ in range(steps):
                ensemble = step(ensemble, h, params, theta_min, vrel_floor, spec.jobs)
            ensemble = replace(ensemble, time=target)
            record(ensemble)
            if on_snapshot is not None:
                on_snapshot(k, target)
    except Exception as e:
        logger.error(f"Error during relaxation run: {str(e)}")
        raise
    diagnostics.stats = ensemble.stats
    diagnostics.final = ensemble
    logger.info(
        f"Relaxation finished in {format_timespan(time.time() - started)}: "
        f"{ensemble.stats.events} collisions, H dropped by {diagnostics.entropy_drop:.4g}"
    )
    return diagnostics


def write_trajectory_csv(path: Path, diagnostics: TrajectoryDiagnostics) -> Path:
    return write_csv(path, diagnostics.rows(), TRAJECTORY_COLUMNS)


def write_checkpoint(path: Path, ensemble: ParticleEnsemble) -> None:
    """Write the ensemble velocities as CSV with columns v_1..v_d."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"v_{i + 1}" for i in range(ensemble.d)])
        for row in ensemble.velocities:
            writer.writerow([format(float(x), ".17g") for x in row])


def read_checkpoint(path: Path, mass: float = 1.0, seed: int = 0) -> ParticleEnsemble:
    """Read an ensemble written by write_checkpoint.

    Raises:
        ConfigError: If the header is not v_1..v_d or the file has no rows.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, [])
        if not header or header != [f"v_{i + 1}" for i in range(len(header))]:
            raise ConfigError(f"{path}: expected columns v_1..v_d")
        rows = [[float(x) for x in row] for row in reader if row]
    if not rows:
        raise ConfigError(f"{path}: no velocities")
    return ParticleEnsemble(velocities=np.asarray(rows), mass=mass, rng_seed=seed)

"""
Velocity densities for boltzlab.

This module defines the test densities (Maxwellians, bi-Maxwellians, heavy
tails, product perturbations and smoothed histograms), their macroscopic
quantities and their samplers. Densities are immutable; derived densities
(scaled, shifted, dilated, truncated) are new objects.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import chi2, gaussian_kde

from .errors import DensityError
from .quadrature import QuadratureSpec, box_rule, sphere_area

logger = logging.getLogger(__name__)

MASS_THRESHOLD = 1e-12
LOG_FLOOR = math.log(1e-300)

Sampler = Callable[[int, np.random.Generator], np.ndarray]


class DensityKind(str, Enum):
    """Family tag of a density."""

    MAXWELLIAN = "maxwellian"
    BI_MAXWELLIAN = "bi_maxwellian"
    HEAVY_TAIL = "heavy_tail"
    HISTOGRAM = "histogram"
    PRODUCT_PERTURBATION = "product_perturbation"


@dataclass(frozen=True)
class AnalyticMoments:
    """Closed-form mass, momentum, energy and (optionally) entropy."""

    mass: float
    momentum: Tuple[float, ...]
    energy: float
    entropy: Optional[float] = None


@dataclass(frozen=True)
class Density:
    """An evaluable nonnegative velocity density on R^d.

    The density is stored through its logarithm so that entropy-type
    integrands stay finite; `eval` exponentiates. `support_radius` and
    `tail_mass` refer to balls about `center`.
    """

    d: int
    kind: DensityKind
    params: Mapping[str, Any]
    log_eval: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    support_radius: float
    tail_mass: Callable[[float], float] = field(repr=False, compare=False)
    center: Tuple[float, ...] = ()
    sampler: Optional[Sampler] = field(default=None, repr=False, compare=False)
    analytic: Optional[AnalyticMoments] = None

    def eval(self, v: np.ndarray) -> np.ndarray:
        """Evaluate f at velocities of shape (..., d)."""
        return np.exp(self.log_eval(np.asarray(v, dtype=float)))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.eval(v)

    @property
    def has_sampler(self) -> bool:
        return self.sampler is not None

    def __post_init__(self):
        if not self.center:
            object.__setattr__(self, "center", (0.0,) * self.d)
        if len(self.center) != self.d:
            raise DensityError(f"center must have {self.d} components")

    def domain(self, spec: QuadratureSpec) -> Tuple[np.ndarray, float]:
        """Centre and radius of the truncated velocity domain."""
        return np.asarray(self.center, dtype=float), spec.radius_for(self.support_radius)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n velocities distributed as f / mass."""
        if self.sampler is None:
            raise DensityError(f"{self.kind.value} density has no sampler")
        return np.asarray(self.sampler(n, rng), dtype=float).reshape(n, self.d)

    def scaled(self, a: float) -> "Density":
        """Return a * f."""
        if a < 0:
            raise DensityError("densities can only be scaled by a >= 0")
        base = self.log_eval
        log_a = math.log(a) if a > 0 else -math.inf

        def log_eval(v):
            out = base(v) + log_a
            return out if a > 0 else np.full(np.shape(out), -np.inf)

        analytic = None
        if self.analytic is not None:
            am = self.analytic
            entropy = None
            if am.entropy is not None:
                entropy = a * am.entropy + (a * log_a * am.mass if a > 0 else 0.0)
            analytic = AnalyticMoments(
                mass=a * am.mass,
                momentum=tuple(a * p for p in am.momentum),
                energy=a * am.energy,
                entropy=entropy,
            )
        tail = self.tail_mass
        return Density(
            d=self.d,
            kind=self.kind,
            params={**self.params, "scale": a * self.params.get("scale", 1.0)},
            log_eval=log_eval,
            support_radius=self.support_radius,
            tail_mass=lambda r: a * tail(r),
            center=self.center,
            sampler=self.sampler if a > 0 else None,
            analytic=analytic,
        )

    def shifted(self, u: Sequence[float]) -> "Density":
        """Return f(. - u)."""
        u = np.asarray(u, dtype=float).reshape(self.d)
        base = self.log_eval
        analytic = None
        if self.analytic is not None:
            am = self.analytic
            p = np.asarray(am.momentum)
            analytic = AnalyticMoments(
                mass=am.mass,
                momentum=tuple(p + am.mass * u),
                energy=am.energy + 2.0 * float(p @ u) + am.mass * float(u @ u),
                entropy=am.entropy,
            )
        sampler = None
        if self.sampler is not None:
            inner = self.sampler
            sampler = lambda n, rng: inner(n, rng) + u
        return Density(
            d=self.d,
            kind=self.kind,
            params={**self.params, "shift": tuple(u)},
            log_eval=lambda v: base(np.asarray(v, dtype=float) - u),
            support_radius=self.support_radius,
            tail_mass=self.tail_mass,
            center=tuple(np.asarray(self.center) + u),
            sampler=sampler,
            analytic=analytic,
        )

    def dilated(self, lam: float) -> "Density":
        """Return f(. / lam) * lam^{-d} (mass preserving)."""
        if not lam > 0:
            raise DensityError("dilation factor must be positive")
        base = self.log_eval
        d = self.d
        log_jac = d * math.log(lam)
        analytic = None
        if self.analytic is not None:
            am = self.analytic
            analytic = AnalyticMoments(
                mass=am.mass,
                momentum=tuple(lam * p for p in am.momentum),
                energy=lam ** 2 * am.energy,
                entropy=None if am.entropy is None else am.entropy - am.mass * log_jac,
            )
        sampler = None
        if self.sampler is not None:
            inner = self.sampler
            sampler = lambda n, rng: lam * inner(n, rng)
        tail = self.tail_mass
        return Density(
            d=d,
            kind=self.kind,
            params={**self.params, "dilation": lam * self.params.get("dilation", 1.0)},
            log_eval=lambda v: base(np.asarray(v, dtype=float) / lam) - log_jac,
            support_radius=lam * self.support_radius,
            tail_mass=lambda r: tail(r / lam),
            center=tuple(lam * np.asarray(self.center)),
            sampler=sampler,
            analytic=analytic,
        )

    def truncated(self, level: float) -> "Density":
        """Return min(f, level)."""
        if not level > 0:
            raise DensityError("truncation level must be positive")
        base = self.log_eval
        log_level = math.log(level)
        sampler = None
        if self.sampler is not None:
            inner = self.sampler

            def sampler(n, rng):
                # rejection: accept x ~ f with probability min(f, level) / f
                out: List[np.ndarray] = []
                have = 0
                while have < n:
                    x = inner(max(n, 64), rng)
                    accept = rng.random(len(x)) < np.exp(np.minimum(0.0, log_level - base(x)))
                    out.append(x[accept])
                    have += int(accept.sum())
                return np.concatenate(out)[:n]

        return Density(
            d=self.d,
            kind=self.kind,
            params={**self.params, "truncation": level},
            log_eval=lambda v: np.minimum(base(v), log_level),
            support_radius=self.support_radius,
            tail_mass=self.tail_mass,
            center=self.center,
            sampler=sampler,
            analytic=None,
        )


@dataclass(frozen=True)
class MacroState:
    """Macroscopic quantities of a density."""

    m0: float
    M0: float
    E0: float
    H0: float
    gamma_moment: float
    quadrature_error: float = 0.0
    analytic: bool = False
    discrepancy: float = 0.0

    def __post_init__(self):
        if self.m0 > self.M0 or self.E0 < 0:
            raise DensityError(f"inconsistent macroscopic state {self}")


def _as_vector(x: Sequence[float], d: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size == 1 and d > 1:
        arr = np.full(d, float(arr[0]))
    if arr.shape != (d,):
        raise DensityError(f"{name} must have {d} components")
    return arr


def _maxwellian_log(mean: np.ndarray, temperature: float, mass: float, d: int):
    const = math.log(mass) - 0.5 * d * math.log(2.0 * math.pi * temperature)

    def log_eval(v):
        v = np.asarray(v, dtype=float)
        return const - np.sum((v - mean) ** 2, axis=-1) / (2.0 * temperature)

    return log_eval


def _gaussian_tail(mass: float, center_norm: float, temperature: float, d: int):
    def tail(r):
        if r <= center_norm:
            return mass
        return float(mass * chi2.sf((r - center_norm) ** 2 / temperature, d))

    return tail


def make_maxwellian(d: int, mean: Sequence[float] = 0.0, temperature: float = 1.0, mass: float = 1.0) -> Density:
    """Maxwellian mass * (2 pi T)^{-d/2} exp(-|v - mean|^2 / (2T)).

    Args:
        d: Dimension.
        mean: Bulk velocity (scalar broadcast to all components).
        temperature: Temperature T > 0.
        mass: Total mass > 0.

    Returns:
        Density with sampler and closed-form moments.
    """
    if not temperature > 0:
        raise DensityError("temperature must be positive")
    if not mass > 0:
        raise DensityError("mass must be positive")
    mean = _as_vector(mean, d, "mean")
    entropy = mass * math.log(mass) - 0.5 * mass * d * math.log(2.0 * math.pi * math.e * temperature)
    sd = math.sqrt(temperature)
    return Density(
        d=d,
        kind=DensityKind.MAXWELLIAN,
        params={"mean": tuple(mean), "temperature": temperature, "mass": mass},
        log_eval=_maxwellian_log(mean, temperature, mass, d),
        support_radius=8.0 * sd,
        tail_mass=_gaussian_tail(mass, 0.0, temperature, d),
        center=tuple(mean),
        sampler=lambda n, rng: rng.normal(mean, sd, size=(n, d)),
        analytic=AnalyticMoments(
            mass=mass,
            momentum=tuple(mass * mean),
            energy=mass * (d * temperature + float(mean @ mean)),
            entropy=entropy,
        ),
    )


def make_bi_maxwellian(
    d: int,
    c1: float,
    mean1: Sequence[float],
    T1: float,
    c2: float,
    mean2: Sequence[float],
    T2: float,
) -> Density:
    """Weighted sum c1 M(mean1, T1) + c2 M(mean2, T2) of unit-mass Maxwellians."""
    if c1 < 0 or c2 < 0 or not c1 + c2 > 0:
        raise DensityError("bi-Maxwellian weights must be nonnegative with positive sum")
    if not (T1 > 0 and T2 > 0):
        raise DensityError("bi-Maxwellian temperatures must be positive")
    mean1 = _as_vector(mean1, d, "mean1")
    mean2 = _as_vector(mean2, d, "mean2")
    parts = [(c, m, t) for c, m, t in ((c1, mean1, T1), (c2, mean2, T2)) if c > 0]
    logs = [_maxwellian_log(m, t, c, d) for c, m, t in parts]
    bulk = sum(c * m for c, m, _ in parts) / sum(c for c, _, _ in parts)
    offsets = [float(np.linalg.norm(m - bulk)) for _, m, _ in parts]
    tails = [_gaussian_tail(c, off, t, d) for (c, _, t), off in zip(parts, offsets)]
    weights = np.array([c for c, _, _ in parts]) / sum(c for c, _, _ in parts)

    def log_eval(v):
        if len(logs) == 1:
            return logs[0](v)
        return logsumexp(np.stack([fn(v) for fn in logs]), axis=0)

    def sampler(n, rng):
        which = rng.choice(len(parts), size=n, p=weights)
        out = np.empty((n, d))
        for i, (_, m, t) in enumerate(parts):
            sel = which == i
            out[sel] = rng.normal(m, math.sqrt(t), size=(int(sel.sum()), d))
        return out

    mass = c1 + c2
    entropy = None
    if len(parts) == 1:
        c, m, t = parts[0]
        entropy = c * math.log(c) - 0.5 * c * d * math.log(2.0 * math.pi * math.e * t)
    return Density(
        d=d,
        kind=DensityKind.BI_MAXWELLIAN,
        params={"c1": c1, "mean1": tuple(mean1), "T1": T1, "c2": c2, "mean2": tuple(mean2), "T2": T2},
        log_eval=log_eval,
        support_radius=max(off + 8.0 * math.sqrt(t) for (_, _, t), off in zip(parts, offsets)),
        tail_mass=lambda r: sum(tail(r) for tail in tails),
        center=tuple(bulk),
        sampler=sampler,
        analytic=AnalyticMoments(
            mass=mass,
            momentum=tuple(c1 * mean1 + c2 * mean2),
            energy=sum(c * (d * t + float(m @ m)) for c, m, t in parts),
            entropy=entropy,
        ),
    )


def make_heavy_tail(d: int, eps: float = 1.0, mass: float = 1.0) -> Density:
    """Polynomially decaying density c <v>^{-d-2-eps}, eps in (0, 1]."""
    if not 0 < eps <= 1:
        raise DensityError("heavy-tail exponent eps must lie in (0, 1]")
    if not mass > 0:
        raise DensityError("mass must be positive")
    a = d + 2.0 + eps
    # int <v>^{-a} dv = pi^{d/2} Gamma((a-d)/2) / Gamma(a/2)
    log_norm = 0.5 * d * math.log(math.pi) + gammaln(0.5 * (a - d)) - gammaln(0.5 * a)
    log_c = math.log(mass) - log_norm
    log_norm_2 = 0.5 * d * math.log(math.pi) + gammaln(0.5 * (a - 2.0 - d)) - gammaln(0.5 * (a - 2.0))
    energy = mass * (math.exp(log_norm_2 - log_norm) - 1.0)
    area = sphere_area(d)
    c = math.exp(log_c)

    def tail(r):
        if r <= 1.0:
            return mass
        return min(mass, c * area * r ** (-2.0 - eps) / (2.0 + eps))

    def sampler(n, rng):
        z = rng.standard_normal((n, d))
        return z / np.sqrt(rng.chisquare(2.0 + eps, size=(n, 1)))

    radius = max(8.0, (c * area / ((2.0 + eps) * 1e-2 * mass)) ** (1.0 / (2.0 + eps)))
    return Density(
        d=d,
        kind=DensityKind.HEAVY_TAIL,
        params={"eps": eps, "mass": mass},
        log_eval=lambda v: log_c - 0.5 * a * np.log1p(np.sum(np.asarray(v, dtype=float) ** 2, axis=-1)),
        support_radius=radius,
        tail_mass=tail,
        sampler=sampler,
        analytic=AnalyticMoments(mass=mass, momentum=(0.0,) * d, energy=energy),
    )


def make_product_perturbation(
    d: int, temperature: float = 1.0, alpha: float = 0.5, k: float = 1.0, mass: float = 1.0
) -> Density:
    """Perturbed Maxwellian proportional to M_T(v) (1 + alpha prod_i cos(k v_i))."""
    if not abs(alpha) < 1:
        raise DensityError("perturbation amplitude must satisfy |alpha| < 1")
    if not (temperature > 0 and mass > 0):
        raise DensityError("temperature and mass must be positive")
    damp = math.exp(-0.5 * d * k * k * temperature)
    z = 1.0 + alpha * damp
    base = _maxwellian_log(np.zeros(d), temperature, mass / z, d)
    energy = (mass / z) * (d * temperature + alpha * d * (temperature - k * k * temperature ** 2) * damp)
    sd = math.sqrt(temperature)

    def log_eval(v):
        v = np.asarray(v, dtype=float)
        return base(v) + np.log1p(alpha * np.prod(np.cos(k * v), axis=-1))

    def sampler(n, rng):
        out: List[np.ndarray] = []
        have = 0
        while have < n:
            x = rng.normal(0.0, sd, size=(max(n, 64), d))
            accept = rng.random(len(x)) * (1.0 + abs(alpha)) < 1.0 + alpha * np.prod(np.cos(k * x), axis=-1)
            out.append(x[accept])
            have += int(accept.sum())
        return np.concatenate(out)[:n]

    gauss_tail = _gaussian_tail(mass * (1.0 + abs(alpha)) / z, 0.0, temperature, d)
    return Density(
        d=d,
        kind=DensityKind.PRODUCT_PERTURBATION,
        params={"temperature": temperature, "alpha": alpha, "k": k, "mass": mass},
        log_eval=log_eval,
        support_radius=8.0 * sd,
        tail_mass=lambda r: min(mass, gauss_tail(r)),
        sampler=sampler,
        analytic=AnalyticMoments(mass=mass, momentum=(0.0,) * d, energy=energy),
    )


def make_histogram_density(
    centers: np.ndarray, counts: np.ndarray, bin_width: float, mass: float = 1.0
) -> Density:
    """Gaussian-smoothed histogram density.

    The smoothing is a count-weighted Gaussian kernel density estimate on the
    bin centres with bandwidth factor N^{-1/(d+4)}, N the total count.

    Args:
        centers: Bin centres, shape (B, d).
        counts: Bin counts, shape (B,).
        bin_width: Bin width (recorded, and used as a lower bound for the smoothing).
        mass: Mass represented by the histogram.
    """
    centers = np.asarray(centers, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if centers.ndim != 2 or len(centers) != len(counts):
        raise DensityError("histogram centres and counts do not match")
    keep = counts > 0
    centers, counts = centers[keep], counts[keep]
    d = centers.shape[1]
    if len(counts) <= d:
        raise DensityError("histogram needs more occupied bins than dimensions")
    total = float(counts.sum())
    factor = total ** (-1.0 / (d + 4))
    kde = gaussian_kde(centers.T, bw_method=factor, weights=counts)
    log_mass = math.log(mass)
    spread = math.sqrt(float(np.max(np.linalg.eigvalsh(kde.covariance))))
    spread = max(spread, bin_width)
    bulk = counts @ centers / total
    reach = float(np.max(np.linalg.norm(centers - bulk, axis=-1)))

    def log_eval(v):
        v = np.asarray(v, dtype=float)
        shape = v.shape[:-1]
        flat = v.reshape(-1, d)
        out = np.empty(len(flat))
        for start in range(0, len(flat), 8192):
            out[start:start + 8192] = kde.logpdf(flat[start:start + 8192].T)
        return out.reshape(shape) + log_mass

    def tail(r):
        if r <= reach:
            return mass
        return float(mass * chi2.sf(((r - reach) / spread) ** 2, d))

    return Density(
        d=d,
        kind=DensityKind.HISTOGRAM,
        params={"bins": int(len(counts)), "count": total, "bin_width": bin_width, "mass": mass},
        log_eval=log_eval,
        support_radius=reach + 8.0 * spread,
        tail_mass=tail,
        center=tuple(bulk),
        sampler=lambda n, rng: kde.resample(n, seed=rng).T,
        analytic=None,
    )


def histogram_from_samples(
    samples: np.ndarray, bins: int, radius: float
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Bin velocity samples on the cube [-radius, radius]^d.

    Returns:
        Bin centres (B, d), counts (B,) and the bin width.
    """
    samples = np.asarray(samples, dtype=float)
    d = samples.shape[1]
    counts, edges = np.histogramdd(samples, bins=bins, range=[(-radius, radius)] * d)
    dropped = len(samples) - int(counts.sum())
    if dropped:
        logger.warning(f"{dropped} samples fell outside the histogram range {radius}")
    mids = [0.5 * (e[1:] + e[:-1]) for e in edges]
    grids = np.meshgrid(*mids, indexing="ij")
    centers = np.stack([g.ravel() for g in grids], axis=-1)
    return centers, counts.ravel(), float(2.0 * radius / bins)


def write_histogram_csv(path: Path, centers: np.ndarray, counts: np.ndarray) -> None:
    """Write a histogram with columns bin_center_1..bin_center_d, count."""
    d = centers.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"bin_center_{i + 1}" for i in range(d)] + ["count"])
        for c, n in zip(centers, counts):
            writer.writerow([format(float(x), ".17g") for x in c] + [format(float(n), ".17g")])


def read_histogram_csv(path: Path) -> Tuple[np.ndarray, np.ndarray, float]:
    """Read a histogram CSV; the bin width is inferred from the centre spacing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "count" or not all(h.startswith("bin_center_") for h in header[:-1]):
            raise DensityError(f"{path}: expected columns bin_center_1..bin_center_d, count")
        rows = [[float(x) for x in row] for row in reader if row]
    if not rows:
        raise DensityError(f"{path}: empty histogram")
    data = np.asarray(rows)
    centers, counts = data[:, :-1], data[:, -1]
    spacing = [np.diff(np.unique(centers[:, i])) for i in range(centers.shape[1])]
    widths = [float(s.min()) for s in spacing if len(s)]
    return centers, counts, min(widths) if widths else 1.0


def macro_state(f: Density, spec: QuadratureSpec, params: Optional[Any] = None) -> MacroState:
    """Mass, energy, entropy and <v>^{gamma_+} moment of f.

    Integrals use a tensor Gauss-Legendre rule on the truncation box; the
    error is the discrepancy against the coarse companion rule plus the
    tail bound. When closed forms exist they are returned and the quadrature
    discrepancy is recorded.

    Args:
        f: Density.
        spec: Quadrature settings.
        params: Optional KineticParams; its gamma selects the moment weight.
    """
    gamma_plus = max(0.0, float(params.gamma)) if params is not None else 0.0
    center, radius = f.domain(spec)

    def integrate(s: QuadratureSpec) -> np.ndarray:
        points, weights = box_rule(radius, s.grid_nodes, f.d, center)
        logf = f.log_eval(points)
        fv = np.exp(logf)
        ent = np.where(logf > LOG_FLOOR, fv * np.where(np.isfinite(logf), logf, 0.0), 0.0)
        sq = np.sum(points ** 2, axis=-1)
        return np.array([
            weights @ fv,
            weights @ (fv * sq),
            weights @ ent,
            weights @ (fv * (1.0 + sq) ** (0.5 * gamma_plus)),
        ])

    fine = integrate(spec)
    coarse = integrate(spec.coarse())
    mass = float(fine[0])
    if not mass > MASS_THRESHOLD:
        raise DensityError(f"mass below threshold ({mass:.3e} <= {MASS_THRESHOLD:.0e})")
    tail = f.tail_mass(radius)
    error = float(np.max(np.abs(fine - coarse))) + tail
    if f.analytic is not None:
        am = f.analytic
        discrepancy = max(abs(am.mass - fine[0]), abs(am.energy - fine[1]))
        entropy = float(fine[2]) if am.entropy is None else am.entropy
        if am.entropy is not None:
            discrepancy = max(discrepancy, abs(am.entropy - fine[2]))
        if tail > spec.tail_tol * am.mass:
            logger.warning(f"{f.kind.value}: truncation tail {tail:.2e} at radius {radius:g}; using closed forms")
        return MacroState(
            m0=am.mass,
            M0=am.mass,
            E0=am.energy,
            H0=entropy,
            gamma_moment=float(fine[3]),
            quadrature_error=error,
            analytic=True,
            discrepancy=float(discrepancy),
        )
    if tail > spec.tail_tol * mass:
        raise DensityError(
            f"truncation tail {tail:.3e} exceeds tolerance {spec.tail_tol:.1e} at radius {radius:g}"
        )
    return MacroState(
        m0=mass,
        M0=mass,
        E0=float(fine[1]),
        H0=float(fine[2]),
        gamma_moment=float(fine[3]),
        quadrature_error=error,
    )


def maxwellian_family(d: int) -> List[Tuple[str, Density]]:
    """Five Maxwellians with varied bulk velocity and temperature."""
    members = [
        (np.zeros(d), 1.0),
        (np.eye(d)[0] * 0.5, 1.0),
        (np.zeros(d), 0.5),
        (np.eye(d)[0] - np.eye(d)[1], 1.5),
        (np.eye(d)[1] * -0.75, 0.8),
    ]
    return [(f"maxwellian-{i}", make_maxwellian(d, m, t)) for i, (m, t) in enumerate(members)]


def bi_maxwellian_family(
    d: int, separations: Sequence[float] = (1.0, 2.0, 4.0, 8.0), temperature: float = 1.0
) -> List[Tuple[str, Density]]:
    """Symmetric equal-weight bi-Maxwellians with means +-sep/2 along the first axis."""
    e1 = np.eye(d)[0]
    return [
        (
            f"bi_maxwellian-sep{sep:g}",
            make_bi_maxwellian(d, 0.5, 0.5 * sep * e1, temperature, 0.5, -0.5 * sep * e1, temperature),
        )
        for sep in separations
    ]


def heavy_tail_family(d: int, eps_values: Sequence[float] = (1.0, 0.75, 0.5)) -> List[Tuple[str, Density]]:
    return [(f"heavy_tail-eps{eps:g}", make_heavy_tail(d, eps)) for eps in eps_values]


def perturbation_family(d: int, alphas: Sequence[float] = (0.3, 0.6, -0.3, -0.6)) -> List[Tuple[str, Density]]:
    return [
        (f"product_perturbation-alpha{alpha:g}", make_product_perturbation(d, 1.0, alpha, 1.5))
        for alpha in alphas
    ]


def standard_family(d: int) -> List[Tuple[str, Density]]:
    """The 20-member sweep family: 5 Maxwellians, 8 bi-Maxwellians, 3 heavy tails, 4 perturbations."""
    e1 = np.eye(d)[0]
    asymmetric = [
        (
            f"bi_maxwellian-asym{i}",
            make_bi_maxwellian(d, c, 0.5 * sep * e1, t1, 1.0 - c, -0.5 * sep * e1, t2),
        )
        for i, (c, sep, t1, t2) in enumerate(
            [(0.3, 2.0, 1.0, 0.5), (0.7, 3.0, 0.5, 1.0), (0.5, 1.5, 2.0, 0.5), (0.2, 4.0, 1.0, 1.0)]
        )
    ]
    return (
        maxwellian_family(d)
        + bi_maxwellian_family(d)
        + asymmetric
        + heavy_tail_family(d)
        + perturbation_family(d)
    )


FAMILIES: Dict[str, Callable[[int], List[Tuple[str, Density]]]] = {
    "maxwellian": maxwellian_family,
    "bi_maxwellian": bi_maxwellian_family,
    "heavy_tail": heavy_tail_family,
    "product_perturbation": perturbation_family,
    "standard": standard_family,
}

"""
The kernel K_f of the singular part of the collision operator.

K_f(v, v') = 2^{d-1} / |v' - v| * int_{w perp (v' - v)} f(base + w) Phi(r) b(Theta) r^{2-d} dw
with r^2 = |v' - v|^2 + |w|^2 and cos(Theta/2) = |w| / r. The representative b
vanishes beyond Theta = pi/2, so only |w| >= |v' - v| contributes; the plane
radius is integrated in the logarithmic variable y = log(|w| / |v' - v|).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .distributions import Density
from .errors import ConfigError, GeometryError, QuadratureError
from .kernel import KineticParams, angular_b, kinetic_phi, kinetic_psi
from .quadrature import (
    QuadratureSpec,
    chunked,
    gauss_rule,
    ordered_map,
    orthonormal_complement,
    sphere_area,
    subsphere_rule,
)

logger = logging.getLogger(__name__)

VARIANTS = ("full", "psi")
OFFSET_CONVENTIONS = ("v_prime_plus_w", "v_plus_w")
_BLOCK_NODES = 1 << 21


@dataclass(frozen=True)
class KernelValue:
    """Kernel value(s) with a two-resolution error estimate."""

    value: Any
    abs_error_estimate: Any


@dataclass(frozen=True)
class LowerBoundCheck:
    """K^psi_f against the plane-integral lower bound; ratio is nan when vacuous."""

    ratio: Any
    numerator: Any
    denominator: Any
    vacuous: Any


@dataclass(frozen=True)
class ConeReport:
    """Empirical cone of nondegeneracy at one velocity."""

    v: Tuple[float, ...]
    lambda_hat: float
    measure_hat: float
    max_alignment: float
    directions: List[Tuple[float, ...]] = field(default_factory=list)
    radii: Tuple[float, ...] = ()
    lambda_probe: float = 0.0
    n_directions: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v": list(self.v),
            "lambda_hat": self.lambda_hat,
            "measure_hat": self.measure_hat,
            "max_alignment": self.max_alignment,
            "directions": [list(d) for d in self.directions],
            "radii": list(self.radii),
            "lambda_probe": self.lambda_probe,
            "n_directions": self.n_directions,
        }


def _pairs(v, v_prime, d: int) -> Tuple[np.ndarray, np.ndarray, bool]:
    v = np.asarray(v, dtype=float)
    v_prime = np.asarray(v_prime, dtype=float)
    single = v.ndim == 1 and v_prime.ndim == 1
    v, v_prime = np.broadcast_arrays(np.atleast_2d(v), np.atleast_2d(v_prime))
    if v.shape[-1] != d:
        raise GeometryError(f"velocities must have {d} components")
    return np.ascontiguousarray(v), np.ascontiguousarray(v_prime), single


@dataclass(frozen=True)
class KernelEvaluator:
    """Evaluates K_f (variant "full") or K^psi_f (variant "psi") at velocity pairs.

    offset_convention selects the plane offset: "v_prime_plus_w" integrates
    f(v' + w) = f(v*), "v_plus_w" integrates f(v + w) = f(v*').
    """

    density: Density
    params: KineticParams
    spec: QuadratureSpec
    variant: str = "psi"
    offset_convention: str = "v_prime_plus_w"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"kernel variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.offset_convention not in OFFSET_CONVENTIONS:
            raise ConfigError(f"offset convention must be one of {OFFSET_CONVENTIONS}, got {self.offset_convention!r}")
        if self.density.d != self.params.d:
            raise ConfigError("density and kinetic parameters disagree on the dimension")
        p = self.params
        if p.gamma + 2.0 * p.s + 1.0 <= -(p.d - 1):
            raise QuadratureError("plane integrand is not integrable at |w| = 0")

    def with_variant(self, variant: str) -> "KernelEvaluator":
        return replace(self, variant=variant)

    def _factor(self, r: np.ndarray) -> np.ndarray:
        if self.variant == "psi":
            return kinetic_psi(r, self.params)
        return kinetic_phi(r, self.params)

    def evaluate(self, v, v_prime, spec: Optional[QuadratureSpec] = None) -> np.ndarray:
        """Kernel values at pairs (v, v'), arrays of shape (P, d) or (d,).

        Raises:
            GeometryError: If any pair has v = v'.
        """
        spec = spec or self.spec
        v, v_prime, single = _pairs(v, v_prime, self.params.d)
        if np.any(np.all(v == v_prime, axis=-1)):
            raise GeometryError("kernel undefined on the diagonal v = v'")
        per_pair = spec.panel_order * spec.direction_nodes * 128
        blocks = chunked(len(v), max(1, _BLOCK_NODES // per_pair))
        parts = ordered_map(lambda sl: self._evaluate_block(v[sl], v_prime[sl], spec), blocks, spec.jobs)
        values = np.concatenate(parts)
        return float(values[0]) if single else values

    def _evaluate_block(self, v: np.ndarray, v_prime: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
        d = self.params.d
        h = v_prime - v
        hn = np.linalg.norm(h, axis=-1)
        base = v_prime if self.offset_convention == "v_prime_plus_w" else v
        center, radius = self.density.domain(spec)
        w_max = radius + np.linalg.norm(base - center, axis=-1)
        span = np.log(np.maximum(w_max / hn, 1.0))
        n_panels = np.maximum(1, np.ceil(span / math.log(spec.grading_ratio))).astype(int)
        width = span / n_panels

        x, wx = gauss_rule(0.0, 1.0, spec.panel_order)
        k = np.arange(int(n_panels.max()))
        active = k[None, :, None] < n_panels[:, None, None]
        y = (k[None, :, None] + x[None, None, :]) * width[:, None, None]
        y = np.where(active, y, 0.0).reshape(len(v), -1)
        wy = np.where(active, wx[None, None, :] * width[:, None, None], 0.0).reshape(len(v), -1)

        coeffs, wb = subsphere_rule(d, spec.direction_nodes)
        basis = orthonormal_complement(h / hn[:, None])
        beta = np.einsum("bk,pkd->pbd", coeffs, basis)

        t = np.exp(y)
        points = base[:, None, None, :] + (t * hn[:, None])[:, :, None, None] * beta[:, None, :, :]
        fvals = self.density.eval(points)

        theta = 2.0 * np.arctan(1.0 / t)
        r = hn[:, None] * np.sqrt(1.0 + t * t)
        jac = (t / np.sqrt(1.0 + t * t)) ** (d - 2) * t * wy
        radial = self._factor(r) * angular_b(theta, self.params) * jac
        return 2.0 ** (d - 1) * np.einsum("pn,pnb,b->p", radial, fvals, wb)


def kf_eval(evaluator: KernelEvaluator, v, v_prime) -> KernelValue:
    """K_f (or K^psi_f) at one or many pairs, with a two-resolution error estimate."""
    fine = evaluator.evaluate(v, v_prime)
    coarse = evaluator.evaluate(v, v_prime, evaluator.spec.coarse())
    err = np.abs(np.asarray(fine) - np.asarray(coarse))
    return KernelValue(value=fine, abs_error_estimate=float(err) if np.ndim(fine) == 0 else err)


def _lower_bound_integral(evaluator: KernelEvaluator, v: np.ndarray, v_prime: np.ndarray) -> np.ndarray:
    params, spec, f = evaluator.params, evaluator.spec, evaluator.density
    d, gamma, s = params.d, params.gamma, params.s
    h = v_prime - v
    hn = np.linalg.norm(h, axis=-1)
    center, radius = f.domain(spec)
    w_max = radius + np.linalg.norm(v_prime - center, axis=-1)
    w_min = spec.w_min_factor * w_max

    small_power = 2.0 * s + 1.0 if gamma < 0 else gamma + 2.0 * s + 1.0
    if small_power + d - 1.0 <= 0:
        raise QuadratureError("lower-bound weight is not integrable at |w| = 0")

    span = -math.log(spec.w_min_factor)
    n_panels = max(1, int(math.ceil(span / math.log(spec.grading_ratio))))
    x, wx = gauss_rule(0.0, span / n_panels, spec.panel_order)
    y = (np.arange(n_panels)[:, None] * (span / n_panels) + x[None, :]).ravel()
    wy = np.tile(wx, n_panels)
    rho = w_min[:, None] * np.exp(y)[None, :]

    if gamma < 0:
        weight = np.minimum(rho ** (gamma + 2.0 * s + 1.0), rho ** (2.0 * s + 1.0))
    else:
        weight = rho ** (gamma + 2.0 * s + 1.0)

    coeffs, wb = subsphere_rule(d, evaluator.spec.direction_nodes)
    basis = orthonormal_complement(h / hn[:, None])
    beta = np.einsum("bk,pkd->pbd", coeffs, basis)
    points = v_prime[:, None, None, :] + rho[:, :, None, None] * beta[:, None, :, :]
    fvals = f.eval(points)
    radial = weight * rho ** (d - 1) * wy[None, :]
    body = np.einsum("pn,pnb,b->p", radial, fvals, wb)
    inner = f.eval(v_prime) * float(wb.sum()) * w_min ** (small_power + d - 1.0) / (small_power + d - 1.0)
    return hn ** (-d - 2.0 * s) * (body + inner)


def kf_lower_bound_check(evaluator: KernelEvaluator, v, v_prime) -> LowerBoundCheck:
    """Ratio of K^psi_f(v, v') to |v - v'|^{-d-2s} int f(v' + w) m(|w|) dw.

    m(r) = min(r^{gamma+2s+1}, r^{2s+1}) for gamma < 0 and r^{gamma+2s+1} otherwise.
    Pairs where the lower bound vanishes are flagged vacuous with ratio nan.
    """
    v_arr, vp_arr, single = _pairs(v, v_prime, evaluator.params.d)
    numerator = np.atleast_1d(evaluator.with_variant("psi").evaluate(v_arr, vp_arr))
    blocks = chunked(len(v_arr), max(1, _BLOCK_NODES // (evaluator.spec.direction_nodes * 1024)))
    denominator = np.concatenate(
        ordered_map(lambda sl: _lower_bound_integral(evaluator, v_arr[sl], vp_arr[sl]), blocks, evaluator.spec.jobs)
    )
    vacuous = ~(denominator > 1e-300)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(vacuous, np.nan, numerator / np.where(vacuous, 1.0, denominator))
    if single:
        return LowerBoundCheck(float(ratio[0]), float(numerator[0]), float(denominator[0]), bool(vacuous[0]))
    return LowerBoundCheck(ratio, numerator, denominator, vacuous)


def cone_directions(d: int, n_dirs: int) -> np.ndarray:
    """n_dirs unit vectors closed under negation; the first half are the representatives."""
    half = n_dirs // 2
    if d == 2:
        alpha = math.pi * (np.arange(half) + 0.5) / half
        reps = np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)
    elif d == 3:
        # Fibonacci points on the upper hemisphere
        i = np.arange(half) + 0.5
        z = i / half
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        rr = np.sqrt(1.0 - z * z)
        reps = np.stack([rr * np.cos(phi), rr * np.sin(phi), z], axis=-1)
    else:
        raise GeometryError(f"unsupported dimension {d}")
    return np.concatenate([reps, -reps])


def cone_estimate(
    evaluator: KernelEvaluator,
    v,
    n_dirs: int = 64,
    radii: Sequence[float] = (0.25, 0.5, 1.0, 2.0),
    peak_fraction: float = 0.5,
) -> ConeReport:
    """Estimate the cone of directions where K^psi_f(v, v + t sigma) >= lambda <v>^{1+2s+gamma} t^{-d-2s}.

    Each direction is probed jointly with its antipode, so the accepted set
    is symmetric. lambda_probe is the largest power of two not exceeding
    peak_fraction times the best paired constant.

    Args:
        evaluator: Kernel evaluator (the psi variant is used).
        v: Base velocity.
        n_dirs: Number of probed directions (even, >= 64).
        radii: Probed distances |v' - v|.
        peak_fraction: Fraction of the peak constant used to set lambda_probe.

    Returns:
        ConeReport; an empty cone has measure_hat = 0.
    """
    params = evaluator.params
    d = params.d
    if n_dirs < 64 or n_dirs % 2:
        raise ConfigError("cone_estimate needs an even number of directions >= 64")
    radii = tuple(float(t) for t in radii)
    if not radii or min(radii) <= 0:
        raise ConfigError("cone radii must be positive")
    v = np.asarray(v, dtype=float).reshape(d)
    dirs = cone_directions(d, n_dirs)
    half = n_dirs // 2
    weight = (1.0 + v @ v) ** (0.5 * (1.0 + 2.0 * params.s + params.gamma))

    t = np.asarray(radii)
    targets = v[None, None, :] + t[None, :, None] * dirs[:, None, :]
    values = evaluator.with_variant("psi").evaluate(np.broadcast_to(v, targets.reshape(-1, d).shape), targets.reshape(-1, d))
    values = np.asarray(values).reshape(n_dirs, len(t))
    constants = np.min(values * t[None, :] ** (d + 2.0 * params.s), axis=1) / weight
    paired = np.minimum(constants[:half], constants[half:])
    peak = float(paired.max())

    if not peak > 0:
        logger.info(f"Empty cone at v={tuple(v)}")
        return ConeReport(tuple(v), 0.0, 0.0, 0.0, [], radii, 0.0, n_dirs)

    probe = 2.0 ** math.floor(math.log2(peak_fraction * peak))
    accepted = paired >= probe
    chosen = np.concatenate([dirs[:half][accepted], dirs[half:][accepted]])
    measure = 2.0 * int(accepted.sum()) / n_dirs * sphere_area(d)
    alignment = float(np.max(np.abs(chosen @ v))) if len(chosen) else 0.0
    logger.info(f"Cone at |v|={np.linalg.norm(v):g}: measure {measure:.4g}, lambda {probe:.3g}")
    return ConeReport(
        v=tuple(float(x) for x in v),
        lambda_hat=float(probe),
        measure_hat=float(measure),
        max_alignment=alignment,
        directions=[tuple(float(x) for x in s) for s in chosen],
        radii=radii,
        lambda_probe=float(probe),
        n_directions=n_dirs,
    )

"""
Collision kernel B = Phi * b for boltzlab.

Angles handed to `angular_b` are deviation angles, the angle between the
post- and pre-collisional relative velocities: cos(Theta) = sigma . (v - v*) / |v - v*|.
Grazing collisions (Theta -> 0) leave the velocities unchanged.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import integrate

from .errors import GeometryError, KineticParamsError, KineticSingularityError, QuadratureError
from .quadrature import gauss_rule, sphere_area

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
GAMMA_ENDPOINT_OFFSET = 1e-2


@dataclass(frozen=True)
class KineticParams:
    """Dimension, exponents and constants of the kinetic and angular factors."""

    d: int
    gamma: float
    s: float
    c_phi: float = 1.0
    c_b: float = 1.0

    def __post_init__(self):
        if self.d not in (2, 3):
            raise KineticParamsError(f"dimension d must be 2 or 3, got {self.d}")
        if not -self.d < self.gamma <= 2:
            raise KineticParamsError(f"gamma must lie in (-{self.d}, 2], got {self.gamma}")
        if not 0 < self.s < 1:
            raise KineticParamsError(f"s must lie in (0, 1), got {self.s}")
        if not self.c_phi >= 1:
            raise KineticParamsError(f"c_phi must be >= 1, got {self.c_phi}")
        if not self.c_b > 0:
            raise KineticParamsError(f"c_b must be positive, got {self.c_b}")

    @property
    def soft(self) -> bool:
        return self.gamma < 0

    def to_dict(self):
        return {"d": self.d, "gamma": self.gamma, "s": self.s, "c_phi": self.c_phi, "c_b": self.c_b}


def admissible_gamma(d: int, gamma: float) -> float:
    """Move the excluded endpoint gamma = -d to -d + GAMMA_ENDPOINT_OFFSET.

    Every other value is returned unchanged and left to KineticParams to validate.
    """
    if d in (2, 3) and gamma == -d:
        nudged = -d + GAMMA_ENDPOINT_OFFSET
        logger.warning(f"gamma = -{d} lies outside (-{d}, 2]; running at gamma = {nudged:g} instead")
        return nudged
    return gamma


@dataclass(frozen=True)
class ExponentPair:
    """Integrability exponent p and weight exponent q."""

    p: float
    q: float


@dataclass(frozen=True)
class CollisionGeometry:
    """Pre- and post-collisional velocities of one binary collision."""

    v: np.ndarray
    v_star: np.ndarray
    sigma: np.ndarray
    v_prime: np.ndarray
    v_star_prime: np.ndarray
    theta: float
    deviation: float
    r: float
    w: np.ndarray


@dataclass(frozen=True)
class CancellationConstant:
    """Value of C_b with its quadrature error bound."""

    value: float
    abs_error: float
    method: str

    def __float__(self) -> float:
        return self.value


def angular_b(theta: ArrayLike, params: KineticParams) -> ArrayLike:
    """Representative angular factor.

    Returns c_b Theta^{-1-2s} sin(Theta)^{-(d-2)} on (0, pi/2] and 0 on (pi/2, pi].

    Raises:
        KineticParamsError: If an angle lies outside (0, pi].
    """
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(theta_arr <= 0) or np.any(theta_arr > math.pi):
        raise KineticParamsError("deviation angle must lie in (0, pi]; Theta = 0 is singular")
    inside = theta_arr <= 0.5 * math.pi
    safe = np.where(inside, theta_arr, 1.0)
    value = params.c_b * safe ** (-1.0 - 2.0 * params.s) * np.sin(safe) ** (2.0 - params.d)
    value = np.where(inside, value, 0.0)
    return float(value) if np.ndim(theta) == 0 else value


def kinetic_phi(rho: ArrayLike, params: KineticParams) -> ArrayLike:
    """Kinetic factor c_phi * rho^gamma."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0):
        raise KineticParamsError("relative speed must be nonnegative")
    if params.gamma < 0 and np.any(rho_arr == 0):
        raise KineticSingularityError("kinetic singularity: Phi(0) is infinite for gamma < 0")
    with np.errstate(divide="ignore"):
        value = params.c_phi * np.power(rho_arr, params.gamma)
    return float(value) if np.ndim(rho) == 0 else value


def kinetic_psi(rho: ArrayLike, params: KineticParams) -> ArrayLike:
    """Bounded minorant of Phi: min(Phi, 2 c_phi) for gamma < 0, Phi otherwise."""
    rho_arr = np.asarray(rho, dtype=float)
    if params.gamma >= 0:
        return kinetic_phi(rho, params)
    if np.any(rho_arr < 0):
        raise KineticParamsError("relative speed must be nonnegative")
    with np.errstate(divide="ignore"):
        value = np.minimum(params.c_phi * np.power(rho_arr, params.gamma), 2.0 * params.c_phi)
    return float(value) if np.ndim(rho) == 0 else value


def exponents(params: KineticParams) -> ExponentPair:
    """p = d / (d - 2s) and q = 2s/d - gamma - 2s."""
    d, s = params.d, params.s
    return ExponentPair(p=d / (d - 2.0 * s), q=2.0 * s / d - params.gamma - 2.0 * s)


def _cancellation_profile(theta: np.ndarray, a: float) -> np.ndarray:
    # (cos(theta/2)^{-a} - 1) / theta^2, with cos(theta/2) = 1 - 2 sin^2(theta/4)
    theta = np.asarray(theta, dtype=float)
    safe = np.where(theta > 0, theta, 1.0)
    value = np.expm1(-a * np.log1p(-2.0 * np.sin(0.25 * safe) ** 2)) / safe ** 2
    return np.where(theta > 0, value, a / 8.0)


def _graded_cancellation(a: float, s: float, order: int, panels: int = 48) -> float:
    hi = 0.5 * math.pi
    edges = hi * 2.0 ** -np.arange(panels + 1, dtype=float)
    total = 0.0
    for k in range(panels):
        x, w = gauss_rule(edges[k + 1], edges[k], order)
        total += float(w @ (x ** (1.0 - 2.0 * s) * _cancellation_profile(x, a)))
    innermost = edges[-1]
    total += (a / 8.0) * innermost ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    return total


def cancellation_constant(params: KineticParams, tol: float = 1e-8, method: str = "adaptive") -> CancellationConstant:
    """Cancellation constant C_b.

    C_b = |S^{d-2}| int_0^{pi/2} sin^{d-2}(T) b(T) (cos(T/2)^{-(d+gamma)} - 1) dT.
    The integrand behaves like T^{1-2s} at the origin; both methods factor
    that power out explicitly.

    Args:
        params: Kinetic parameters.
        tol: Absolute error target.
        method: "adaptive" (algebraic-weight adaptive quadrature) or "graded"
            (dyadic Gauss-Legendre panels with an analytic innermost panel).

    Returns:
        CancellationConstant with value and error bound.

    Raises:
        QuadratureError: If the error bound exceeds tol.
    """
    a = params.d + params.gamma
    s = params.s
    scale = sphere_area(params.d - 1) * params.c_b
    if method == "adaptive":
        value, err = integrate.quad(
            lambda t: float(_cancellation_profile(np.array(t), a)),
            0.0,
            0.5 * math.pi,
            weight="alg",
            wvar=(1.0 - 2.0 * s, 0.0),
            epsabs=0.1 * tol / scale,
            epsrel=0.0,
            limit=200,
        )
        value, err = scale * value, scale * err
    elif method == "graded":
        fine = _graded_cancellation(a, s, 14)
        rough = _graded_cancellation(a, s, 10)
        value, err = scale * fine, scale * abs(fine - rough)
    else:
        raise KineticParamsError(f"unknown cancellation method {method!r}")
    if err > tol:
        raise QuadratureError(f"cancellation constant did not converge: error {err:.3e} > tol {tol:.1e}")
    logger.debug(f"C_b({params.d}, {params.gamma}, {params.s}) = {value:.12g} +- {err:.1e} [{method}]")
    return CancellationConstant(value=float(value), abs_error=float(err), method=method)


def angular_measure(params: KineticParams, theta_min: float) -> float:
    """Lambda(theta_min): total angular mass of b over deviation angles >= theta_min."""
    if not 0 < theta_min < 0.5 * math.pi:
        raise KineticParamsError("theta_min must lie in (0, pi/2)")
    s2 = 2.0 * params.s
    return sphere_area(params.d - 1) * params.c_b * (theta_min ** -s2 - (0.5 * math.pi) ** -s2) / s2


def sample_deviation(params: KineticParams, theta_min: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Deviation angles on [theta_min, pi/2] with density proportional to Theta^{-1-2s}."""
    s2 = 2.0 * params.s
    lo, hi = theta_min ** -s2, (0.5 * math.pi) ** -s2
    u = rng.random(n)
    return (lo - u * (lo - hi)) ** (-1.0 / s2)


def post_collision(v: np.ndarray, v_star: np.ndarray, sigma: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Post-collisional velocities for arrays of shape (..., d)."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    centre = 0.5 * (v + v_star)
    half = 0.5 * np.linalg.norm(v_star - v, axis=-1, keepdims=True)
    return centre + half * sigma, centre - half * sigma


def sigma_from_deviation(e: np.ndarray, deviation: ArrayLike, normal: np.ndarray) -> np.ndarray:
    """Unit sigma with sigma . e = cos(deviation), tilted towards the unit normal (normal . e = 0)."""
    dev = np.asarray(deviation, dtype=float)[..., None]
    return np.cos(dev) * e + np.sin(dev) * normal


def collision_geometry(v, v_star, sigma) -> CollisionGeometry:
    """Post-collisional velocities and angles of one collision.

    Raises:
        GeometryError: If sigma is not a unit vector or v = v_star.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if abs(float(np.linalg.norm(sigma)) - 1.0) > 1e-12:
        raise GeometryError("sigma must be a unit vector")
    rel = v_star - v
    r = float(np.linalg.norm(rel))
    if r == 0.0:
        raise GeometryError("degenerate pair: zero relative velocity")
    v_prime, v_star_prime = post_collision(v, v_star, sigma)
    cos_theta = float(np.clip(sigma @ rel / r, -1.0, 1.0))
    theta = math.acos(cos_theta)
    return CollisionGeometry(
        v=v,
        v_star=v_star,
        sigma=sigma,
        v_prime=v_prime,
        v_star_prime=v_star_prime,
        theta=theta,
        deviation=math.pi - theta,
        r=r,
        w=v_star_prime - v,
    )

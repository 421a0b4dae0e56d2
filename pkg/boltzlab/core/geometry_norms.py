"""
Weighted norms and the anisotropic geometry of the lifted paraboloid.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .distributions import Density
from .errors import GeometryError, QuadratureError
from .kernel import KineticParams
from .quadrature import QuadratureSpec, box_rule, composite_rule, gauss_rule, graded_rule, sphere_rule

logger = logging.getLogger(__name__)

Function = Callable[[np.ndarray], np.ndarray]
DEFAULT_RADIUS = 8.0


class SeminormDivergenceError(QuadratureError):
    """Raised when the graded diagonal shells of the seminorm fail the ratio test."""

    pass


@dataclass(frozen=True)
class NormValue:
    """A norm or seminorm value with its absolute error estimate."""

    value: float
    abs_error_estimate: float

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class AnisoPoint:
    """A velocity and its lift (v, |v|^2 / 2) onto the paraboloid."""

    v: Tuple[float, ...]
    lift: Tuple[float, ...]


def lift(v) -> AnisoPoint:
    """Lift v onto the paraboloid v_{d+1} = |v|^2 / 2."""
    v = np.asarray(v, dtype=float)
    return AnisoPoint(tuple(v), tuple(np.append(v, 0.5 * float(v @ v))))


def _lifted(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v, 0.5 * np.sum(v * v, axis=-1, keepdims=True)], axis=-1)


def d_gs(v1, v2):
    """Anisotropic distance sqrt(|v1 - v2|^2 + (|v1|^2 - |v2|^2)^2 / 4), the distance of the lifts."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    out = np.linalg.norm(_lifted(v1) - _lifted(v2), axis=-1)
    return float(out) if out.ndim == 0 else out


def _as_function(g: Union[Density, Function]) -> Function:
    return g.eval if isinstance(g, Density) else g


def _domain(g, spec: QuadratureSpec, d: Optional[int], radius: Optional[float] = None) -> Tuple[int, np.ndarray, float]:
    if isinstance(g, Density):
        center, default = g.domain(spec)
        return g.d, center, float(radius) if radius is not None else default
    if d is None:
        raise GeometryError("dimension d is required when g is a plain function")
    r = float(radius) if radius is not None else spec.radius_for(DEFAULT_RADIUS)
    return d, np.zeros(d), r


def lp_norm_estimate(
    g: Union[Density, Function],
    p: float,
    ell: float,
    spec: QuadratureSpec,
    d: Optional[int] = None,
    radius: Optional[float] = None,
    tail: bool = True,
) -> NormValue:
    """(int <v>^{ell p} |g|^p dv)^{1/p} with an error estimate.

    The integral is taken in polar coordinates about the origin with unit-width
    radial panels, so indicators of balls of integer radius are integrated
    exactly. Without `radius` the domain is the density's truncation ball and a
    power-law tail is extrapolated from the outermost profile values; with
    `radius` the integral is restricted to B_radius.

    Raises:
        QuadratureError: If the extrapolated tail diverges for the given (ell, p).
    """
    if p < 1:
        raise QuadratureError(f"L^p norm needs p >= 1, got {p}")
    fn = _as_function(g)
    restricted = radius is not None
    d, center, r_dom = _domain(g, spec, d, radius)
    outer = r_dom if restricted else r_dom + float(np.linalg.norm(center))
    edges = np.arange(0.0, math.floor(outer) + 1.0)
    if edges[-1] < outer:
        edges = np.append(edges, outer)
    dirs, dir_w = sphere_rule(d, max(2 * spec.direction_nodes, 32 if d == 2 else 16))

    def profile(r: np.ndarray) -> np.ndarray:
        vals = np.abs(fn(r[:, None, None] * dirs[None, :, :])) ** p
        return (vals @ dir_w) * (1.0 + r * r) ** (0.5 * ell * p) * r ** (d - 1)

    def integral(order: int) -> float:
        nodes, weights, _ = composite_rule(edges, order)
        return float(weights @ profile(nodes))

    order = max(4, spec.grid_nodes // 2)
    fine = integral(order)
    coarse = integral(max(2, (2 * order) // 3))
    tail_value = 0.0
    if tail and not restricted:
        end = np.array([outer - 1.0, outer])
        prof = profile(end)
        if prof[1] > 0 and prof[0] > 0:
            slope = math.log(prof[1] / prof[0]) / math.log(end[1] / end[0])
            if slope >= -1.0:
                raise QuadratureError(
                    f"divergent tail: profile decays like r^{slope:.3g} for ell={ell:g}, p={p:g}"
                )
            tail_value = float(prof[1] * outer / (-slope - 1.0))
    total = fine + tail_value
    value = total ** (1.0 / p) if total > 0 else 0.0
    spread = abs(fine - coarse) + tail_value
    error = abs((total + spread) ** (1.0 / p) - value) if total > 0 else spread ** (1.0 / p)
    return NormValue(float(value), float(error))


def weighted_lp_norm(
    g: Union[Density, Function],
    p: float,
    ell: float,
    spec: QuadratureSpec,
    d: Optional[int] = None,
    radius: Optional[float] = None,
    tail: bool = True,
) -> float:
    """Weighted Lebesgue norm ||g||_{L^p_ell} = (int <v>^{ell p} |g|^p)^{1/p}."""
    return lp_norm_estimate(g, p, ell, spec, d, radius, tail).value


def t0_map(v0, x) -> np.ndarray:
    """T_0: contract the v0-parallel component of x by |v0| (identity when |v0| < 2)."""
    v0 = np.asarray(v0, dtype=float)
    x = np.asarray(x, dtype=float)
    speed = float(np.linalg.norm(v0))
    if speed < 2.0:
        return x.copy()
    a = (x @ v0) / speed ** 2
    return x + (np.asarray(a)[..., None] * v0) * (1.0 / speed - 1.0)


def t0_inverse(v0, y) -> np.ndarray:
    """Inverse of t0_map: stretch the v0-parallel component by |v0|."""
    v0 = np.asarray(v0, dtype=float)
    y = np.asarray(y, dtype=float)
    speed = float(np.linalg.norm(v0))
    if speed < 2.0:
        return y.copy()
    b = (y @ v0) / speed ** 2
    return y + (np.asarray(b)[..., None] * v0) * (speed - 1.0)


def in_ellipsoid(v0, x) -> bool:
    """Membership of x in E_1(v0) = v0 + T_0(B_1)."""
    v0 = np.asarray(v0, dtype=float)
    return bool(np.linalg.norm(t0_inverse(v0, np.asarray(x, dtype=float) - v0)) <= 1.0 + 1e-12)


def comparability_ratio(v0, v1, v2) -> float:
    """d_GS(v1, v2) / |T_0^{-1}(v1 - v2)| for v1, v2 in E_1(v0), |v0| >= 2.

    Raises:
        GeometryError: For |v0| < 2, points outside E_1(v0), or v1 = v2.
    """
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    if np.linalg.norm(v0) < 2.0:
        raise GeometryError("comparability needs |v0| >= 2")
    if not (in_ellipsoid(v0, v1) and in_ellipsoid(v0, v2)):
        raise GeometryError("points must lie in E_1(v0) = v0 + T_0(B_1)")
    if np.array_equal(v1, v2):
        raise GeometryError("comparability is undefined for v1 = v2")
    return float(d_gs(v1, v2) / np.linalg.norm(t0_inverse(v0, v1 - v2)))


def seminorm_estimate(
    g: Union[Density, Function],
    params: KineticParams,
    spec: QuadratureSpec,
    d: Optional[int] = None,
    rho: float = 1.0,
    domain: Optional[Tuple[np.ndarray, float]] = None,
) -> NormValue:
    """Anisotropic seminorm restricted to d_GS < rho, with an error estimate.

    The inner integral runs over u = v' - v in polar form with geometric
    panels grading towards u = 0; d_GS >= |u| bounds the radial range by rho
    and the indicator d_GS < rho is applied exactly.

    Raises:
        SeminormDivergenceError: If the innermost shell sums do not decay.
    """
    if not rho > 0:
        raise GeometryError("seminorm radius rho must be positive")
    fn = _as_function(g)
    if domain is not None:
        d = d if d is not None else len(domain[0])
        center, radius = np.asarray(domain[0], dtype=float), float(domain[1])
    else:
        d, center, radius = _domain(g, spec, d)
    power = 0.5 * (params.gamma + 2.0 * params.s + 1.0)
    ratio = spec.grading_ratio

    def run(s: QuadratureSpec) -> Tuple[float, np.ndarray]:
        volume, volume_w = box_rule(radius, s.grid_nodes, d, center)
        h, h_w, h_panel = graded_rule(s.w_min_factor * rho, rho, s.grading_ratio, s.panel_order)
        e, e_w = sphere_rule(d, s.direction_nodes)
        gv = fn(volume)
        wv = (1.0 + np.sum(volume ** 2, axis=-1)) ** power
        by_h = np.zeros(len(h))
        step = max(1, (1 << 20) // (len(h) * len(e)))
        for start in range(0, len(volume), step):
            V = volume[start:start + step]
            targets = V[:, None, None, :] + h[None, :, None, None] * e[None, None, :, :]
            dist = d_gs(V[:, None, None, :], targets)
            inside = dist < rho
            diff = (fn(targets) - gv[start:start + step, None, None]) ** 2
            weight = wv[start:start + step, None, None] * (1.0 + np.sum(targets ** 2, axis=-1)) ** power
            safe = np.where(inside, dist, 1.0)
            integrand = np.where(inside, diff * weight * safe ** (-d - 2.0 * params.s), 0.0)
            by_h += np.einsum("m,mhe,h,e->h", volume_w[start:start + step], integrand, h ** (d - 1) * h_w, e_w)
        return float(by_h.sum()), np.bincount(h_panel, weights=by_h)

    fine, panels = run(spec)
    coarse, _ = run(spec.coarse())
    inner, next_inner = panels[0], panels[1] if len(panels) > 1 else 0.0
    tail = 0.0
    if inner > 0:
        growth = next_inner / inner
        if not growth > 1.0:
            raise SeminormDivergenceError(
                f"seminorm diverges at the diagonal: innermost shell ratio {growth:.3g} <= 1"
            )
        tail = 2.0 * inner / (min(growth, ratio ** (2.0 - 2.0 * params.s)) - 1.0)
    return NormValue(fine, abs(fine - coarse) + tail)


def aniso_seminorm(
    g: Union[Density, Function],
    params: KineticParams,
    spec: QuadratureSpec,
    d: Optional[int] = None,
    rho: float = 1.0,
    domain: Optional[Tuple[np.ndarray, float]] = None,
) -> float:
    """Seminorm iint_{d_GS < rho} (g(v') - g(v))^2 d_GS^{-d-2s} (<v><v'>)^{(gamma+2s+1)/2} dv' dv."""
    return seminorm_estimate(g, params, spec, d, rho, domain).value


def sqrt_density(f: Density) -> Function:
    """The function v -> sqrt(f(v))."""
    return lambda v: np.exp(0.5 * f.log_eval(np.asarray(v, dtype=float)))

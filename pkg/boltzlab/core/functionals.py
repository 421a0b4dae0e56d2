"""
Integrated collision functionals.

Triple integrals over (v, v*, sigma) are evaluated in centre-of-mass
coordinates V = (v + v*)/2, u = v - v* (unit Jacobian). The relative velocity
u is taken in polar form with geometrically graded radial panels and sigma is
parametrized by its deviation angle Theta from u/|u| and a direction n in the
complement of u, so that B dsigma = Phi(|u|) c_b Theta^{-1-2s} dTheta dn. The
n-rule is symmetric under n -> -n, which realizes the principal value.

Every functional returns a FunctionalResult whose error estimate adds the
dual-resolution discrepancy, a floating-point floor, and the grazing,
small-|u| and velocity truncation tails.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .distributions import LOG_FLOOR, MASS_THRESHOLD, Density
from .errors import DensityError, QuadratureError
from .kernel import (
    KineticParams,
    cancellation_constant,
    kinetic_phi,
    kinetic_psi,
    post_collision,
    sample_deviation,
    sigma_from_deviation,
)
from .kf_kernel import KernelEvaluator
from .quadrature import (
    QuadratureSpec,
    box_rule,
    chunked,
    graded_rule,
    ordered_map,
    orthonormal_complement,
    sphere_area,
    sphere_rule,
    subsphere_rule,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["family", "member", "gamma", "s", "functional", "value", "abs_error", "method", "nodes"]
METHODS = ("auto", "deterministic", "monte_carlo")
ROUNDOFF = 16.0 * np.finfo(float).eps
_BLOCK_NODES = 1 << 20
_SLOW_D3_NODES = 48 ** 3

TestFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FunctionalResult:
    """Value of a functional with its absolute error estimate."""

    value: float
    abs_error_estimate: float
    method: str
    nodes_or_samples: int
    params_echo: KineticParams
    functional: str = ""
    variant: str = ""
    extras: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise QuadratureError(f"{self.functional}: invalid error estimate {self.abs_error_estimate}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "functional": self.functional,
            "variant": self.variant,
            "value": self.value,
            "abs_error_estimate": self.abs_error_estimate,
            "method": self.method,
            "nodes_or_samples": self.nodes_or_samples,
            "params": self.params_echo.to_dict(),
            "extras": dict(self.extras),
        }

    def csv_row(self, family: str, member: str) -> Dict[str, Any]:
        return {
            "family": family,
            "member": member,
            "gamma": self.params_echo.gamma,
            "s": self.params_echo.s,
            "functional": self.functional,
            "value": self.value,
            "abs_error": self.abs_error_estimate,
            "method": self.method,
            "nodes": self.nodes_or_samples,
        }


@dataclass(frozen=True)
class _Collisions:
    """Velocities at the nodes of one block (broadcastable arrays, last axis d)."""

    v: np.ndarray
    v_star: np.ndarray
    v_prime: np.ndarray
    v_star_prime: np.ndarray


@dataclass(frozen=True)
class _SphereRule:
    volume: np.ndarray
    volume_w: np.ndarray
    rho: np.ndarray
    rho_w: np.ndarray
    rho_panel: np.ndarray
    e: np.ndarray
    e_w: np.ndarray
    theta_panel: np.ndarray
    sigma: np.ndarray
    angular_w: np.ndarray
    radius: float

    @property
    def nodes(self) -> int:
        return int(len(self.volume) * len(self.rho) * self.angular_w.size * len(self.e))


@dataclass
class _Sums:
    total: float
    roundoff: float
    theta_panels: np.ndarray
    rho_panels: np.ndarray
    nodes: int


Integrand = Callable[[_Collisions], Tuple[np.ndarray, np.ndarray]]


def _resolve_method(method: str, d: int) -> str:
    if method not in METHODS:
        raise QuadratureError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "auto":
        return "deterministic" if d == 2 else "monte_carlo"
    return method


def _kinetic(rho: np.ndarray, params: KineticParams, variant: str) -> np.ndarray:
    if variant == "psi":
        return kinetic_psi(rho, params)
    if variant == "full":
        return kinetic_phi(rho, params)
    raise QuadratureError(f"unknown kinetic variant {variant!r}")


def _clipped_log(f: Density, v: np.ndarray) -> np.ndarray:
    return np.maximum(f.log_eval(v), LOG_FLOOR)


def _grid_mass(f: Density, spec: QuadratureSpec) -> float:
    if f.analytic is not None:
        return float(f.analytic.mass)
    center, radius = f.domain(spec)
    points, weights = box_rule(radius, spec.grid_nodes, f.d, center)
    return float(weights @ f.eval(points))


def _sphere_rule(f: Density, params: KineticParams, spec: QuadratureSpec) -> _SphereRule:
    d = params.d
    center, radius = f.domain(spec)
    volume, volume_w = box_rule(radius, spec.grid_nodes, d, center)
    rho, rho_w, rho_panel = graded_rule(
        spec.w_min_factor * 2.0 * radius, 2.0 * radius, spec.grading_ratio, spec.panel_order
    )
    e, e_w = sphere_rule(d, spec.direction_nodes)
    theta, theta_w, theta_panel = graded_rule(spec.theta_min, 0.5 * math.pi, spec.grading_ratio, spec.panel_order)
    coeffs, n_w = subsphere_rule(d, spec.direction_nodes)
    normals = np.einsum("bk,ekd->ebd", coeffs, orthonormal_complement(e))
    sigma = (
        np.cos(theta)[None, :, None, None] * e[:, None, None, :]
        + np.sin(theta)[None, :, None, None] * normals[:, None, :, :]
    )
    angular_w = (params.c_b * theta ** (-1.0 - 2.0 * params.s) * theta_w)[:, None] * n_w[None, :]
    return _SphereRule(volume, volume_w, rho, rho_w, rho_panel, e, e_w, theta_panel, sigma, angular_w, radius)


def _sphere_block(rule: _SphereRule, radial: np.ndarray, block: slice, integrand: Integrand):
    V = rule.volume[block]
    u = rule.rho[:, None, None] * rule.e[None, :, :]
    v = V[:, None, None, :] + 0.5 * u[None]
    v_star = V[:, None, None, :] - 0.5 * u[None]
    disp = 0.5 * rule.rho[None, :, None, None, None, None] * rule.sigma[None, None]
    centre = V[:, None, None, None, None, :]
    ctx = _Collisions(
        v=v[:, :, :, None, None, :],
        v_star=v_star[:, :, :, None, None, :],
        v_prime=centre + disp,
        v_star_prime=centre - disp,
    )
    values, roundoff = integrand(ctx)
    weights = (
        rule.volume_w[block][:, None, None, None, None]
        * radial[None, :, None, None, None]
        * rule.e_w[None, None, :, None, None]
        * rule.angular_w[None, None, None, :, :]
    )
    weighted = weights * values
    return (
        float(weighted.sum()),
        float((weights * np.abs(roundoff)).sum()),
        weighted.sum(axis=(0, 1, 2, 4)),
        weighted.sum(axis=(0, 2, 3, 4)),
    )


def _integrate_sphere(
    f: Density, params: KineticParams, spec: QuadratureSpec, variant: str, integrand: Integrand
) -> _Sums:
    rule = _sphere_rule(f, params, spec)
    radial = rule.rho ** (params.d - 1) * rule.rho_w * _kinetic(rule.rho, params, variant)
    per_volume = max(1, rule.nodes // len(rule.volume))
    blocks = chunked(len(rule.volume), max(1, _BLOCK_NODES // per_volume))
    parts = ordered_map(lambda b: _sphere_block(rule, radial, b, integrand), blocks, spec.jobs)
    total = roundoff = 0.0
    by_theta = np.zeros(rule.angular_w.shape[0])
    by_rho = np.zeros(len(rule.rho))
    for t, r, bt, br in parts:
        total += t
        roundoff += r
        by_theta += bt
        by_rho += br
    return _Sums(
        total=total,
        roundoff=roundoff,
        theta_panels=np.bincount(rule.theta_panel, weights=by_theta),
        rho_panels=np.bincount(rule.rho_panel, weights=by_rho),
        nodes=rule.nodes,
    )


def _deterministic(
    f: Density, params: KineticParams, spec: QuadratureSpec, variant: str, integrand: Integrand
) -> Tuple[float, float, int]:
    """Sphere-form integral with its assembled error estimate."""
    if params.d == 3 and spec.grid_nodes ** 3 > _SLOW_D3_NODES:
        logger.warning(f"d=3 deterministic grid with {spec.grid_nodes ** 3} velocity nodes will be slow")
    fine = _integrate_sphere(f, params, spec, variant, integrand)
    coarse = _integrate_sphere(f, params, spec.coarse(), variant, integrand)
    ratio = spec.grading_ratio
    grazing_tail = 2.0 * abs(fine.theta_panels[0]) / (ratio ** (2.0 - 2.0 * params.s) - 1.0)
    rho_power = params.d + (min(params.gamma, 0.0) if variant == "full" else 0.0)
    small_tail = 2.0 * abs(fine.rho_panels[0]) / (ratio ** rho_power - 1.0)
    mass = _grid_mass(f, spec)
    _, radius = f.domain(spec)
    velocity_tail = 2.0 * f.tail_mass(radius) / mass * abs(fine.total) if mass > MASS_THRESHOLD else 0.0
    error = abs(fine.total - coarse.total) + fine.roundoff + grazing_tail + small_tail + velocity_tail
    return fine.total, error, fine.nodes


def _shell_edges(theta_min: float) -> List[float]:
    edges = [0.5 * math.pi]
    while edges[-1] / 2.0 > theta_min:
        edges.append(edges[-1] / 2.0)
    edges.append(theta_min)
    return edges


def _monte_carlo(
    first: Density,
    second: Density,
    params: KineticParams,
    spec: QuadratureSpec,
    variant: str,
    ratio_fn: Integrand,
) -> Tuple[float, float, int]:
    """Stratified Monte Carlo with v ~ first/mass, v* ~ second/mass.

    One stratum per dyadic shell of deviation angles; within a shell Theta is
    drawn proportionally to Theta^{-1-2s} and every sample is paired with its
    mirrored normal.
    """
    m1, m2 = _grid_mass(first, spec), _grid_mass(second, spec)
    if m1 <= MASS_THRESHOLD or m2 <= MASS_THRESHOLD:
        return 0.0, 0.0, 0
    for density in (first, second):
        if not density.has_sampler:
            raise DensityError(f"monte_carlo method needs a sampler for the {density.kind.value} density")
    d, s2 = params.d, 2.0 * params.s
    edges = _shell_edges(spec.theta_min)
    shells = len(edges) - 1
    n = max(8, spec.mc_samples // shells)
    seeds = np.random.SeedSequence(spec.seed).spawn(shells)
    subsphere = sphere_area(d - 1)

    def shell(k: int) -> Tuple[float, float, float]:
        rng = np.random.default_rng(seeds[k])
        lo, hi = edges[k + 1], edges[k]
        v = first.sample(n, rng)
        v_star = second.sample(n, rng)
        u = v - v_star
        rho = np.linalg.norm(u, axis=-1)
        live = rho > 0
        safe = np.where(live, rho, 1.0)
        e = np.where(live[:, None], u / safe[:, None], np.eye(d)[0])
        u01 = rng.random(n)
        theta = (lo ** -s2 - u01 * (lo ** -s2 - hi ** -s2)) ** (-1.0 / s2)
        basis = orthonormal_complement(e)
        if d == 2:
            normal = basis[:, 0, :]
        else:
            phi = 2.0 * math.pi * rng.random(n)
            normal = np.cos(phi)[:, None] * basis[:, 0, :] + np.sin(phi)[:, None] * basis[:, 1, :]
        values = np.zeros(n)
        roundoff = np.zeros(n)
        for sign in (1.0, -1.0):
            sigma = sigma_from_deviation(e, theta, sign * normal)
            v_prime, v_star_prime = post_collision(v, v_star, sigma)
            val, rnd = ratio_fn(_Collisions(v, v_star, v_prime, v_star_prime))
            values += 0.5 * val
            roundoff += 0.5 * np.abs(rnd)
        kin = np.where(live, _kinetic(safe, params, variant), 0.0)
        weight = subsphere * params.c_b * (lo ** -s2 - hi ** -s2) / s2
        sample = weight * kin * values
        return float(sample.mean()), float(sample.var(ddof=1) / n), float(weight * (kin * roundoff).mean())

    parts = ordered_map(shell, range(shells), spec.jobs)
    scale = m1 * m2
    means = np.array([p[0] for p in parts])
    total = scale * float(means.sum())
    stderr = scale * math.sqrt(sum(p[1] for p in parts))
    roundoff = scale * sum(p[2] for p in parts)
    inner = shells - 2 if shells >= 2 else 0
    lo_inner = edges[inner + 1]
    grazing_tail = (
        2.0 * scale * abs(means[inner]) * (spec.theta_min / lo_inner) ** (2.0 - s2) / (2.0 ** (2.0 - s2) - 1.0)
    )
    return total, stderr + roundoff + grazing_tail, n * shells


def _dissipation_integrand(f: Density, importance: bool) -> Integrand:
    def integrand(c: _Collisions):
        lv, ls = _clipped_log(f, c.v), _clipped_log(f, c.v_star)
        lp, lps = _clipped_log(f, c.v_prime), _clipped_log(f, c.v_star_prime)
        before, after = lv + ls, lp + lps
        log_ratio = before - after
        delta = ROUNDOFF * (np.abs(lv) + np.abs(ls) + np.abs(lp) + np.abs(lps) + 1.0)
        if importance:
            # (1 - f'f'* / ff*) log(ff* / f'f'*)
            L = np.clip(log_ratio, -700.0, 700.0)
            return -np.expm1(-L) * L, delta * (2.0 * np.abs(L) + delta) * np.exp(np.maximum(0.0, -L))
        # (A - A') log(A / A') = max(A, A') (1 - exp(-|L|)) |L|
        aL = np.abs(log_ratio)
        top = np.exp(np.maximum(before, after))
        return top * -np.expm1(-aL) * aL, top * delta * (2.0 * aL + delta)

    return integrand


def entropy_dissipation(
    f: Density,
    params: KineticParams,
    spec: QuadratureSpec,
    variant: str = "full",
    method: str = "auto",
) -> FunctionalResult:
    """Entropy dissipation D(f) = 1/2 iiint (ff* - f'f'*) log(ff* / f'f'*) B dsigma dv* dv.

    Args:
        f: Density.
        params: Kinetic parameters.
        spec: Quadrature settings.
        variant: "full" uses Phi, "psi" the truncated factor.
        method: "deterministic", "monte_carlo" or "auto" (deterministic in d=2).

    Returns:
        FunctionalResult with D(f) and its error estimate.

    Raises:
        QuadratureError: If the computed value is negative beyond its error bar.
    """
    method = _resolve_method(method, params.d)
    try:
        if method == "deterministic":
            value, error, nodes = _deterministic(f, params, spec, variant, _dissipation_integrand(f, False))
        else:
            value, error, nodes = _monte_carlo(f, f, params, spec, variant, _dissipation_integrand(f, True))
    except Exception as e:
        logger.error(f"Error computing entropy dissipation: {str(e)}")
        raise
    value, error = 0.5 * value, 0.5 * error
    if value < -error:
        raise QuadratureError(f"quadrature inconsistency: D = {value:.6g} below -{error:.3g}")
    logger.info(f"Computed entropy dissipation {value:.6g} +- {error:.2g} ({method}, {variant})")
    return FunctionalResult(value, error, method, nodes, params, "entropy_dissipation", variant)


def _weak_form_integrand(f: Density, phi: TestFunction, importance: bool) -> Integrand:
    def integrand(c: _Collisions):
        pv, ps = phi(c.v), phi(c.v_star)
        pp, pps = phi(c.v_prime), phi(c.v_star_prime)
        diff = pp + pps - pv - ps
        floor = ROUNDOFF * (np.abs(pp) + np.abs(pps) + np.abs(pv) + np.abs(ps))
        if importance:
            return diff, floor
        pair = f.eval(c.v) * f.eval(c.v_star)
        return pair * diff, pair * floor

    return integrand


def weak_form(
    f: Density,
    phi: TestFunction,
    params: KineticParams,
    spec: QuadratureSpec,
    method: str = "auto",
) -> FunctionalResult:
    """Weak form <Q(f, f), phi> = 1/2 iiint ff* (phi' + phi*' - phi - phi*) B.

    phi maps arrays of velocities (..., d) to values (...).
    """
    method = _resolve_method(method, params.d)
    if method == "deterministic":
        value, error, nodes = _deterministic(f, params, spec, "full", _weak_form_integrand(f, phi, False))
    else:
        value, error, nodes = _monte_carlo(f, f, params, spec, "full", _weak_form_integrand(f, phi, True))
    logger.info(f"Computed weak form {0.5 * value:.6g} +- {0.5 * error:.2g} ({method})")
    return FunctionalResult(0.5 * value, 0.5 * error, method, nodes, params, "weak_form", "full")


def _as_function(g: Union[Density, TestFunction]) -> TestFunction:
    return g.eval if isinstance(g, Density) else g


def _gamma_sphere_integrand(g: TestFunction, f: Density) -> Integrand:
    def integrand(c: _Collisions):
        root_v = np.sqrt(np.maximum(g(c.v), 0.0))
        root_p = np.sqrt(np.maximum(g(c.v_prime), 0.0))
        weight = f.eval(c.v_star)
        diff = (root_p - root_v) ** 2
        return weight * diff, weight * ROUNDOFF * (root_p ** 2 + root_v ** 2)

    return integrand


def _gamma_ratio_integrand(g: Density) -> Integrand:
    def integrand(c: _Collisions):
        half = np.clip(0.5 * (_clipped_log(g, c.v_prime) - _clipped_log(g, c.v)), -350.0, 350.0)
        values = np.expm1(half) ** 2
        return values, ROUNDOFF * (1.0 + np.exp(2.0 * half))

    return integrand


def _gamma_kernel_route(
    g: TestFunction, f: Density, params: KineticParams, spec: QuadratureSpec, offset_convention: str
):
    evaluator = KernelEvaluator(f, params, spec, variant="psi", offset_convention=offset_convention)
    d = params.d

    def run(s: QuadratureSpec) -> Tuple[float, np.ndarray, int]:
        center, radius = f.domain(s)
        volume, volume_w = box_rule(radius, s.grid_nodes, d, center)
        h, h_w, h_panel = graded_rule(s.w_min_factor * 2.0 * radius, 2.0 * radius, s.grading_ratio, s.panel_order)
        e, e_w = sphere_rule(d, s.direction_nodes)
        targets = volume[:, None, None, :] + h[None, :, None, None] * e[None, None, :, :]
        root_v = np.sqrt(np.maximum(g(volume), 0.0))
        root_t = np.sqrt(np.maximum(g(targets), 0.0))
        diff = (root_t - root_v[:, None, None]) ** 2
        weights = volume_w[:, None, None] * (h ** (d - 1) * h_w)[None, :, None] * e_w[None, None, :]
        live = (diff * weights) > 0
        contrib = np.zeros(diff.shape)
        if live.any():
            base = np.broadcast_to(volume[:, None, None, :], targets.shape)
            kernel = evaluator.evaluate(base[live], targets[live], s)
            contrib[live] = weights[live] * diff[live] * kernel
        by_h = np.bincount(h_panel, weights=contrib.sum(axis=(0, 2)))
        return float(contrib.sum()), by_h, int(diff.size)

    fine, fine_panels, nodes = run(spec)
    coarse, _, _ = run(spec.coarse())
    small_tail = 2.0 * abs(fine_panels[0]) / (spec.grading_ratio ** (2.0 - 2.0 * params.s) - 1.0)
    return fine, abs(fine - coarse) + small_tail, nodes


def quadratic_form(
    g: Union[Density, TestFunction],
    f: Density,
    params: KineticParams,
    spec: QuadratureSpec,
    route: str = "kernel",
    method: str = "auto",
    offset_convention: str = "v_prime_plus_w",
) -> FunctionalResult:
    """Coercive quadratic form Gamma(g) = iint (sqrt g(v') - sqrt g(v))^2 K^psi_f(v, v') dv' dv.

    Args:
        g: Nonnegative density or function of velocity.
        f: Density defining the kernel.
        params: Kinetic parameters.
        spec: Quadrature settings.
        route: "kernel" (double integral against K^psi_f) or "sphere"
            (triple integral with f(v*) (sqrt g' - sqrt g)^2 psi b).
        method: For the sphere route, "deterministic", "monte_carlo" or "auto".
        offset_convention: Plane offset of K^psi_f on the kernel route. Both
            conventions give the same Gamma: swapping v and v' maps one kernel
            onto the other.
    """
    g_fn = _as_function(g)
    try:
        if route == "kernel":
            value, error, nodes = _gamma_kernel_route(g_fn, f, params, spec, offset_convention)
            method = "deterministic"
        elif route == "sphere":
            method = _resolve_method(method, params.d)
            if method == "deterministic":
                value, error, nodes = _deterministic(f, params, spec, "psi", _gamma_sphere_integrand(g_fn, f))
            else:
                if not isinstance(g, Density):
                    raise DensityError("monte_carlo quadratic form needs g given as a Density")
                value, error, nodes = _monte_carlo(g, f, params, spec, "psi", _gamma_ratio_integrand(g))
        else:
            raise QuadratureError(f"unknown route {route!r}; expected 'kernel' or 'sphere'")
    except Exception as e:
        logger.error(f"Error computing quadratic form: {str(e)}")
        raise
    logger.info(f"Computed quadratic form {value:.6g} +- {error:.2g} ({route}, {method})")
    return FunctionalResult(value, error, method, nodes, params, "quadratic_form", route)


def cancellation_term(
    f: Density, params: KineticParams, spec: QuadratureSpec, method: str = "auto"
) -> FunctionalResult:
    """I2 = C_b iint f f* psi(|v - v*|) dv* dv.

    extras carries the coarse bound (2 c_phi C_b M0^2 for gamma <= 0,
    2^gamma c_phi C_b (int f <v>^gamma)^2 otherwise), C_b and M0.
    """
    c_b = cancellation_constant(params, spec.tol)
    d, gamma = params.d, params.gamma
    method = _resolve_method(method, d)

    def moments(s: QuadratureSpec) -> Tuple[float, float]:
        center, radius = f.domain(s)
        volume, volume_w = box_rule(radius, s.grid_nodes, d, center)
        fv = f.eval(volume)
        weight = (1.0 + np.sum(volume ** 2, axis=-1)) ** (0.5 * max(gamma, 0.0))
        return float(volume_w @ fv), float(volume_w @ (fv * weight))

    def deterministic(s: QuadratureSpec) -> Tuple[float, np.ndarray, int]:
        center, radius = f.domain(s)
        volume, volume_w = box_rule(radius, s.grid_nodes, d, center)
        rho, rho_w, rho_panel = graded_rule(s.w_min_factor * 2.0 * radius, 2.0 * radius, s.grading_ratio, s.panel_order)
        e, e_w = sphere_rule(d, s.direction_nodes)
        u = rho[:, None, None] * e[None, :, :]
        radial = rho ** (d - 1) * rho_w * kinetic_psi(rho, params)
        by_rho = np.zeros(len(rho))
        for block in chunked(len(volume), max(1, _BLOCK_NODES // u[..., 0].size)):
            V = volume[block][:, None, None, :]
            pair = f.eval(V + 0.5 * u) * f.eval(V - 0.5 * u)
            by_rho += np.einsum("m,mre,r,e->r", volume_w[block], pair, radial, e_w)
        return float(by_rho.sum()), np.bincount(rho_panel, weights=by_rho), len(volume) * u[..., 0].size

    mass, gamma_moment = moments(spec)
    if mass <= MASS_THRESHOLD:
        integral, error, nodes = 0.0, 0.0, 0
    elif method == "deterministic":
        integral, panels, nodes = deterministic(spec)
        coarse, _, _ = deterministic(spec.coarse())
        small_tail = 2.0 * abs(panels[0]) / (spec.grading_ratio ** d - 1.0)
        error = abs(integral - coarse) + small_tail
    else:
        if not f.has_sampler:
            raise DensityError(f"monte_carlo method needs a sampler for the {f.kind.value} density")
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(1)[0])
        n = spec.mc_samples
        sep = np.linalg.norm(f.sample(n, rng) - f.sample(n, rng), axis=-1)
        total = _grid_mass(f, spec)
        sample = total ** 2 * kinetic_psi(sep, params)
        integral, error, nodes = float(sample.mean()), float(sample.std(ddof=1) / math.sqrt(n)), n

    value = c_b.value * integral
    error = c_b.value * error + c_b.abs_error * abs(integral)
    if gamma <= 0:
        coarse_bound = 2.0 * params.c_phi * c_b.value * mass ** 2
    else:
        coarse_bound = 2.0 ** gamma * params.c_phi * c_b.value * gamma_moment ** 2
    logger.info(f"Computed cancellation term {value:.6g} +- {error:.2g} (coarse bound {coarse_bound:.6g})")
    return FunctionalResult(
        value,
        error,
        method,
        nodes,
        params,
        "cancellation_term",
        "psi",
        extras={"coarse_bound": coarse_bound, "C_b": c_b.value, "M0": mass, "gamma_moment": gamma_moment},
    )


def lemma21_gap(
    f: Density,
    params: KineticParams,
    spec: QuadratureSpec,
    variant: str = "full",
    route: str = "sphere",
) -> FunctionalResult:
    """D(f) - (Gamma(f) - I2(f)), which should be nonnegative up to the combined error.

    Gamma(f) is the quadratic form with sqrt(f) increments against K^psi_f.
    """
    dissipation = entropy_dissipation(f, params, spec, variant)
    gamma_form = quadratic_form(f, f, params, spec, route=route)
    reaction = cancellation_term(f, params, spec)
    value = dissipation.value - (gamma_form.value - reaction.value)
    error = dissipation.abs_error_estimate + gamma_form.abs_error_estimate + reaction.abs_error_estimate
    return FunctionalResult(
        value,
        error,
        dissipation.method,
        dissipation.nodes_or_samples,
        params,
        "lemma21_gap",
        variant,
        extras={"D": dissipation.value, "gamma_form": gamma_form.value, "I2": reaction.value},
    )

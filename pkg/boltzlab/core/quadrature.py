"""
Quadrature plumbing for boltzlab.

This module holds the resolution settings shared by every functional
(QuadratureSpec) and the rules built from them: tensor Gauss-Legendre boxes,
composite Gauss-Legendre rules on geometrically graded panels, sphere rules
and an ordered thread-pool map.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace, asdict
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, TypeVar

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import ConfigError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution and sampling settings for every numerical functional."""

    velocity_radius: Optional[float] = None
    grid_nodes: int = 24
    theta_min: float = 1e-3
    grading_ratio: float = 1.15
    panel_order: int = 2
    w_min_factor: float = 1e-4
    direction_nodes: int = 16
    mc_samples: int = 20000
    seed: int = 0
    tol: float = 1e-8
    max_subdivisions: int = 200
    tail_tol: float = 1e-6
    jobs: int = 1

    def __post_init__(self):
        if self.velocity_radius is not None and not self.velocity_radius > 0:
            raise ConfigError("quadrature.velocity_radius must be positive")
        if self.grid_nodes < 4:
            raise ConfigError("quadrature.grid_nodes must be at least 4")
        if not 0 < self.theta_min < math.pi / 2:
            raise ConfigError("quadrature.theta_min must lie in (0, pi/2)")
        if not self.grading_ratio > 1:
            raise ConfigError("quadrature.grading_ratio must exceed 1")
        if self.panel_order < 1:
            raise ConfigError("quadrature.panel_order must be at least 1")
        if not 0 < self.w_min_factor < 1:
            raise ConfigError("quadrature.w_min_factor must lie in (0, 1)")
        if self.direction_nodes < 4 or self.direction_nodes % 2:
            raise ConfigError("quadrature.direction_nodes must be an even number >= 4")
        if self.mc_samples < 2:
            raise ConfigError("quadrature.mc_samples must be at least 2")
        if not self.tol > 0 or not self.tail_tol > 0:
            raise ConfigError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ConfigError("quadrature.max_subdivisions must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def coarse(self) -> "QuadratureSpec":
        """Return the lower-resolution companion used for error estimates."""
        directions = max(4, int(round(self.direction_nodes * 2 / 3)))
        directions += directions % 2
        return replace(
            self,
            grid_nodes=max(4, int(round(self.grid_nodes * 2 / 3))),
            grading_ratio=self.grading_ratio ** 1.5,
            direction_nodes=directions,
            mc_samples=max(2, self.mc_samples // 2),
        )

    def radius_for(self, default: float) -> float:
        """Velocity truncation radius, falling back to a density-derived default."""
        return float(self.velocity_radius) if self.velocity_radius is not None else float(default)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} in R^d (|S^0| = 2)."""
    return float(2.0 * math.pi ** (d / 2.0) / gamma_fn(d / 2.0))


@lru_cache(maxsize=64)
def _leggauss(order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_rule(lo: float, hi: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = _leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def geometric_edges(lo: float, hi: float, ratio: float) -> np.ndarray:
    """Panel edges lo, lo*ratio, lo*ratio^2, ... closed at hi."""
    if not 0 < lo < hi:
        raise ValueError(f"invalid graded interval [{lo}, {hi}]")
    count = max(1, int(math.ceil(math.log(hi / lo) / math.log(ratio) - 1e-12)))
    edges = lo * ratio ** np.arange(count + 1, dtype=float)
    edges[-1] = hi
    return edges


def composite_rule(edges: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on the given panel edges.

    Returns:
        Nodes, weights and the panel index of every node.
    """
    x, w = _leggauss(order)
    lo = edges[:-1, None]
    half = 0.5 * (edges[1:, None] - lo)
    nodes = (lo + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    panels = np.repeat(np.arange(len(edges) - 1), order)
    return nodes, weights, panels


def graded_rule(lo: float, hi: float, ratio: float, order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on geometric panels grading towards lo."""
    return composite_rule(geometric_edges(lo, hi, ratio), order)


def box_rule(radius: float, n: int, d: int, center: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule on the cube [-radius, radius]^d (+ center)."""
    x, w = gauss_rule(-radius, radius, n)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([w] * d), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    if center is not None:
        points = points + np.asarray(center, dtype=float)
    return points, weights


def sphere_rule(d: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Directions and weights integrating over S^{d-1}.

    d = 2 uses n equispaced angles; d = 3 uses n//2 Gauss-Legendre nodes in
    the polar cosine times n equispaced azimuths. The direction set is
    symmetric under sigma -> -sigma.
    """
    if d == 2:
        alpha = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        dirs = np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)
        return dirs, np.full(n, 2.0 * math.pi / n)
    if d == 3:
        ct, wt = gauss_rule(-1.0, 1.0, max(2, n // 2))
        phi = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        st = np.sqrt(1.0 - ct ** 2)
        dirs = np.stack(
            [
                (st[:, None] * np.cos(phi)[None, :]).ravel(),
                (st[:, None] * np.sin(phi)[None, :]).ravel(),
                np.repeat(ct, n),
            ],
            axis=-1,
        )
        weights = np.repeat(wt, n) * (2.0 * math.pi / n)
        return dirs, weights
    raise ValueError(f"unsupported dimension {d}")


def subsphere_rule(d: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rule on S^{d-2}, as coordinates in an orthonormal complement basis.

    d = 2: the two points +-1 (|S^0| = 2). d = 3: n equispaced azimuths with
    n even, so every node is paired with its antipode.
    """
    if d == 2:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if d == 3:
        phi = 2.0 * math.pi * np.arange(n) / n
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), np.full(n, 2.0 * math.pi / n)
    raise ValueError(f"unsupported dimension {d}")


def orthonormal_complement(e: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of unit vectors e.

    Args:
        e: Array (..., d) of unit vectors, d in {2, 3}.

    Returns:
        Array (..., d-1, d).
    """
    e = np.asarray(e, dtype=float)
    d = e.shape[-1]
    if d == 2:
        return np.stack([-e[..., 1], e[..., 0]], axis=-1)[..., None, :]
    if d == 3:
        helper = np.zeros_like(e)
        use_x = np.abs(e[..., 0]) < 0.9
        helper[..., 0] = np.where(use_x, 1.0, 0.0)
        helper[..., 1] = np.where(use_x, 0.0, 1.0)
        b1 = helper - np.sum(helper * e, axis=-1, keepdims=True) * e
        b1 /= np.linalg.norm(b1, axis=-1, keepdims=True)
        b2 = np.cross(e, b1)
        return np.stack([b1, b2], axis=-2)
    raise ValueError(f"unsupported dimension {d}")


def ordered_map(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """Map func over items, in parallel when jobs > 1, preserving order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(func, items))


def chunked(array_length: int, chunk: int) -> List[slice]:
    """Contiguous slices covering range(array_length)."""
    return [slice(i, min(i + chunk, array_length)) for i in range(0, array_length, chunk)]

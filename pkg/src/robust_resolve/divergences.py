"""KL divergence, total variation and the Bhattacharyya exponent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, GridMismatch
from .numerics import LOG_FLOOR, Grid, kinked_quadrature

MASS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Probability weights on the nodes of a :class:`Grid`."""

    grid: Grid
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.grid.n,):
            raise DomainError(f"expected {self.grid.n} weights, got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise DomainError(f"weights sum to {w.sum():.12g}, not 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, grid: Grid, weights) -> "DiscreteDistribution":
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(grid, w / w.sum())

    @classmethod
    def from_log_weights(cls, grid: Grid, log_w) -> "DiscreteDistribution":
        log_w = np.asarray(log_w, dtype=float)
        w = np.exp(log_w - log_w.max())
        return cls(grid, w / w.sum())

    @classmethod
    def from_family(cls, family, theta, grid: Grid) -> "DiscreteDistribution":
        """Node masses ``density * step``, renormalized on the grid."""
        return cls.from_log_weights(grid, family.log_density(theta, grid.nodes))

    @classmethod
    def from_sample(cls, points, grid: Grid, weights=None) -> "DiscreteDistribution":
        """Bin atoms to their nearest grid node, preserving mass."""
        points = np.asarray(points, dtype=float)
        w = np.full(points.size, 1.0 / points.size) if weights is None else np.asarray(weights, float)
        mass = np.bincount(grid.nearest_index(points), weights=w, minlength=grid.n)
        return cls(grid, mass / mass.sum())

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def mean(self) -> float:
        return float(self.weights @ self.grid.nodes)

    def mirror(self) -> "DiscreteDistribution":
        """Reflection ``xi -> -xi`` (requires a symmetric grid)."""
        if not self.grid.is_symmetric:
            raise GridMismatch("mirror needs a symmetric grid")
        return DiscreteDistribution(self.grid, self.weights[::-1])

    def mix(self, other: "DiscreteDistribution", lam: float) -> "DiscreteDistribution":
        _check(self, other)
        return DiscreteDistribution.normalized(self.grid, lam * self.weights + (1 - lam) * other.weights)


def _check(p: DiscreteDistribution, q: DiscreteDistribution):
    if p.grid != q.grid:
        raise GridMismatch(f"grids differ: {p.grid} vs {q.grid}")


def kl_weights(p: np.ndarray, q: np.ndarray) -> float:
    """``sum p log(p/q)`` on raw weight vectors."""
    mask = p >= LOG_FLOOR
    if np.any(q[mask] <= 0):
        return np.inf
    pm = p[mask]
    return float(max(np.sum(pm * (np.log(pm) - np.log(q[mask]))), 0.0))


def kl(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Kullback-Leibler divergence ``KL(p, q)``; ``inf`` unless ``p << q``."""
    _check(p, q)
    return kl_weights(p.weights, q.weights)


def tv(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Total variation ``0.5 * sum |p - q|``."""
    _check(p, q)
    return float(0.5 * np.abs(p.weights - q.weights).sum())


def bhattacharyya_exponent(family, delta: float, grid: Grid | None = None) -> float:
    """``-log integral sqrt(g(xi - delta) g(xi + delta))``."""
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    if delta == 0:
        return 0.0
    grid = family.default_grid(delta) if grid is None else grid
    # +-delta are kinks of the integrand for kinked generators such as the Laplace
    x, w = kinked_quadrature(grid.lo, grid.hi, grid.n, [-delta, delta])
    half = 0.5 * (family.log_g(x - delta) + family.log_g(x + delta))
    top = half.max()
    return float(-(top + np.log(w @ np.exp(half - top))))

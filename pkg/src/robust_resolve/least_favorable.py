"""Least-favorable pairs for TV-corrupted location hypotheses.

For two members ``P_{-delta}`` and ``P_{+delta}`` of a location family, an
adversary may move ``alpha`` of the mass of each. The corrupted pair that is
hardest to tell apart clips the likelihood ratio at ``c'`` and ``1/c'``; the
KL distance of both to their common "midpoint" ``p_hat* ~ sqrt(q- q+)`` is the
worst-case resolution ``r^alpha(delta) = -log integral sqrt(q- q+)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divergences import DiscreteDistribution
from .exceptions import DomainError, GridMismatch, MonotonicityError
from .numerics import Grid, find_root, kinked_quadrature, parallel_map

LOG_C_MIN = -745.0
MONOTONE_TOL = 1e-9


class OverlapRegime:
    """Sentinel: the two TV balls intersect and the resolution is zero."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "OVERLAP"


OVERLAP = OverlapRegime()


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha <= 0.5):
        raise DomainError(f"corruption level must lie in [0, 1/2], got {alpha}")
    return alpha


def check_delta(delta: float) -> float:
    delta = float(delta)
    if not (delta >= 0 and np.isfinite(delta)):
        raise DomainError(f"delta must be finite and nonnegative, got {delta}")
    return delta


def f_delta(family, delta: float, c: float) -> float:
    """Mass moved by clipping at ``c``: ``integral (c g(xi+d) - g(xi-d))^+ / (1+c)``.

    Evaluated through the generator CDF: the integrand is positive exactly
    left of the crossing ``log_ratio(xi) = log c``.
    """
    if c <= 0:
        return 0.0
    x = family.log_ratio_crossing(delta, np.log(c))
    if x == -np.inf:
        return 0.0
    G = family.generator_cdf
    if x == np.inf:
        val = c - 1.0
    else:
        val = c * G(x + delta) - G(x - delta)
    return float(max(val, 0.0) / (1.0 + c))


def overlap_threshold(family, delta: float) -> float:
    """``f_delta(1) = G(delta) - 1/2``: the largest alpha with zero resolution."""
    return float(family.generator_cdf(delta) - 0.5)


def solve_c_prime(family, delta: float, alpha: float, grid: Grid | None = None):
    """Clipping constant ``c'`` in ``[0, 1]`` with ``f_delta(c') = alpha``.

    Returns :data:`OVERLAP` when ``f_delta(1) <= alpha``. ``grid`` is accepted
    for interface symmetry; the condition is evaluated with the exact CDF.
    """
    alpha = check_alpha(alpha)
    delta = check_delta(delta)
    if alpha == 0.0:
        return 0.0
    if overlap_threshold(family, delta) <= alpha:
        return OVERLAP
    u = find_root(lambda u: f_delta(family, delta, np.exp(u)) - alpha, [LOG_C_MIN, 0.0])
    return float(np.exp(u))


def _log_q_minus(family, delta, log_c, x):
    lgm = family.log_g(x + delta)
    lgp = family.log_g(x - delta)
    lr = lgp - lgm
    both = np.logaddexp(lgm, lgp) - np.log1p(np.exp(log_c))
    out = lgm.copy()
    out = np.where(lr <= log_c, both, out)
    out = np.where(lr >= -log_c, log_c + both, out)
    return out


def _kinks(family, delta, log_c, lo, hi):
    pts = [delta, -delta]
    if np.isfinite(log_c):
        xc = family.log_ratio_crossing(delta, log_c)
        pts += [xc, -xc]
    return np.array([p for p in pts if np.isfinite(p) and lo < p < hi])


def _resolution_from_logs(family, delta, log_c, grid):
    x, w = kinked_quadrature(grid.lo, grid.hi, grid.n, _kinks(family, delta, log_c, grid.lo, grid.hi))
    lqm = _log_q_minus(family, delta, log_c, x)
    lqp = lqm[::-1] if np.array_equal(x, -x[::-1]) else _log_q_minus(family, delta, log_c, -x)
    top = lqm.max()
    zm = w @ np.exp(lqm - top)
    zp = w @ np.exp(lqp - top)
    zs = w @ np.exp(0.5 * (lqm + lqp) - top)
    return float(max(-(np.log(zs) - 0.5 * np.log(zm) - 0.5 * np.log(zp)), 0.0))


def resolution(family, delta: float, alpha: float, grid: Grid | None = None) -> float:
    """Worst-case resolution ``r^alpha(delta)`` without building the full pair."""
    c = solve_c_prime(family, delta, alpha, grid)
    if c is OVERLAP or delta == 0:
        return 0.0
    grid = family.default_grid(delta) if grid is None else grid
    log_c = np.log(c) if c > 0 else -np.inf
    return _resolution_from_logs(family, delta, log_c, grid)


@dataclass(frozen=True, eq=False)
class LeastFavorablePair:
    """Least-favorable corrupted pair and its symmetric midpoint.

    Attributes
    ----------
    delta, alpha : float
        Half-separation and corruption level.
    c_prime : float
        Clipping constant; ``1.0`` in the overlap regime.
    q_minus, q_plus, p_hat_star : DiscreteDistribution
        Corrupted versions of ``P_{-delta}``, ``P_{+delta}`` and their midpoint.
    resolution : float
        ``r^alpha(delta)``.
    overlap : bool
        True when the TV balls intersect.
    """

    delta: float
    alpha: float
    c_prime: float
    q_minus: DiscreteDistribution
    q_plus: DiscreteDistribution
    p_hat_star: DiscreteDistribution
    resolution: float
    overlap: bool = False

    @property
    def huber_k(self) -> float:
        return -np.log(self.c_prime) if self.c_prime > 0 else np.inf


def build_pair(family, delta: float, alpha: float, grid: Grid | None = None) -> LeastFavorablePair:
    """Construct ``(q-*, q+*, p_hat*)`` on a symmetric grid.

    In the overlap regime all three are the mixture ``(P_{-delta} + P_{delta})/2``
    and the resolution is zero.
    """
    c = solve_c_prime(family, delta, alpha, grid)
    grid = family.default_grid(delta) if grid is None else grid
    if not grid.is_symmetric:
        raise GridMismatch("least-favorable pairs need a symmetric grid")
    x = grid.nodes
    if c is OVERLAP or delta == 0:
        lmix = np.logaddexp(family.log_g(x + delta), family.log_g(x - delta))
        mix = DiscreteDistribution.from_log_weights(grid, 0.5 * (lmix + lmix[::-1]))
        return LeastFavorablePair(delta, alpha, 1.0, mix, mix, mix, 0.0, overlap=True)
    log_c = np.log(c) if c > 0 else -np.inf
    lqm = _log_q_minus(family, delta, log_c, x)
    q_minus = DiscreteDistribution.from_log_weights(grid, lqm)
    q_plus = DiscreteDistribution(grid, q_minus.weights[::-1])
    lw = np.log(np.maximum(q_minus.weights, 1e-300))
    p_star = DiscreteDistribution.from_log_weights(grid, 0.5 * (lw + lw[::-1]))
    r = _resolution_from_logs(family, delta, log_c, grid)
    return LeastFavorablePair(delta, alpha, c, q_minus, q_plus, p_star, r)


def check_monotone(deltas, values, tol: float = MONOTONE_TOL):
    """Raise :class:`MonotonicityError` if ``values`` decreases along ``deltas``."""
    values = np.asarray(values, dtype=float)
    drops = np.nonzero(np.diff(values) < -tol)[0]
    if drops.size:
        i = drops[0]
        raise MonotonicityError(
            f"resolution decreases between delta={deltas[i]:.6g} and {deltas[i + 1]:.6g}",
            deltas=np.asarray(deltas), values=values,
        )


def resolution_curve(family, alpha: float, deltas, grid: Grid | None = None, verify: bool = True):
    """``[(delta, r^alpha(delta)), ...]`` over an increasing grid of ``delta``.

    With ``verify`` the curve is checked to be nondecreasing.
    """
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas < 0) or np.any(np.diff(deltas) <= 0):
        raise DomainError("delta grid must be nonnegative and increasing")
    if grid is None:
        grid = family.default_grid(float(deltas[-1]))
    values = parallel_map(lambda d: resolution(family, d, alpha, grid), deltas)
    if verify:
        check_monotone(deltas, values)
    return list(zip(deltas.tolist(), values))

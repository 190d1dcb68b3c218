"""Worst-case radius, regime thresholds and phase-cell classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .least_favorable import check_alpha, check_monotone, resolution
from .numerics import bisect_boundary

INF_TOL = 1e-4
CAP_SIGMAS = 20.0
RADIUS_TOL = 1e-6
SCAN_POINTS = 25


@dataclass(frozen=True)
class Radius:
    """A radius that may be infinite, with the ``delta`` that witnesses it."""

    value: float
    achieved_at: float | None = None
    cap_hit: bool = False

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def __float__(self):
        return float(self.value)

    def to_dict(self) -> dict:
        return {
            "value": None if self.is_infinite else self.value,
            "infinite": self.is_infinite,
            "achieved_at": self.achieved_at,
            "cap_hit": self.cap_hit,
        }


INFINITE = Radius(math.inf)


class Regime(str, enum.Enum):
    MEAN = "MeanRegime"
    MEDIAN = "MedianRegime"
    FINITE_BOTH = "FiniteBoth"
    ALMOST_SURE_ONLY = "AlmostSureOnly"
    UNREACHABLE = "Unreachable"


@dataclass(frozen=True)
class PhasePoint:
    """One ``(r, alpha)`` cell of the phase diagram."""

    r: float
    alpha: float
    kappa: Radius
    kappa_prime: Radius
    regime: Regime

    def to_row(self) -> dict:
        def fmt(x):
            return "inf" if math.isinf(x.value) else f"{x.value:.6f}"

        return {
            "r": f"{self.r:.6g}",
            "alpha": f"{self.alpha:.6g}",
            "kappa": fmt(self.kappa),
            "kappa_prime": fmt(self.kappa_prime),
            "regime": self.regime.value,
        }


def rbar(alpha: float) -> float:
    """Worst-case unreachable threshold ``1/2 log(1/(2a)) + 1/2 log(1/(2(1-a)))``.

    ``inf`` at ``alpha = 0``.
    """
    alpha = check_alpha(alpha)
    if alpha == 0:
        return math.inf
    return 0.5 * math.log(1 / (2 * alpha)) + 0.5 * math.log(1 / (2 * (1 - alpha)))


def median_regime_radius(family, alpha: float, grid=None) -> float:
    """Largest ``delta`` with zero resolution: solves ``G(delta) - 1/2 = alpha``."""
    alpha = check_alpha(alpha)
    if alpha == 0:
        return 0.0
    if alpha == 0.5:
        return math.inf
    return float(family.generator_ppf(0.5 + alpha))


def _check_r(r: float) -> float:
    r = float(r)
    if not (r >= 0):
        raise DomainError(f"resolution must be nonnegative, got {r}")
    return r


def invert_curve(value, r, lo, hi, tol=RADIUS_TOL, scan=SCAN_POINTS):
    """Largest ``delta`` in ``[lo, hi]`` with ``value(delta) <= r``.

    ``value(lo) <= r`` is assumed. A coarse scan checks monotonicity and
    brackets the crossing before bisection. Returns ``(delta, cap_hit)``.
    """
    deltas = np.linspace(lo, hi, scan)
    values = [value(d) for d in deltas]
    check_monotone(deltas, values, tol=1e-7)
    above = np.nonzero(np.asarray(values) > r)[0]
    if above.size == 0:
        return hi, True
    j = above[0]
    a, b = bisect_boundary(lambda d: value(d) <= r, deltas[j - 1] if j else lo, deltas[j], tol)
    return a, False


def worst_case_radius(family, r: float, alpha: float, grid=None, delta_max: float | None = None,
                      tol: float = RADIUS_TOL) -> Radius:
    """``kappa_{r,alpha} = sup{delta : r^alpha(delta) <= r}``.

    Infinite when ``r >= rbar(alpha) - 1e-4`` or when the search cap
    ``delta_max`` (default twenty scale units) is reached.

    Raises
    ------
    MonotonicityError
        If the resolution curve decreases on the search interval.
    """
    r = _check_r(r)
    alpha = check_alpha(alpha)
    if r >= rbar(alpha) - INF_TOL:
        return INFINITE
    delta_max = CAP_SIGMAS * family.scale if delta_max is None else float(delta_max)
    lo = median_regime_radius(family, alpha)
    if r == 0:
        return Radius(float(lo), float(lo))
    grid = family.default_grid(delta_max) if grid is None else grid
    delta, cap = invert_curve(lambda d: resolution(family, d, alpha, grid), r, lo, delta_max, tol)
    if cap:
        return Radius(math.inf, float(delta_max), cap_hit=True)
    return Radius(float(delta), float(delta))


def classify(r: float, alpha: float, kappa, kappa_prime) -> Regime:
    """Regime label of an ``(r, alpha)`` cell given both radii."""
    k = float(kappa)
    kp = float(kappa_prime)
    if r == 0:
        return Regime.MEDIAN
    if alpha == 0:
        return Regime.MEAN
    if math.isinf(kp):
        return Regime.UNREACHABLE
    if math.isinf(k):
        return Regime.ALMOST_SURE_ONLY
    return Regime.FINITE_BOTH

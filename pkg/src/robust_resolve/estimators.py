"""Location phi-estimators: mean, median, generalized mean and Huber.

A phi-estimator solves ``sum_i w_i phi(xi_i - theta) = 0`` for an odd,
nondecreasing influence function ``phi``. When the solution set is an interval
(flat ``phi``, e.g. the median with an even sample) its midpoint is returned.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateSample, DomainError
from .least_favorable import OVERLAP, solve_c_prime

THETA_TOL = 1e-12
MAX_EXPANSIONS = 60
PSI_NOISE = 1e-12


class OverlapWarning(UserWarning):
    """The corruption level swallows the separation; the median is used instead."""


class PhiKind(str, enum.Enum):
    MEAN = "mean"
    SIGN = "sign"
    GENERALIZED_MEAN = "generalized_mean"
    HUBER = "huber"


@dataclass(frozen=True)
class EmpiricalSample:
    """Observations with optional weights (uniform by default)."""

    points: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float))
        if pts.ndim != 1 or pts.size < 1:
            raise DomainError("sample needs at least one observation")
        if not np.all(np.isfinite(pts)):
            raise DomainError("observations must be finite")
        if self.weights is None:
            w = np.full(pts.size, 1.0 / pts.size)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != pts.shape or np.any(w < 0) or w.sum() <= 0:
                raise DomainError("weights must be nonnegative, one per observation")
            w = w / w.sum()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.size

    def shifted(self, t: float) -> "EmpiricalSample":
        return EmpiricalSample(self.points + t, self.weights)

    @classmethod
    def from_csv(cls, path) -> "EmpiricalSample":
        """One observation per line, optional second column weight."""
        data = np.genfromtxt(path, delimiter=",", comments="#", dtype=float)
        data = np.atleast_1d(data)
        if data.ndim == 2:
            data = data[~np.isnan(data).all(axis=1)]
            return cls(data[:, 0], data[:, 1] if data.shape[1] > 1 else None)
        return cls(data[~np.isnan(data)])


@dataclass(frozen=True)
class InfluenceFunction:
    """Odd nondecreasing influence function ``phi``.

    Parameters
    ----------
    kind : PhiKind
    delta : float
        Separation used by the generalized-mean and Huber kinds.
    k : float
        Clipping level of the Huber kind (``inf`` means no clipping).
    family : LocationFamily, optional
        Required by the generalized-mean and Huber kinds.
    """

    kind: PhiKind
    delta: float = 0.0
    k: float = np.inf
    family: object = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PhiKind(self.kind))
        if self.kind in (PhiKind.GENERALIZED_MEAN, PhiKind.HUBER):
            if self.family is None:
                raise DomainError(f"{self.kind.value} needs a location family")
            if not self.delta > 0:
                raise DomainError(f"{self.kind.value} needs delta > 0")
        if self.kind is PhiKind.HUBER and not self.k >= 0:
            raise DomainError("clipping level must be nonnegative")

    @classmethod
    def mean(cls):
        return cls(PhiKind.MEAN)

    @classmethod
    def sign(cls):
        return cls(PhiKind.SIGN)

    @classmethod
    def generalized_mean(cls, family, delta):
        return cls(PhiKind.GENERALIZED_MEAN, float(delta), np.inf, family)

    @classmethod
    def huber(cls, family, delta, k):
        return cls(PhiKind.HUBER, float(delta), float(k), family)

    @property
    def bound(self) -> float:
        """``sup |phi|``."""
        if self.kind is PhiKind.SIGN:
            return 1.0
        if self.kind is PhiKind.HUBER:
            return min(self.k, self.family.log_ratio_sup(self.delta))
        if self.kind is PhiKind.GENERALIZED_MEAN:
            return 0.5 * self.family.log_ratio_sup(self.delta)
        return np.inf

    def __call__(self, xi):
        return phi_eval(self, xi)


def phi_eval(phi: InfluenceFunction, xi):
    """Evaluate ``phi`` (vectorized)."""
    xi = np.asarray(xi, dtype=float)
    if phi.kind is PhiKind.MEAN:
        return xi.copy()
    if phi.kind is PhiKind.SIGN:
        return np.sign(xi)
    lr = phi.family.log_ratio(phi.delta, xi)
    if phi.kind is PhiKind.GENERALIZED_MEAN:
        return 0.5 * lr
    return np.clip(lr, -phi.k, phi.k)


def _psi(phi, points, weights, theta):
    # points, weights: (T, n); theta: (T,). Sums below the rounding noise of
    # their terms count as zero, so flat stretches of phi stay exactly flat.
    terms = weights * phi_eval(phi, points - theta[:, None])
    total = np.sum(terms, axis=1)
    noise = PSI_NOISE * np.sum(np.abs(terms), axis=1)
    return np.where(np.abs(total) <= noise, 0.0, total)


def estimate_many(phi: InfluenceFunction, points, weights=None, tol: float = THETA_TOL) -> np.ndarray:
    """Row-wise estimates for a ``(trials, n)`` array of samples.

    Two simultaneous bisections locate ``a = sup{psi > 0}`` and
    ``b = inf{psi < 0}`` of the nonincreasing ``psi(theta)``; the midpoint
    ``(a + b) / 2`` is returned.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    T, n = points.shape
    weights = np.full((T, n), 1.0 / n) if weights is None else np.broadcast_to(weights, (T, n))
    if phi.kind is PhiKind.MEAN:
        return np.sum(weights * points, axis=1)
    lo = points.min(axis=1) - 1.0
    hi = points.max(axis=1) + 1.0
    width = hi - lo
    for _ in range(MAX_EXPANSIONS):
        bad_lo = _psi(phi, points, weights, lo) <= 0
        bad_hi = _psi(phi, points, weights, hi) >= 0
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo = np.where(bad_lo, lo - width, lo)
        hi = np.where(bad_hi, hi + width, hi)
        width *= 2.0
    else:
        raise DegenerateSample(
            "estimating equation has no sign change; all observations are clipped to one side"
        )
    # bisection for a: psi(a_lo) > 0 >= psi(a_hi); for b: psi(b_lo) >= 0 > psi(b_hi)
    a_lo, a_hi = lo.copy(), hi.copy()
    b_lo, b_hi = lo.copy(), hi.copy()
    scale = np.maximum(1.0, np.abs(points).max(axis=1))
    for _ in range(200):
        if np.all(a_hi - a_lo <= tol * scale) and np.all(b_hi - b_lo <= tol * scale):
            break
        am = 0.5 * (a_lo + a_hi)
        pa = _psi(phi, points, weights, am)
        a_lo = np.where(pa > 0, am, a_lo)
        a_hi = np.where(pa > 0, a_hi, am)
        bm = 0.5 * (b_lo + b_hi)
        pb = _psi(phi, points, weights, bm)
        b_lo = np.where(pb >= 0, bm, b_lo)
        b_hi = np.where(pb >= 0, b_hi, bm)
    return 0.25 * (a_lo + a_hi + b_lo + b_hi)


def estimate(phi: InfluenceFunction, data) -> float:
    """phi-estimate of a sample (an :class:`EmpiricalSample` or array of points).

    Raises
    ------
    DegenerateSample
        If the estimating equation never changes sign.
    """
    if not isinstance(data, EmpiricalSample):
        data = EmpiricalSample(data)
    return float(estimate_many(phi, data.points[None, :], data.weights[None, :])[0])


def huber_from_alpha(family, delta: float, alpha: float) -> InfluenceFunction:
    """Huber influence function with the least-favorable clipping ``k = -log c'``.

    ``alpha = 0`` gives the unclipped generalized mean. In the overlap regime
    the clipping level collapses and the sign function (median) is returned
    with an :class:`OverlapWarning`.
    """
    c = solve_c_prime(family, delta, alpha)
    if c is OVERLAP:
        warnings.warn(
            f"alpha={alpha} overlaps the hypotheses at delta={delta}; using the median",
            OverlapWarning, stacklevel=2,
        )
        return InfluenceFunction.sign()
    if c == 0:
        return InfluenceFunction.generalized_mean(family, delta)
    return InfluenceFunction.huber(family, delta, -np.log(c))


def confidence_interval(phi: InfluenceFunction, data, delta: float) -> tuple[float, float]:
    """Fixed-width interval ``[E - delta, E + delta]`` around the estimate."""
    if delta < 0:
        raise DomainError("half-width must be nonnegative")
    e = estimate(phi, data)
    return e - delta, e + delta

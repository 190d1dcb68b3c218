"""Symmetric log-concave location families.

A family is generated by a symmetric log-concave density ``g``; the member at
location ``theta`` has density ``g(xi - theta)``. Three analytic generators are
provided (normal, logistic, Laplace) together with a tabulated one read from a
``xi,log_density`` CSV.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .exceptions import DomainError, ExtrapolationError
from .numerics import Grid, find_root

DEFAULT_GRID_N = 4001
TAIL_SIGMAS = 10.0
# exponential tails need a wider span for the same truncated mass (about e^-25)
EXP_TAIL_SIGMAS = 25.0


class Kind(str, enum.Enum):
    NORMAL = "normal"
    LOGISTIC = "logistic"
    LAPLACE = "laplace"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Location:
    """A location parameter ``theta``."""

    theta: float

    def __post_init__(self):
        if not np.isfinite(self.theta):
            raise DomainError("location must be finite")

    def __float__(self):
        return float(self.theta)


def _theta(theta) -> float:
    return float(theta.theta) if isinstance(theta, Location) else float(theta)


@dataclass(frozen=True)
class LocationFamily:
    """Location family generated by a symmetric log-concave density.

    Build instances with :meth:`normal`, :meth:`logistic`, :meth:`laplace`,
    :meth:`from_table` or :meth:`from_csv` rather than directly.

    Parameters
    ----------
    kind : Kind
        Generator shape.
    sigma : float
        Scale. Tabulated families carry their own scale and use ``sigma=1``.
    """

    kind: Kind
    sigma: float = 1.0
    table_xi: np.ndarray | None = field(default=None, compare=False, repr=False)
    table_log_g: np.ndarray | None = field(default=None, compare=False, repr=False)
    _table_cdf: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"scale must be positive, got {self.sigma}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def normal(cls, sigma: float = 1.0) -> "LocationFamily":
        return cls(Kind.NORMAL, float(sigma))

    @classmethod
    def logistic(cls, sigma: float = 1.0) -> "LocationFamily":
        return cls(Kind.LOGISTIC, float(sigma))

    @classmethod
    def laplace(cls, sigma: float = 1.0) -> "LocationFamily":
        return cls(Kind.LAPLACE, float(sigma))

    @classmethod
    def from_name(cls, name: str, sigma: float = 1.0) -> "LocationFamily":
        kind = Kind(name.lower())
        if kind is Kind.CUSTOM:
            raise DomainError("tabulated families are built with from_table or from_csv")
        return cls(kind, float(sigma))

    @classmethod
    def from_table(cls, xi, log_density) -> "LocationFamily":
        """Tabulated generator, symmetrized and renormalized on load.

        Raises
        ------
        DomainError
            If the grid is not strictly increasing and symmetric, a density
            value is zero or non-finite, or the symmetrized density is not
            log-concave.
        """
        xi = np.asarray(xi, dtype=float)
        logd = np.asarray(log_density, dtype=float)
        if xi.ndim != 1 or xi.shape != logd.shape or xi.size < 3:
            raise DomainError("table needs two equal-length columns with at least 3 rows")
        if np.any(np.diff(xi) <= 0):
            raise DomainError("xi column must be strictly increasing")
        if not np.allclose(xi, -xi[::-1], rtol=0, atol=1e-9 * max(1.0, np.abs(xi).max())):
            raise DomainError("xi column must be symmetric about zero")
        if not np.all(np.isfinite(logd)):
            raise DomainError("table densities must be strictly positive and finite")
        xi = 0.5 * (xi - xi[::-1])
        g = np.exp(logd - logd.max())
        g = 0.5 * (g + g[::-1])
        g /= np.trapezoid(g, xi)
        logg = np.log(g)
        slopes = np.diff(logg) / np.diff(xi)
        if np.any(np.diff(slopes) > 1e-9):
            raise DomainError("tabulated density is not log-concave")
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(xi))])
        cdf /= cdf[-1]
        return cls(Kind.CUSTOM, 1.0, xi, logg, cdf)

    @classmethod
    def from_csv(cls, path) -> "LocationFamily":
        """Read a ``xi,log_density`` CSV (header optional)."""
        data = np.genfromtxt(path, delimiter=",", comments="#", dtype=float)
        if data.ndim == 2 and np.isnan(data[0]).all():
            data = data[1:]
        if data.ndim != 2 or data.shape[1] != 2:
            raise DomainError(f"{path}: expected two columns xi,log_density")
        return cls.from_table(data[:, 0], data[:, 1])

    # -- generator --------------------------------------------------------

    @property
    def scale(self) -> float:
        """Characteristic width used for grids and caps."""
        if self.kind is Kind.CUSTOM:
            g = np.exp(self.table_log_g)
            return float(np.sqrt(np.trapezoid(self.table_xi**2 * g, self.table_xi)))
        return self.sigma

    @property
    def support_limit(self) -> float:
        return float(self.table_xi[-1]) if self.kind is Kind.CUSTOM else np.inf

    def log_g(self, x):
        """Log of the generator density, vectorized."""
        x = np.asarray(x, dtype=float)
        s = self.sigma
        if self.kind is Kind.NORMAL:
            return -0.5 * (x / s) ** 2 - np.log(s) - 0.5 * np.log(2 * np.pi)
        if self.kind is Kind.LOGISTIC:
            a = np.abs(x) / s
            return -a - 2.0 * np.log1p(np.exp(-a)) - np.log(s)
        if self.kind is Kind.LAPLACE:
            return -np.abs(x) / s - np.log(2 * s)
        lim = self.support_limit
        if np.any(np.abs(x) > lim * (1 + 1e-12)):
            raise ExtrapolationError(
                f"point outside the tabulated range [-{lim}, {lim}]"
            )
        return np.interp(x, self.table_xi, self.table_log_g)

    def g(self, x):
        return np.exp(self.log_g(x))

    def generator_cdf(self, x):
        """CDF ``G`` of the generator; defined on all of the real line."""
        x = np.asarray(x, dtype=float)
        s = self.sigma
        if self.kind is Kind.NORMAL:
            return special.ndtr(x / s)
        if self.kind is Kind.LOGISTIC:
            return special.expit(x / s)
        if self.kind is Kind.LAPLACE:
            e = 0.5 * np.exp(-np.abs(x) / s)
            return np.where(x < 0, e, 1.0 - e)
        return np.interp(x, self.table_xi, self._table_cdf, left=0.0, right=1.0)

    def generator_ppf(self, p):
        """Quantile function of the generator."""
        p = np.asarray(p, dtype=float)
        s = self.sigma
        if self.kind is Kind.NORMAL:
            return s * special.ndtri(p)
        if self.kind is Kind.LOGISTIC:
            return s * special.logit(p)
        if self.kind is Kind.LAPLACE:
            with np.errstate(divide="ignore"):
                return np.where(p < 0.5, s * np.log(2 * p), -s * np.log(2 * (1 - p)))
        return np.interp(p, self._table_cdf, self.table_xi)

    # -- public operations -------------------------------------------------

    def density(self, theta, xi):
        """Density ``g(xi - theta)`` of the member at location ``theta``."""
        return self.g(np.asarray(xi, dtype=float) - _theta(theta))

    def log_density(self, theta, xi):
        return self.log_g(np.asarray(xi, dtype=float) - _theta(theta))

    def log_ratio(self, delta, xi):
        """``log g(xi - delta) - log g(xi + delta)``; nondecreasing and odd in ``xi``."""
        if delta < 0:
            raise DomainError("delta must be nonnegative")
        xi = np.asarray(xi, dtype=float)
        if delta == 0:
            return np.zeros_like(xi)
        s = self.sigma
        if self.kind is Kind.NORMAL:
            return 2.0 * delta * xi / s**2
        if self.kind is Kind.LAPLACE:
            return (np.abs(xi + delta) - np.abs(xi - delta)) / s
        lr = self.log_g(xi - delta) - self.log_g(xi + delta)
        # exact oddness despite rounding in the two evaluations
        lr_neg = self.log_g(-xi - delta) - self.log_g(-xi + delta)
        return 0.5 * (lr - lr_neg)

    def log_ratio_sup(self, delta) -> float:
        """``sup_xi`` of :meth:`log_ratio` (``inf`` for the normal family)."""
        if delta == 0:
            return 0.0
        if self.kind is Kind.NORMAL:
            return np.inf
        if self.kind in (Kind.LOGISTIC, Kind.LAPLACE):
            return 2.0 * delta / self.sigma
        lim = self.support_limit - delta
        return float(self.log_ratio(delta, lim))

    def log_ratio_crossing(self, delta, level) -> float:
        """``sup{xi : log_ratio(delta, xi) < level}``, possibly infinite."""
        if delta == 0:
            return np.inf if level > 0 else -np.inf
        if self.kind is Kind.NORMAL:
            return level * self.sigma**2 / (2.0 * delta)
        top = self.log_ratio_sup(delta)
        if level > top:
            return np.inf
        if level <= -top:
            return -np.inf
        if self.kind is Kind.LAPLACE:
            # linear stretch on [-delta, delta]; flat beyond
            return 0.5 * level * self.sigma if level < top else delta
        hi = self.scale
        lim = self.support_limit - delta
        target = abs(level)
        while self.log_ratio(delta, min(hi, lim)) <= target and hi < lim:
            hi *= 2.0
        hi = min(hi, lim)
        if self.log_ratio(delta, hi) <= target:
            # ratio saturates numerically before reaching the level
            return np.inf if level >= 0 else -np.inf
        return find_root(lambda x: float(self.log_ratio(delta, x)) - level, [-hi, hi])

    def cdf(self, theta, x):
        """CDF of the member at ``theta``."""
        return self.generator_cdf(np.asarray(x, dtype=float) - _theta(theta))

    def sample(self, rng: np.random.Generator, size, theta=0.0):
        t = _theta(theta)
        s = self.sigma
        if self.kind is Kind.NORMAL:
            return rng.normal(t, s, size)
        if self.kind is Kind.LOGISTIC:
            return rng.logistic(t, s, size)
        if self.kind is Kind.LAPLACE:
            return rng.laplace(t, s, size)
        return t + self.generator_ppf(rng.random(size))

    def default_grid(self, delta_max: float = 0.0, n: int = DEFAULT_GRID_N, span: float | None = None) -> Grid:
        """Symmetric working grid covering locations up to ``delta_max``.

        The half-width is ``delta_max + span`` with ``span`` defaulting to ten
        scale units for the normal family and twenty-five for the
        exponential-tailed ones; tabulated families are clamped so every evaluation of
        ``g(xi -+ delta_max)`` stays inside the table.
        """
        if span is None:
            light = self.kind is Kind.NORMAL or self.kind is Kind.CUSTOM
            span = (TAIL_SIGMAS if light else EXP_TAIL_SIGMAS) * self.scale
        half = float(delta_max) + span
        if self.kind is Kind.CUSTOM:
            half = min(half, self.support_limit - float(delta_max))
            if half <= 0:
                raise ExtrapolationError("table too narrow for the requested shift")
        return Grid.symmetric(half, n)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sigma": self.sigma}

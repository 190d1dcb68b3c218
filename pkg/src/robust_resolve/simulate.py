"""Monte-Carlo coverage experiments under TV corruption.

An adversary moves up to ``alpha`` of the mass of ``P_{theta*}``. We draw
samples from the corrupted distribution, apply a set estimator and count how
often ``theta*`` is missed.

Failures of well-designed intervals are exponentially rare (rates like
``e^{-0.45 n}``), far below ``1/trials`` at desk-scale sample sizes. For the
least-favorable adversary the experiment therefore defaults to importance
sampling from the tilted midpoint ``p_hat*``, under which failures are common;
each trial is reweighted by its exact likelihood ratio on the grid.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .divergences import DiscreteDistribution, tv
from .dro_set import dro_resolution
from .estimators import InfluenceFunction, estimate_many, huber_from_alpha
from .exceptions import DomainError
from .least_favorable import build_pair, check_alpha
from .numerics import Grid

DEFAULT_NS = (50, 100, 200, 400)
DEFAULT_TRIALS = 2000
TV_SLACK = 2e-3


class CorruptionKind(str, enum.Enum):
    MIXTURE_OUTLIER = "mixture_outlier"
    LEAST_FAVORABLE_MINUS = "least_favorable_minus"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class CorruptionModel:
    """A TV-``alpha`` corruption of ``P_{theta*}``.

    Build with :meth:`mixture_outlier`, :meth:`least_favorable_minus` or
    :meth:`custom`.
    """

    kind: CorruptionKind
    family: object
    theta_star: float = 0.0
    alpha: float = 0.0
    offset: float = 0.0
    delta: float = 0.0
    table: DiscreteDistribution | None = None
    _pair: object = field(default=None, repr=False)

    @classmethod
    def mixture_outlier(cls, family, alpha, offset, theta_star=0.0):
        """``(1 - alpha) P_{theta*} + alpha * point mass at theta* + offset``."""
        return cls(CorruptionKind.MIXTURE_OUTLIER, family, float(theta_star), check_alpha(alpha), float(offset))

    @classmethod
    def least_favorable_minus(cls, family, delta, alpha, theta_star=0.0):
        """The least-favorable ``q-*`` at separation ``delta``, recentred on ``theta*``."""
        alpha = check_alpha(alpha)
        pair = build_pair(family, float(delta), alpha)
        return cls(CorruptionKind.LEAST_FAVORABLE_MINUS, family, float(theta_star), alpha,
                   delta=float(delta), _pair=pair)

    @classmethod
    def custom(cls, family, distribution: DiscreteDistribution, alpha, theta_star=0.0):
        """Any gridded distribution claimed to be within TV ``alpha`` of ``P_{theta*}``."""
        return cls(CorruptionKind.CUSTOM, family, float(theta_star), check_alpha(alpha), table=distribution)

    @classmethod
    def tail_shift(cls, family, alpha, theta_star=0.0, grid: Grid | None = None):
        """Move the leftmost ``alpha`` of mass to the right edge of the grid."""
        alpha = check_alpha(alpha)
        grid = Grid.symmetric(12 * family.scale, 4001) if grid is None else grid
        base = DiscreteDistribution.from_family(family, theta_star, grid).weights.copy()
        before = np.concatenate([[0.0], np.cumsum(base)[:-1]])
        taken = np.clip(alpha - before, 0.0, base)
        base -= taken
        base[-1] += taken.sum()
        return cls.custom(family, DiscreteDistribution.normalized(grid, base), alpha, theta_star)

    # gridded representation, in absolute coordinates
    def gridded(self) -> DiscreteDistribution:
        if self.kind is CorruptionKind.CUSTOM:
            return self.table
        if self.kind is CorruptionKind.LEAST_FAVORABLE_MINUS:
            q = self._pair.q_minus
            shift = self.theta_star + self.delta
            return DiscreteDistribution(Grid(q.grid.lo + shift, q.grid.hi + shift, q.grid.n), q.weights)
        half = abs(self.offset) + 12 * self.family.scale
        grid = Grid(self.theta_star - half, self.theta_star + half, 4001)
        w = (1 - self.alpha) * DiscreteDistribution.from_family(self.family, self.theta_star, grid).weights
        w[grid.nearest_index(self.theta_star + self.offset)] += self.alpha
        return DiscreteDistribution.normalized(grid, w)

    def tv_to_base(self) -> float:
        g = self.gridded()
        return tv(g, DiscreteDistribution.from_family(self.family, self.theta_star, g.grid))

    def check(self):
        """Raise :class:`DomainError` unless the model is a TV-``alpha`` corruption."""
        d = self.tv_to_base()
        if d > self.alpha + TV_SLACK:
            raise DomainError(f"corruption moves {d:.4f} of mass, more than alpha={self.alpha}")


def _rng(seed, n, trial):
    return np.random.default_rng([int(seed), int(n), int(trial)])


def _grid_draw(weights, grid, size, rng):
    idx = np.searchsorted(np.cumsum(weights), rng.random(size) * weights.sum(), side="right")
    idx = np.minimum(idx, grid.n - 1)
    return idx, grid.nodes[idx] + (rng.random(size) - 0.5) * grid.step


def _draw_one(model: CorruptionModel, n, rng):
    if model.kind is CorruptionKind.MIXTURE_OUTLIER:
        x = model.family.sample(rng, n, model.theta_star)
        hit = rng.random(n) < model.alpha
        x[hit] = model.theta_star + model.offset
        return x
    if model.kind is CorruptionKind.LEAST_FAVORABLE_MINUS:
        q = model._pair.q_minus
        _, z = _grid_draw(q.weights, q.grid, n, rng)
        return model.theta_star + model.delta + z
    _, x = _grid_draw(model.table.weights, model.table.grid, n, rng)
    return x


def sample(model: CorruptionModel, n: int, seed: int, trial: int = 0) -> np.ndarray:
    """``n`` i.i.d. draws from the corrupted distribution, reproducible per seed.

    Gridded kinds are drawn by inverse CDF on the grid with uniform jitter
    inside each cell.
    """
    return _draw_one(model, int(n), _rng(seed, n, trial))


def sample_many(model, n, trials, seed):
    return np.stack([_draw_one(model, n, _rng(seed, n, t)) for t in range(trials)])


def _tilted_many(model: CorruptionModel, n, trials, seed):
    """Draws from ``p_hat*`` with log-likelihood ratios back to ``q-*``."""
    pair = model._pair
    qm, ps = pair.q_minus.weights, pair.p_hat_star.weights
    grid = pair.q_minus.grid
    with np.errstate(divide="ignore"):
        log_ratio = np.log(qm) - np.log(ps)
    xs = np.empty((trials, n))
    logw = np.empty(trials)
    for t in range(trials):
        idx, z = _grid_draw(ps, grid, n, _rng(seed, n, t))
        xs[t] = model.theta_star + model.delta + z
        logw[t] = log_ratio[idx].sum()
    return xs, logw


# ---------------------------------------------------------------------------
# set estimators


@dataclass(frozen=True)
class HuberInterval:
    """``[E - delta, E + delta]`` with the least-favorable Huber estimator at ``(delta, alpha)``."""

    delta: float
    alpha: float
    name: str = "huber"


@dataclass(frozen=True)
class MedianInterval:
    delta: float
    name: str = "median"


@dataclass(frozen=True)
class MeanInterval:
    delta: float
    name: str = "mean"


@dataclass(frozen=True)
class DroRegion:
    """Gridded KL-TV region; ``theta*`` is covered iff its resolution is at most ``r``."""

    r: float
    alpha: float
    grid: Grid
    name: str = "dro"


def _misses(estimator, family, theta_star, xs):
    if isinstance(estimator, DroRegion):
        out = np.empty(xs.shape[0], dtype=bool)
        for t, x in enumerate(xs):
            p = DiscreteDistribution.from_sample(x, estimator.grid)
            out[t] = dro_resolution(p, family, theta_star, estimator.alpha) > estimator.r
        return out
    if isinstance(estimator, HuberInterval):
        phi = huber_from_alpha(family, estimator.delta, estimator.alpha)
    elif isinstance(estimator, MedianInterval):
        phi = InfluenceFunction.sign()
    elif isinstance(estimator, MeanInterval):
        phi = InfluenceFunction.mean()
    else:
        raise DomainError(f"unknown set estimator {estimator!r}")
    est = estimate_many(phi, xs)
    return np.abs(est - theta_star) > estimator.delta


@dataclass(frozen=True)
class TrialReport:
    """Failure statistics at one sample size.

    ``rate`` is a plain frequency, or a likelihood-ratio weighted estimate
    when ``method == "importance"``; ``failures`` always counts raw misses.
    ``exponent_estimate`` is ``-log(rate)/n`` and ``None`` when no failure
    was seen (the exponent is then only bounded below).
    """

    estimator: str
    n: int
    trials: int
    failures: int
    rate: float
    exponent_estimate: float | None
    seed: int
    std_error: float = 0.0
    method: str = "plain"

    @property
    def censored(self) -> bool:
        return self.exponent_estimate is None

    def to_row(self) -> dict:
        return {
            "estimator": self.estimator,
            "n": self.n,
            "trials": self.trials,
            "failures": self.failures,
            "rate": f"{self.rate:.6e}",
            "exponent_estimate": "censored" if self.censored else f"{self.exponent_estimate:.6f}",
            "seed": self.seed,
        }


def coverage_experiment(model: CorruptionModel, estimator, n_list=DEFAULT_NS, trials=DEFAULT_TRIALS,
                        seed: int = 0, importance: bool | None = None) -> list[TrialReport]:
    """Failure rates of ``estimator`` under ``model`` for each ``n``.

    ``importance`` defaults to on for the least-favorable adversary (and is
    only available there).
    """
    model.check()
    lf = model.kind is CorruptionKind.LEAST_FAVORABLE_MINUS
    importance = lf if importance is None else importance
    if importance and not lf:
        raise DomainError("importance sampling is only available for the least-favorable adversary")
    reports = []
    for n in n_list:
        if importance:
            xs, logw = _tilted_many(model, n, trials, seed)
        else:
            xs, logw = sample_many(model, n, trials, seed), np.zeros(trials)
        miss = _misses(estimator, model.family, model.theta_star, xs)
        contrib = np.where(miss, np.exp(logw), 0.0)
        rate = float(contrib.mean())
        se = float(contrib.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        expo = -math.log(rate) / n if rate > 0 else None
        reports.append(TrialReport(estimator.name, int(n), int(trials), int(miss.sum()), rate, expo,
                                   int(seed), se, "importance" if importance else "plain"))
    return reports


def fit_slope(reports) -> float | None:
    """Least-squares slope of ``log(rate)`` against ``n``; ``None`` if any rate is zero."""
    if any(r.rate <= 0 for r in reports):
        return None
    n = np.array([r.n for r in reports], dtype=float)
    y = np.log([r.rate for r in reports])
    return float(np.polyfit(n, y, 1)[0])


def write_reports_csv(reports, path_or_file):
    cols = ["estimator", "n", "trials", "failures", "rate", "exponent_estimate", "seed"]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow(r.to_row())
    finally:
        if own:
            fh.close()

"""Phase diagrams over the ``(r, alpha)`` plane.

Every cell gets the worst-case radius ``kappa``, the almost-sure radius
``kappa'`` and a regime label. ``kappa`` is cheap and is computed per cell.
``kappa'`` needs an almost-sure solve per separation, so each ``alpha`` row
tabulates ``delta -> r'(delta)`` once on a graded separation schedule and
inverts the tabulated curve by linear interpolation for every ``r`` in the row.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .almost_sure import almost_sure_value, default_as_grid, rbar_prime
from .least_favorable import check_alpha, check_monotone
from .numerics import parallel_map
from .radius import (CAP_SIGMAS, INF_TOL, INFINITE, PhasePoint, Radius, classify, median_regime_radius,
                     worst_case_radius)

PHASE_GRID_N = 201
# (upper end, step) pairs in scale units: fine where radii are small, coarse in the saturated tail
SCHEDULE = ((3.0, 0.1), (8.0, 0.5), (CAP_SIGMAS, 2.0))
CURVE_MONOTONE_TOL = 1e-5
CSV_COLUMNS = ["r", "alpha", "kappa", "kappa_prime", "regime"]


@dataclass(frozen=True)
class ASCurve:
    """Tabulated almost-sure resolution curve for one ``alpha``."""

    alpha: float
    deltas: np.ndarray
    values: np.ndarray

    def invert(self, r: float, cap: float) -> Radius:
        """Largest ``delta`` with ``r'(delta) <= r``, interpolated between nodes."""
        above = np.nonzero(self.values > r)[0]
        if above.size == 0:
            return Radius(math.inf, float(cap), cap_hit=True)
        j = int(above[0])
        if j == 0:
            return Radius(float(self.deltas[0]), float(self.deltas[0]))
        d0, d1 = self.deltas[j - 1], self.deltas[j]
        v0, v1 = self.values[j - 1], self.values[j]
        d = d0 + (d1 - d0) * (r - v0) / (v1 - v0)
        return Radius(float(d), float(d))


def _schedule(start: float, scale: float, cap: float):
    d = start
    for end, step in SCHEDULE:
        end = min(end * scale, cap)
        while d < end - 1e-12:
            d = min(d + step * scale, end)
            yield d


def almost_sure_curve(family, alpha: float, target: float, grid_n: int = PHASE_GRID_N,
                      delta_max: float | None = None) -> ASCurve:
    """Tabulate ``r'(delta)`` from ``kappa_{0,alpha}`` until it exceeds ``target``.

    Raises
    ------
    MonotonicityError
        If the tabulated curve decreases by more than ``1e-5``.
    """
    alpha = check_alpha(alpha)
    cap = CAP_SIGMAS * family.scale if delta_max is None else float(delta_max)
    start = median_regime_radius(family, alpha)
    deltas, values = [start], [0.0]
    for d in _schedule(start, family.scale, cap):
        v = almost_sure_value(family, d, alpha, default_as_grid(family, d, grid_n))
        deltas.append(d)
        values.append(v)
        if v > target:
            break
    check_monotone(deltas, values, tol=CURVE_MONOTONE_TOL)
    return ASCurve(alpha, np.asarray(deltas), np.asarray(values))


def _row(family, alpha, r_grid, grid_n, cap):
    kappas = [worst_case_radius(family, r, alpha, delta_max=cap) for r in r_grid]
    threshold = rbar_prime(alpha) - INF_TOL
    finite = [r for r in r_grid if 0 < r < threshold]
    curve = almost_sure_curve(family, alpha, max(finite), grid_n, cap) if finite else None
    points = []
    for r, kappa in zip(r_grid, kappas):
        if r == 0:
            kp = Radius(kappa.value, kappa.achieved_at)
        elif r >= threshold:
            kp = INFINITE
        else:
            kp = curve.invert(r, cap)
        points.append(PhasePoint(float(r), alpha, kappa, kp, classify(r, alpha, kappa, kp)))
    return points


def phase_diagram(family, r_grid, alpha_grid, grid_n: int = PHASE_GRID_N,
                  delta_max: float | None = None) -> list[PhasePoint]:
    """Phase cells for every ``(r, alpha)`` pair, ordered by ``alpha`` then ``r``.

    Rows are independent and run in parallel (see ``ROBUST_RESOLVE_THREADS``).
    """
    r_grid = [float(r) for r in r_grid]
    if any(r < 0 for r in r_grid):
        raise ValueError("resolutions must be nonnegative")
    alphas = [check_alpha(a) for a in alpha_grid]
    cap = CAP_SIGMAS * family.scale if delta_max is None else float(delta_max)
    rows = parallel_map(lambda a: _row(family, a, r_grid, grid_n, cap), alphas)
    return [p for row in rows for p in row]


def write_phase_csv(points, path_or_file):
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for p in points:
            w.writerow(p.to_row())
    finally:
        if own:
            fh.close()

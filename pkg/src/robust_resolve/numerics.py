"""Shared numerical kernels.

Uniform real grids, composite trapezoid quadrature, bracketed root finding,
and the two families of solvers used for the KL/TV programs:

* :func:`minimize_concave_on_polytope`, a generic projected-gradient method over
  the probability simplex intersected with a total-variation ball, and
* :func:`kl_project_second` / :func:`kl_project_first`, exact solvers for the
  two KL projections onto a TV ball, which have a closed "clip" form.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .exceptions import Infeasible, IntegrandError, NoRoot, Unconverged

ROOT_TOL = 1e-10
OPT_TOL = 1e-7
MAX_ITER = 100_000
METRIC_FLOOR = 1e-300
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class Grid:
    """Uniformly spaced nodes ``lo + i * step`` for ``i = 0 .. n-1``."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("grid endpoints must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"grid needs at least 3 nodes, got n={self.n}")

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "Grid":
        return cls(-float(half_width), float(half_width), int(n))

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def is_symmetric(self) -> bool:
        return self.lo == -self.hi

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.lo + self.step * np.arange(self.n)
        x[-1] = self.hi
        if self.is_symmetric:
            # exact antisymmetry: node(n-1-i) == -node(i) bit for bit
            x = 0.5 * (x - x[::-1])
        x.flags.writeable = False
        return x

    def node(self, i: int) -> float:
        return float(self.nodes[i])

    def nearest_index(self, x) -> np.ndarray:
        idx = np.rint((np.asarray(x, dtype=float) - self.lo) / self.step)
        return np.clip(idx, 0, self.n - 1).astype(int)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "n": self.n}


def _node_values(f, nodes: np.ndarray) -> np.ndarray:
    if callable(f):
        values = np.asarray(f(nodes), dtype=float)
        if values.shape != nodes.shape:
            values = np.broadcast_to(values, nodes.shape).astype(float)
    else:
        values = np.asarray(f, dtype=float)
        if values.shape != nodes.shape:
            raise ValueError("node values do not match the grid")
    if not np.all(np.isfinite(values)):
        bad = nodes[~np.isfinite(values)]
        raise IntegrandError(
            f"integrand not finite at {bad.size} node(s), first at x={bad[0]:.6g}; "
            "check the integrand or widen/shrink the grid"
        )
    return values


def integrate(f, grid: Grid) -> float:
    """Composite trapezoid rule of ``f`` over ``[grid.lo, grid.hi]``.

    ``f`` is either a vectorized callable or an array of node values.
    """
    v = _node_values(f, grid.nodes)
    inner = v.sum() - 0.5 * (v[0] + v[-1])
    return float((grid.hi - grid.lo) * inner / (grid.n - 1))


def trapezoid(values: np.ndarray, nodes: np.ndarray) -> float:
    """Trapezoid rule on arbitrary increasing nodes (used after kink insertion)."""
    v = _node_values(values, np.asarray(nodes, dtype=float))
    return float(np.trapezoid(v, nodes))


def kinked_quadrature(lo: float, hi: float, n: int, kinks=()) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson on ``[lo, hi]`` split at ``kinks``.

    Each smooth piece gets uniform nodes, about ``n`` in total, so integrands
    that are only piecewise smooth keep fourth-order accuracy. ``w @ f(x)``
    approximates the integral. Symmetric inputs give exactly antisymmetric nodes.
    """
    kinks = np.asarray(kinks, dtype=float)
    brk = np.unique(np.concatenate([[lo], kinks[(kinks > lo) & (kinks < hi)], [hi]]))
    xs, ws = [], []
    for a, b in zip(brk[:-1], brk[1:]):
        m = max(2, int(np.ceil((n - 1) * (b - a) / (hi - lo))))
        m += m % 2
        t = np.linspace(a, b, m + 1)
        w = np.full(m + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= (b - a) / (3 * m)
        if xs:
            ws[-1][-1] += w[0]
            t, w = t[1:], w[1:]
        xs.append(t)
        ws.append(w)
    x, w = np.concatenate(xs), np.concatenate(ws)
    if np.allclose(brk, -brk[::-1], rtol=0, atol=1e-12 * max(1.0, hi)):
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
    return x, w


def find_root(f: Callable[[float], float], bracket: Sequence[float], tol: float = ROOT_TOL) -> float:
    """Root of a monotone scalar function inside ``bracket``.

    Raises :class:`NoRoot` when ``f`` does not change sign on the bracket.
    Flat stretches are fine as long as the endpoints have opposite signs.
    """
    a, b = float(bracket[0]), float(bracket[1])
    if a > b:
        a, b = b, a
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if not (np.isfinite(fa) and np.isfinite(fb)) or np.sign(fa) == np.sign(fb):
        raise NoRoot(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}", fa, fb)
    x = brentq(f, a, b, xtol=tol / 4, rtol=4 * np.finfo(float).eps, maxiter=1000)
    return float(min(max(x, a), b))


def bisect_boundary(inside: Callable[[float], bool], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` around the switch of a monotone predicate.

    Requires ``inside(lo)`` true and ``inside(hi)`` false; returns the final
    bracket, which keeps that invariant and has width at most ``tol``.
    """
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def parallel_map(fn, items: Iterable, threads: int | None = None) -> list:
    """Order-preserving map, parallel up to ``ROBUST_RESOLVE_THREADS`` workers."""
    items = list(items)
    if threads is None:
        env = os.environ.get("ROBUST_RESOLVE_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    threads = max(1, min(threads, len(items)))
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# projections


def project_simplex(y: np.ndarray, caps: np.ndarray | None = None) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum x = 1}`` (optionally ``x <= caps``)."""
    y = np.asarray(y, dtype=float)
    if caps is None:
        u = np.sort(y)[::-1]
        css = np.cumsum(u) - 1.0
        k = np.arange(1, y.size + 1)
        rho = np.nonzero(u - css / k > 0)[0][-1]
        tau = css[rho] / (rho + 1)
        return np.maximum(y - tau, 0.0)
    caps = np.asarray(caps, dtype=float)
    if caps.sum() < 1.0 - 1e-12:
        raise Infeasible("caps sum to less than one")
    lo, hi = np.min(y - caps) - 1.0, np.max(y) + 1.0
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        s = np.clip(y - tau, 0.0, caps).sum()
        if s > 1.0:
            lo = tau
        else:
            hi = tau
    return np.clip(y - 0.5 * (lo + hi), 0.0, caps)


def _pull_into_ball(x, reference, alpha):
    tv = 0.5 * np.abs(x - reference).sum()
    if tv <= alpha:
        return x
    return reference + (x - reference) * (alpha / tv)


def _prox_point(y, reference, caps, lam, mu, d=1.0):
    z = y - d * mu - reference
    x = reference + np.sign(z) * np.maximum(np.abs(z) - d * lam, 0.0)
    return np.clip(x, 0.0, caps if caps is not None else np.inf)


def _mass_multiplier(y, reference, caps, lam, d=1.0):
    """``mu`` with ``sum(_prox_point(..., lam, mu, d)) = 1``.

    The mass is piecewise linear and nonincreasing in ``mu``; locate the piece
    by binary search over its breakpoints and interpolate exactly.
    """
    d = np.broadcast_to(d, y.shape)
    parts = [(y - reference) / d - lam, (y - reference) / d + lam, y / d + lam]
    if caps is not None:
        parts.append((y - caps) / d - lam)
    bps = np.unique(np.concatenate(parts))

    def mass(mu):
        return _prox_point(y, reference, caps, lam, mu, d).sum()

    s0 = mass(bps[0])
    if s0 <= 1.0:
        # below every breakpoint each coordinate is either capped or has slope -d
        return bps[0] if caps is not None else bps[0] - (1.0 - s0) / d.sum()
    lo, hi = 0, bps.size - 1  # mass(bps[lo]) > 1 >= mass(bps[hi])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mass(bps[mid]) > 1.0:
            lo = mid
        else:
            hi = mid
    s_lo, s_hi = mass(bps[lo]), mass(bps[hi])
    return bps[lo] + (bps[hi] - bps[lo]) * (s_lo - 1.0) / (s_lo - s_hi)


def project_simplex_tv(y, reference, alpha, caps=None, metric=None):
    """Projection onto the simplex (optionally capped) intersected with a TV ball.

    Minimizes ``sum((x - y)**2 / metric)``; the default unit metric gives the
    Euclidean projection. Given the multipliers ``lam`` (TV) and ``mu`` (mass),
    the projection is separable: a soft-threshold of width ``metric * lam``
    around ``reference`` clipped to ``[0, caps]``. ``mu`` is located exactly on
    its piecewise-linear mass curve and ``lam`` by Brent's method. A final pull
    toward ``reference`` removes any residual TV excess left by rounding.
    """
    y = np.asarray(y, dtype=float)
    reference = np.asarray(reference, dtype=float)
    d = np.ones_like(y) if metric is None else np.maximum(np.asarray(metric, dtype=float), METRIC_FLOOR)
    radius = 2.0 * alpha

    def solve(lam):
        x = _prox_point(y, reference, caps, lam, _mass_multiplier(y, reference, caps, lam, d), d)
        return x, np.abs(x - reference).sum()

    x, dist = solve(0.0)
    if dist > radius:
        hi = max(1.0, np.max(np.abs(y - reference) / d))
        while solve(hi)[1] > radius:
            hi *= 2.0
        lam = brentq(lambda t: solve(t)[1] - radius, 0.0, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps)
        x, _ = solve(lam)
    x = x / x.sum()
    return _pull_into_ball(x, reference, alpha)


def linear_max_on_polytope(g, reference, alpha, caps=None):
    """Maximizer of ``g . y`` over the simplex (with caps) intersected with a TV ball.

    Greedy: take ``alpha`` of mass from ``reference`` where ``g`` is smallest
    and place it where ``g`` is largest, respecting the caps.
    """
    y = np.array(reference, dtype=float)
    caps = np.full_like(y, np.inf) if caps is None else np.asarray(caps, dtype=float)
    up = np.argsort(g, kind="stable")
    avail = y[up]
    taken = np.clip(alpha - (np.cumsum(avail) - avail), 0.0, avail)
    y[up] -= taken
    down = up[::-1]
    room = np.maximum(caps[down] - y[down], 0.0)
    before = np.concatenate([[0.0], np.cumsum(room)[:-1]])
    y[down] += np.clip(taken.sum() - before, 0.0, room)
    return y


def minimize_concave_on_polytope(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    reference: np.ndarray,
    alpha: float,
    x0: np.ndarray | None = None,
    caps: np.ndarray | None = None,
    tol: float = OPT_TOL,
    max_iter: int = MAX_ITER,
    scaling: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Maximize a smooth concave ``objective`` over ``{simplex, TV(x, reference) <= alpha}``.

    Despite the name (kept for interface stability) the solver *ascends*: pass
    a concave objective such as ``sum(p * log(q))``. This is the same as
    minimizing the convex negation.

    Projected gradient ascent with backtracking; projections are exact
    (see :func:`project_simplex_tv`). Stops when the Frank-Wolfe duality gap
    ``max_y g . (y - x)``, an upper bound on the suboptimality, drops below
    ``tol`` (or the iterate is a fixed point of the projected step).

    ``scaling(x)`` optionally returns a positive diagonal preconditioner; steps
    are then ``x + t * scaling(x) * g`` projected in the matching metric. The
    inverse of the objective's curvature turns the method into a projected
    diagonal Newton iteration, which copes with badly scaled objectives.

    Raises
    ------
    Infeasible
        If ``alpha < 0`` or the caps exclude the simplex.
    Unconverged
        If ``max_iter`` iterations pass without meeting ``tol``.
    """
    reference = np.asarray(reference, dtype=float)
    if alpha < 0:
        raise Infeasible(f"TV radius must be nonnegative, got {alpha}")
    if caps is not None and np.sum(caps) < 1.0 - 1e-12:
        raise Infeasible("caps sum to less than one")
    if alpha == 0:
        return reference.copy()

    def project(z, metric=None):
        return project_simplex_tv(z, reference, alpha, caps, metric)

    def value(z):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = objective(z)
        return v if np.isfinite(v) else -np.inf

    x = project(reference if x0 is None else x0)
    fx = value(x)
    if not np.isfinite(fx):
        # mix toward the start point that has finite objective, if any
        for s in (0.5, 0.9, 0.99):
            cand = project((1 - s) * reference + s * project(np.full_like(reference, 1 / reference.size)))
            if np.isfinite(value(cand)):
                x, fx = cand, value(cand)
                break
    step = 1.0
    gap = np.inf
    for _ in range(max_iter):
        g = gradient(x)
        gap = float(g @ (linear_max_on_polytope(g, reference, alpha, caps) - x))
        if gap <= tol:
            return x
        metric = None if scaling is None else np.maximum(scaling(x), METRIC_FLOOR)
        direction = g if metric is None else metric * g
        s = 1.0 / max(np.abs(direction).max(), 1e-300)
        if np.abs(project(x + s * direction, metric) - x).sum() <= tol * 1e-3:
            return x
        while True:
            x_new = project(x + step * direction, metric)
            d = x_new - x
            norm2 = d @ d if metric is None else d @ (d / metric)
            f_new = value(x_new)
            if f_new >= fx + g @ d - norm2 / (2 * step) or step < 1e-18:
                break
            step *= 0.5
        if f_new < fx and step < 1e-18:
            break
        x, fx = x_new, f_new
        step *= 2.0
    raise Unconverged("projected gradient did not converge", iterate=x, gap=gap)


# ---------------------------------------------------------------------------
# exact KL projections onto a TV ball


def _raise_level(m, ref, budget):
    """``l`` with ``sum_i (l m_i - ref_i)^+ = budget`` over nodes with ``m_i > 0``."""
    with np.errstate(over="ignore"):
        t = ref / m  # denormal m gives inf: such nodes are never raised first
    order = np.argsort(t, kind="stable")
    t, w, r = t[order], m[order], ref[order]
    cw, cr = np.cumsum(w), np.cumsum(r)
    lift = t * cw - cr
    k = int(np.clip(np.searchsorted(lift, budget, side="left"), 1, t.size))
    return (budget + cr[k - 1]) / cw[k - 1]


def _lower_level(m, ref, budget):
    """``u`` with ``sum_i (ref_i - u m_i)^+ = budget`` over nodes with ``m_i > 0``."""
    with np.errstate(over="ignore"):
        t = ref / m
    order = np.argsort(-t, kind="stable")
    t, w, r = t[order], m[order], ref[order]
    cw, cr = np.cumsum(w), np.cumsum(r)
    drop = cr - t * cw
    k = int(np.clip(np.searchsorted(drop, budget, side="left"), 1, t.size))
    with np.errstate(over="ignore"):
        return max((cr[k - 1] - budget) / cw[k - 1], 0.0)


def _clip_projection(m, ref, alpha, *, free_zero_nodes):
    m = np.asarray(m, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if alpha < 0:
        raise Infeasible(f"TV radius must be nonnegative, got {alpha}")
    if 0.5 * np.abs(m - ref).sum() <= alpha:
        return m.copy()
    if alpha == 0:
        return ref.copy()
    pos = m > 0
    zero_mass = ref[~pos].sum()
    out = np.zeros_like(ref)
    mp, rp = m[pos], ref[pos]
    if zero_mass >= alpha:
        if not free_zero_nodes:
            raise Infeasible("reference mass off the support exceeds the TV budget")
        # whole down-budget spent where m vanishes; KL is indifferent there
        out[~pos] = ref[~pos] * (1.0 - alpha / zero_mass)
        lo = _raise_level(mp, rp, alpha)
        out[pos] = np.maximum(rp, lo * mp)
    else:
        lo = _raise_level(mp, rp, alpha)
        hi = _lower_level(mp, rp, alpha - zero_mass)
        out[pos] = np.clip(rp, lo * mp, hi * mp)
    return out / out.sum()


def kl_project_second(p: np.ndarray, reference: np.ndarray, alpha: float) -> np.ndarray:
    """``argmin_q KL(p, q)`` subject to ``TV(q, reference) <= alpha``.

    The minimizer is ``clip(reference, l p, u p)`` for scalars ``l <= 1 <= u``
    chosen so that exactly ``alpha`` mass is added and removed.
    """
    return _clip_projection(p, reference, alpha, free_zero_nodes=True)


def kl_project_first(m: np.ndarray, reference: np.ndarray, alpha: float) -> np.ndarray:
    """``argmin_p KL(p, m)`` subject to ``TV(p, reference) <= alpha``.

    Same clip structure as :func:`kl_project_second`. Raises
    :class:`Infeasible` when every point of the ball has infinite KL.
    """
    return _clip_projection(m, reference, alpha, free_zero_nodes=False)


def safe_log(x):
    return np.log(np.maximum(x, LOG_FLOOR))

"""Almost-sure resolution and radius.

The almost-sure program restricts the observed distribution ``P`` to lie within
TV distance ``alpha`` of some family member ``P_theta``:

    r'(delta) = min_theta min_{P, Q-, Q+} max(KL(P, Q-), KL(P, Q+))
                s.t. TV(Q-, P_{-delta}) <= alpha, TV(Q+, P_{+delta}) <= alpha,
                     TV(P, P_theta) <= alpha.

For fixed ``theta`` the program is jointly convex. We solve its Lagrangian
dual in the weight ``w`` on the two KL terms (the concave dual is maximized by
a root search on its derivative ``KL(P, Q-) - KL(P, Q+)``),

    h(w) = min_{P, Q-, Q+} w KL(P, Q-) + (1 - w) KL(P, Q+),

by block-coordinate descent: the ``Q`` blocks and the ``P`` block each have an
exact clip-form solution. ``max_w h(w)`` is a certified lower bound and
``max(KL(P, Q-), KL(P, Q+))`` at the recovered point an upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .divergences import DiscreteDistribution, kl_weights
from .exceptions import Unconverged
from .least_favorable import build_pair, check_alpha, check_delta, overlap_threshold
from .numerics import Grid, kl_project_first, kl_project_second, parallel_map
from .radius import CAP_SIGMAS, INF_TOL, INFINITE, Radius, invert_curve, median_regime_radius, worst_case_radius

AS_GRID_N = 801
AS_SPAN_SIGMAS = 8.0
THETA_SCAN = 11
BCD_TOL = 1e-11
BCD_MAX_ITER = 5000
STALL_TOL = 1e-14
W_TOL = 1e-6
GAP_TOL = 1e-4
KAPPA_TOL = 1e-3


def rbar_prime(alpha: float) -> float:
    """Almost-sure unreachable threshold ``(1-a) log((1-a)/a) + a log(a/(1-a))``.

    ``inf`` at ``alpha = 0``.
    """
    alpha = check_alpha(alpha)
    if alpha == 0:
        return math.inf
    return (1 - alpha) * math.log((1 - alpha) / alpha) + alpha * math.log(alpha / (1 - alpha))


@dataclass(frozen=True, eq=False)
class AlmostSureSolution:
    """Solution of the almost-sure program at one separation ``delta``.

    ``gap`` is the certified duality gap at ``theta_witness``; ``profile``
    holds the ``(theta, value)`` pairs evaluated during the search.
    """

    delta: float
    alpha: float
    r_prime: float
    theta_witness: float
    p_hat: DiscreteDistribution
    q_minus: DiscreteDistribution
    q_plus: DiscreteDistribution
    gap: float = 0.0
    profile: list = field(default_factory=list)


@dataclass
class _FixedTheta:
    value: float
    lower: float
    w: float
    p: np.ndarray
    qm: np.ndarray
    qp: np.ndarray


def _geometric_mix(qm, qp, w):
    with np.errstate(divide="ignore"):
        lm, lp = np.log(qm), np.log(qp)
    if w == 1.0:
        lg = lm
    elif w == 0.0:
        lg = lp
    else:
        lg = w * lm + (1 - w) * lp
    top = lg[np.isfinite(lg)].max()
    m = np.exp(lg - top)
    s = m.sum()
    return m / s, top + math.log(s)


def _bcd(w, ref0, refm, refp, alpha, p0, tol=BCD_TOL, max_iter=BCD_MAX_ITER):
    """Minimize ``w KL(P,Q-) + (1-w) KL(P,Q+)`` by alternating exact block steps.

    Stops when ``P`` stops moving or, since each sweep can only lower the
    objective, when a sweep lowers it by less than rounding noise.
    """
    p = p0
    h_prev = math.inf
    for _ in range(max_iter):
        qm = kl_project_second(p, refm, alpha)
        qp = kl_project_second(p, refp, alpha)
        h = w * kl_weights(p, qm) + (1 - w) * kl_weights(p, qp)
        m, _ = _geometric_mix(qm, qp, w)
        p_new = kl_project_first(m, ref0, alpha)
        moved = np.abs(p_new - p).sum()
        p = p_new
        if moved < tol or h_prev - h <= STALL_TOL * max(1.0, abs(h)):
            break
        h_prev = h
    qm = kl_project_second(p, refm, alpha)
    qp = kl_project_second(p, refp, alpha)
    km, kp = kl_weights(p, qm), kl_weights(p, qp)
    return w * km + (1 - w) * kp, p, qm, qp, km, kp


def _solve_fixed_theta(refs, alpha, p0, symmetric):
    ref0, refm, refp = refs
    if symmetric:
        # the two KL terms trade places under reflection, so w = 1/2
        h, p, qm, qp, km, kp = _bcd(0.5, ref0, refm, refp, alpha, p0)
        return _FixedTheta(max(km, kp), h, 0.5, p, qm, qp)
    cache = {"p": p0}

    def slope(w):
        # h'(w) = KL(P, Q-) - KL(P, Q+) at the block minimizer (Danskin)
        _, p, _, _, km, kp = _bcd(w, ref0, refm, refp, alpha, cache["p"])
        cache["p"] = p
        return km - kp

    # bracket the root of h' by stepping from w = 1/2 toward the side it points to;
    # the extreme weights are where block descent is slowest, so touch them last
    seen = {0.5: slope(0.5)}
    toward = 1.0 if seen[0.5] > 0 else 0.0
    inner, w = 0.5, None
    for step in (0.25, 0.125, 0.0625, 0.03125, 0.0):
        probe = toward - step if toward == 1.0 else toward + step
        seen[probe] = slope(probe)
        if (seen[probe] > 0) != (seen[inner] > 0) or seen[probe] == 0:
            lo, hi = sorted((inner, probe))
            # memoized: warm starts make repeated solves differ in the last digits
            w = brentq(lambda t: seen[t] if t in seen else slope(t), lo, hi, xtol=W_TOL)
            break
        inner = probe
    if w is None:
        w = toward
    h, p, qm, qp, km, kp = _bcd(w, ref0, refm, refp, alpha, cache["p"])
    return _FixedTheta(max(km, kp), h, w, p, qm, qp)


def _refs(family, grid, delta, theta):
    def disc(c):
        return DiscreteDistribution.from_family(family, c, grid).weights

    return disc(theta), disc(-delta), disc(delta)


def _starts(family, grid, delta, alpha, theta, refs):
    """Initial ``P``: the member itself, the corrupted mixture, and the
    least-favorable midpoint when it lies in the ball."""
    ref0, refm, refp = refs
    starts = [ref0]
    mix = (1 - alpha) * refp + alpha * refm if theta >= 0 else (1 - alpha) * refm + alpha * refp
    starts.append(kl_project_first(mix, ref0, alpha) if alpha > 0 else ref0)
    if alpha > 0:
        pair = build_pair(family, delta, alpha, grid)
        star = pair.p_hat_star.weights
        if 0.5 * np.abs(star - ref0).sum() <= alpha:
            starts.append(star)
    return starts


def default_as_grid(family, delta: float, n: int = AS_GRID_N) -> Grid:
    return family.default_grid(delta, n=n, span=AS_SPAN_SIGMAS * family.scale)


def _log_masses(family, theta, grid):
    lw = family.log_density(theta, grid.nodes)
    return lw - np.logaddexp.reduce(lw)


def _uncorrupted(family, delta, grid):
    # every ball is a point: P = P_theta, Q = P_{-+delta}; the larger KL is
    # smallest at theta = 0 by symmetry. Logs avoid far-tail underflow.
    l0 = _log_masses(family, 0.0, grid)
    lp = _log_masses(family, delta, grid)
    p0 = np.exp(l0)
    value = float(max(np.sum(p0 * (l0 - lp)), 0.0))
    p = DiscreteDistribution(grid, p0 / p0.sum())
    qm = DiscreteDistribution.from_log_weights(grid, _log_masses(family, -delta, grid))
    qp = DiscreteDistribution.from_log_weights(grid, lp)
    return AlmostSureSolution(delta, 0.0, value, 0.0, p, qm, qp, 0.0, [(0.0, value)])


def almost_sure_resolution(family, delta: float, alpha: float, grid: Grid | None = None,
                           theta_grid=None, restarts: bool = True) -> AlmostSureSolution:
    """Solve the almost-sure program at separation ``delta``.

    ``theta`` is scanned over ``theta_grid`` (by default 11 points on
    ``[0, delta]``, the profile being even in ``theta``) and the best cell is
    refined by golden-section search. The final ``theta`` is re-solved from
    three starting points and the best certified solution kept.

    Raises
    ------
    Unconverged
        If the duality gap at the returned point exceeds ``1e-4``.
    """
    alpha = check_alpha(alpha)
    delta = check_delta(delta)
    grid = default_as_grid(family, delta) if grid is None else grid
    if overlap_threshold(family, delta) <= alpha or delta == 0:
        lmix = np.logaddexp(family.log_g(grid.nodes + delta), family.log_g(grid.nodes - delta))
        mix = DiscreteDistribution.from_log_weights(grid, lmix)
        return AlmostSureSolution(delta, alpha, 0.0, delta, mix, mix, mix)

    if alpha == 0:
        return _uncorrupted(family, delta, grid)

    cache = {}

    def solve(theta, p0=None):
        theta = float(theta)
        if theta not in cache:
            refs = _refs(family, grid, delta, theta)
            start = refs[0] if p0 is None else p0
            cache[theta] = _solve_fixed_theta(refs, alpha, start, symmetric=(theta == 0.0 and grid.is_symmetric))
        return cache[theta]

    thetas = np.linspace(0.0, delta, THETA_SCAN) if theta_grid is None else np.asarray(theta_grid, float)
    values = [solve(t).value for t in parallel_map(lambda t: t, thetas)]
    j = int(np.argmin(values))
    theta_best = float(thetas[j])
    if theta_grid is None and 0 < j:
        lo = thetas[j - 1]
        hi = thetas[min(j + 1, thetas.size - 1)]
        res = minimize_scalar(lambda t: solve(t).value, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-3 * max(delta, 1.0)})
        if solve(res.x).value < solve(theta_best).value:
            theta_best = float(res.x)

    best = solve(theta_best)
    if restarts:
        refs = _refs(family, grid, delta, theta_best)
        for p0 in _starts(family, grid, delta, alpha, theta_best, refs):
            cand = _solve_fixed_theta(refs, alpha, p0, symmetric=(theta_best == 0.0 and grid.is_symmetric))
            if cand.value < best.value:
                best = cand
    gap = max(best.value - best.lower, 0.0)
    profile = sorted((t, s.value) for t, s in cache.items())
    sol = AlmostSureSolution(
        delta, alpha, best.value, theta_best,
        DiscreteDistribution.normalized(grid, best.p),
        DiscreteDistribution.normalized(grid, best.qm),
        DiscreteDistribution.normalized(grid, best.qp),
        gap, profile,
    )
    if gap > GAP_TOL:
        raise Unconverged(f"almost-sure solve at delta={delta} left gap {gap:.3g}", iterate=sol, gap=gap)
    return sol


def almost_sure_value(family, delta, alpha, grid=None) -> float:
    """``r'^alpha(delta)`` alone."""
    return almost_sure_resolution(family, delta, alpha, grid).r_prime


def almost_sure_radius(family, r: float, alpha: float, grid_n: int = AS_GRID_N,
                       delta_max: float | None = None, tol: float = KAPPA_TOL) -> Radius:
    """``kappa'_{r,alpha} = sup{delta : r'^alpha(delta) <= r}``.

    Infinite when ``r >= rbar_prime(alpha) - 1e-4`` or when the search cap
    (default twenty scale units) is reached. The search interval is
    ``[kappa_{0,alpha}, kappa_{r,alpha}]`` when the worst-case radius is finite,
    since the extra constraint can only raise the resolution.
    """
    r = float(r)
    alpha = check_alpha(alpha)
    if r < 0:
        raise ValueError("resolution must be nonnegative")
    if r >= rbar_prime(alpha) - INF_TOL:
        return INFINITE
    lo = median_regime_radius(family, alpha)
    if r == 0:
        return Radius(float(lo), float(lo))
    cap = CAP_SIGMAS * family.scale if delta_max is None else float(delta_max)
    kappa = worst_case_radius(family, r, alpha)
    hi = min(kappa.value + 10 * tol, cap) if not kappa.is_infinite else cap

    def value(d):
        return almost_sure_value(family, d, alpha, default_as_grid(family, d, grid_n))

    delta, cap_hit = invert_curve(value, r, lo, hi, tol=tol, scan=5)
    if cap_hit:
        if hi < cap:
            return Radius(float(hi), float(hi))
        return Radius(math.inf, float(cap), cap_hit=True)
    return Radius(float(delta), float(delta))

"""Acceptance criteria, one test each, every test printing a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from oracles import FAMILIES, joint_oracle, lattice_best, lattice_best_first, random_feasible
from robust_resolve.almost_sure import almost_sure_radius, almost_sure_resolution, rbar_prime
from robust_resolve.divergences import DiscreteDistribution, bhattacharyya_exponent, kl, kl_weights, tv
from robust_resolve.dro_set import confidence_region, dro_resolution, mixture_p_hat, region_radius
from robust_resolve.estimators import InfluenceFunction, estimate, huber_from_alpha
from robust_resolve.least_favorable import build_pair, resolution
from robust_resolve.numerics import Grid, kl_project_first
from robust_resolve.phase import phase_diagram
from robust_resolve.radius import Regime, median_regime_radius, rbar, worst_case_radius
from robust_resolve.simulate import (CorruptionModel, HuberInterval, MeanInterval, MedianInterval,
                                     coverage_experiment, fit_slope)


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def close(label, got, want, tol):
    return f"{label} = {got:.6g}, want {want} +- {tol}", abs(got - want) <= tol


def test_criterion_01_worst_case_golden(verdict, normal):
    checks, total = [], 0.0
    for r, want, tol in [(0.43, 2.00, 0.05), (0.4, 1.80, 0.05), (0.05, 0.66, 0.03)]:
        k, dt = timed(worst_case_radius, normal, r, 0.1)
        total += dt
        checks += [close(f"kappa({r}, 0.1)", k.value, want, tol), (f"kappa({r}, 0.1) took {dt:.1f} s", dt < 30)]
    k, dt = timed(worst_case_radius, normal, 0.9, 0.1)
    total += dt
    checks += [(f"kappa(0.9, 0.1) = {k.value}, want inf", k.is_infinite), (f"kappa(0.9) took {dt:.1f} s", dt < 30)]
    verdict(1, "worst-case radius golden values", checks, total)


def test_criterion_02_almost_sure_golden(verdict, normal):
    checks, total = [], 0.0
    for r, want, tol in [(0.05, 0.66, 0.03), (0.4, 1.48, 0.05), (0.9, 2.27, 0.10)]:
        k, dt = timed(almost_sure_radius, normal, r, 0.1)
        total += dt
        checks += [close(f"kappa'({r}, 0.1)", k.value, want, tol), (f"kappa'({r}) took {dt:.1f} s", dt < 600)]
    verdict(2, "almost-sure radius golden values", checks, total)


def test_criterion_03_least_favorable_region(verdict, normal):
    start = time.perf_counter()
    p_hat = build_pair(normal, 2.0, 0.1).p_hat_star
    region = confidence_region(p_hat, normal, 0.43, 0.1, Grid(-4.0, 4.0, 321))
    checks = [(f"{len(region.intervals)} intervals, want 2", len(region.intervals) == 2)]
    if len(region.intervals) == 2:
        (a, b), (c, d) = region.intervals
        checks.append((f"disjoint: {b:.4f} < {c:.4f}", b < c))
        for label, got, want in zip("abcd", (a, b, c, d), (-2.0, -0.83, 0.83, 2.0)):
            checks.append(close(f"endpoint {label}", got, want, 0.05))
    checks.append(close("region radius", region_radius(region), 2.0, 0.05))
    verdict(3, "confidence region of the least-favorable midpoint", checks, time.perf_counter() - start)


def test_criterion_04_two_component_mixture(verdict, normal):
    start = time.perf_counter()
    p_hat = mixture_p_hat(normal, normal.default_grid(5.0), [0.7, 0.3], [0.0, 5.0])
    at_zero = dro_resolution(p_hat, normal, 0.0, 0.3)
    region = confidence_region(p_hat, normal, 0.4, 0.3, Grid(-4.0, 9.0, 261))
    checks = [(f"residual at 0 = {at_zero:.3g} <= 1e-4", at_zero <= 1e-4),
              (f"{len(region.intervals)} intervals, want 2", len(region.intervals) == 2)]
    if len(region.intervals) == 2:
        (a, b), (c, d) = region.intervals
        checks += [(f"left interval [{a:.3f}, {b:.3f}] contains 0", a <= 0.0 <= b), ("disjoint", b < c)]
    verdict(4, "two-component mixture region", checks, time.perf_counter() - start)


def test_criterion_05_closed_forms(verdict, normal):
    start = time.perf_counter()
    checks = []
    worst = max(abs(bhattacharyya_exponent(normal, d) - d * d / 2) for d in np.linspace(0.0, 4.0, 41))
    checks.append((f"max Bhattacharyya error {worst:.2e} <= 1e-5", worst <= 1e-5))
    for r in (0.01, 0.1, 0.43, 1.0, 2.0):
        checks.append(close(f"kappa({r}, 0)", worst_case_radius(normal, r, 0.0).value, math.sqrt(2 * r), 1e-3))
    checks += [close("rbar(0.1)", rbar(0.1), 0.510826, 1e-6), close("rbar'(0.1)", rbar_prime(0.1), 1.757780, 1e-6),
               close("median radius", median_regime_radius(normal, 0.1), 0.2533, 2e-3)]
    verdict(5, "closed-form cross-checks", checks, time.perf_counter() - start)


def test_criterion_06_oracle_equivalence(verdict, normal):
    start = time.perf_counter()
    checks = []
    # (a) discretized program at the least-favorable midpoint against the analytic value
    worst = 0.0
    for delta in (0.5, 1.0, 2.0, 3.0):
        for alpha in (0.05, 0.1, 0.2):
            pair = build_pair(normal, delta, alpha)
            r = resolution(normal, delta, alpha)
            worst = max(worst, *(abs(dro_resolution(pair.p_hat_star, normal, t, alpha) - r) for t in (-delta, delta)))
    checks.append((f"(a) max gap {worst:.2e} <= 5e-3", worst <= 5e-3))
    # (b) both projections against a simplex-lattice search on 3 nodes
    grid, worst = Grid(-1.0, 1.0, 3), 0.0
    rng = np.random.default_rng(0)
    for _ in range(4):
        p = DiscreteDistribution(grid, rng.dirichlet(np.ones(3)))
        theta, alpha = float(rng.uniform(-1, 1)), float(rng.uniform(0.02, 0.3))
        ref = DiscreteDistribution.from_family(normal, theta, grid).weights
        want = float(p.weights @ np.log(p.weights)) - lattice_best(p.weights, ref, alpha)
        for method in ("clip", "projected_gradient"):
            worst = max(worst, abs(dro_resolution(p, normal, theta, alpha, method) - want))
        m = rng.dirichlet(np.ones(3))
        got = kl_weights(kl_project_first(m, ref, alpha), m)
        worst = max(worst, abs(got - lattice_best_first(m, ref, alpha)))
    checks.append((f"(b) max lattice gap {worst:.2e} <= 1e-4", worst <= 1e-4))
    # (c) alternating almost-sure solver against a joint conic solve on a 41-node grid
    small, worst = Grid.symmetric(6.0, 41), 0.0
    for name, fam in FAMILIES.items():
        for delta, alpha in [(1.5, 0.1), (2.5, 0.2)]:
            thetas = [0.0, 0.3 * delta, delta]
            profile = dict(almost_sure_resolution(fam, delta, alpha, small, theta_grid=thetas).profile)
            worst = max(worst, *(abs(profile[t] - joint_oracle(fam, small, delta, alpha, t)) for t in thetas))
    checks.append((f"(c) max joint-solver gap {worst:.2e} <= 1e-3", worst <= 1e-3))
    verdict(6, "oracle equivalence", checks, time.perf_counter() - start)


def test_criterion_07_least_favorable_pair(verdict):
    start = time.perf_counter()
    checks = []
    for name, fam in FAMILIES.items():
        for delta, alpha in [(1.0, 0.1), (2.0, 0.1), (3.0, 0.2)]:
            tag = f"{name} delta={delta} alpha={alpha}"
            pair = build_pair(fam, delta, alpha)
            grid = pair.q_minus.grid
            base = DiscreteDistribution.from_family(fam, -delta, grid)
            km, kp = kl(pair.p_hat_star, pair.q_minus), kl(pair.p_hat_star, pair.q_plus)
            checks += [
                (f"{tag}: normalized", abs(pair.q_minus.weights.sum() - 1) < 1e-8),
                (f"{tag}: TV saturated", abs(tv(pair.q_minus, base) - alpha) < 2e-3),
                (f"{tag}: mirror", np.max(np.abs(pair.q_plus.weights - pair.q_minus.weights[::-1])) < 1e-10),
                (f"{tag}: equal KLs", abs(km - kp) < 1e-5 and abs(km - pair.resolution) < 1e-5),
            ]
            stat = np.clip(fam.log_ratio(delta, grid.nodes), -pair.huber_k, pair.huber_k)
            order = np.argsort(stat, kind="stable")
            first = np.searchsorted(stat[order], np.unique(stat), side="left")

            def tail(w):
                return np.cumsum(w[order][::-1])[::-1][first]

            star = tail(pair.q_minus.weights)
            rng = np.random.default_rng(int(100 * delta + 1000 * alpha))
            dominated = all(np.all(tail(random_feasible(rng, base.weights, alpha)) <= star + 1e-3 * alpha + 1e-12)
                            for _ in range(100))
            checks.append((f"{tag}: stochastic dominance over 100 feasible Q-", dominated))
    verdict(7, "least-favorable pair properties", checks, time.perf_counter() - start)


def test_criterion_08_estimators(verdict, normal, logistic):
    start = time.perf_counter()
    phis = [InfluenceFunction.mean(), InfluenceFunction.sign()]
    for fam in FAMILIES.values():
        phis += [InfluenceFunction.generalized_mean(fam, 1.5), InfluenceFunction.huber(fam, 1.5, 0.8)]
    rng = np.random.default_rng(8)
    checks, grid = [], np.linspace(-30, 30, 6001)
    for phi in phis:
        tag = f"{phi.kind.value}/{phi.family.kind.value if phi.family else '-'}"
        v = phi(grid)
        checks.append((f"{tag}: odd and nondecreasing",
                       np.max(np.abs(v + phi(-grid))) < 1e-12 and np.all(np.diff(v) >= -1e-12)))
        worst = 0.0
        for _ in range(20):
            x, t = rng.standard_t(3, int(rng.integers(1, 30))) * 5, float(rng.uniform(-100, 100))
            err = abs(estimate(phi, x + t) - estimate(phi, x) - t) / max(1.0, abs(t), np.abs(x).max())
            worst = max(worst, err)
        checks.append((f"{tag}: translation error {worst:.1e} <= 1e-9", worst <= 1e-9))
    for fam in FAMILIES.values():
        phi = InfluenceFunction.huber(fam, 2.0, 1.0)
        checks.append((f"huber/{fam.kind.value}: bounded by k", np.max(np.abs(phi(np.linspace(-1e6, 1e6, 20001)))) <= 1.0))
    x = rng.logistic(size=40)
    target = estimate(InfluenceFunction.generalized_mean(logistic, 1.0), x)
    gap = abs(estimate(InfluenceFunction.huber(logistic, 1.0, 50.0), x) - target)
    checks.append((f"huber -> generalized mean as k grows: gap {gap:.1e}", gap < 1e-10))
    x = rng.normal(size=40)
    gap = abs(estimate(InfluenceFunction.huber(normal, 1.0, 1e3), x) - x.mean())
    checks.append((f"normal huber -> mean as k grows: gap {gap:.1e}", gap < 1e-10))
    # breakdown: one point at 1e6 against the slope of phi over points left unclipped
    n, delta = 50, 2.0
    x = np.random.default_rng(0).normal(size=n)
    phi = huber_from_alpha(normal, delta, 0.1)
    moved = x.copy()
    moved[0] = 1e6
    e, margin = estimate(phi, x), 0.05
    scale = 2 * delta / normal.scale ** 2 * np.mean(np.abs(x - e) < phi.k / (2 * delta) - margin)
    shift = abs(estimate(phi, moved) - e)
    mean_shift = abs(np.mean(moved) - np.mean(x))
    checks += [(f"huber shift {shift:.4f} < 2k/(n scale) = {2 * phi.k / (n * scale):.4f}",
                shift < margin and shift < 2 * phi.k / (n * scale)),
               (f"mean shift {mean_shift:.3g} diverges", mean_shift > 1e4)]
    verdict(8, "estimator properties", checks, time.perf_counter() - start)


def test_criterion_09_coverage(verdict, normal):
    start = time.perf_counter()
    ns, trials = [50, 100, 200, 400], 2000
    kappa = worst_case_radius(normal, 0.43, 0.1).value
    lf = CorruptionModel.least_favorable_minus(normal, 2.2, 0.1)
    slope = fit_slope(coverage_experiment(lf, HuberInterval(2.2, 0.1), ns, trials, seed=0))
    median_width = 2 * median_regime_radius(normal, 0.1)
    shifted = CorruptionModel.tail_shift(normal, 0.1)
    median_rate = coverage_experiment(shifted, MedianInterval(median_width), ns, trials, seed=0)[-1].rate
    outlier = CorruptionModel.mixture_outlier(normal, 0.1, 1e4)
    mean_rates = [rep.rate for rep in coverage_experiment(outlier, MeanInterval(3.0), ns, trials, seed=0)]
    elapsed = time.perf_counter() - start
    checks = [(f"2.2 > kappa(0.43, 0.1) = {kappa:.4f}", 2.2 > kappa),
              (f"huber log-rate slope {slope} <= {-0.43 * 0.75}", slope is not None and slope <= -0.43 * 0.75),
              (f"median failure at n=400 is {median_rate:.4f} < 0.01", median_rate < 0.01),
              (f"mean failure rates {min(mean_rates):.3f} > 0.95", min(mean_rates) > 0.95),
              (f"runtime {elapsed:.0f} s < 300 s", elapsed < 300)]
    verdict(9, "coverage simulation", checks, elapsed)


@pytest.mark.slow
def test_criterion_10_phase_diagram(verdict, normal):
    r_grid, alpha_grid = np.linspace(0.0, 2.0, 20), np.linspace(0.0, 0.45, 20)
    points, elapsed = timed(phase_diagram, normal, r_grid, alpha_grid)
    cells = {(p.r, p.alpha): p for p in points}
    excess = max(p.kappa_prime.value - p.kappa.value for p in points if not p.kappa.is_infinite)
    checks = [(f"{len(points)} cells", len(points) == 400),
              (f"max kappa' - kappa = {excess:.2e} <= 2e-2", excess <= 2e-2 and
               all(p.kappa.is_infinite or not p.kappa_prime.is_infinite for p in points))]

    def first_infinite(alpha, attr):
        flags = [getattr(cells[(r, alpha)], attr).is_infinite for r in r_grid]
        return flags.index(True) if True in flags else len(r_grid)

    def first_beyond(threshold):
        above = np.nonzero(r_grid >= threshold - 1e-4)[0]
        return int(above[0]) if above.size else len(r_grid)

    worst = 0
    for a in alpha_grid[1:]:
        worst = max(worst, abs(first_infinite(a, "kappa") - first_beyond(rbar(a))),
                    abs(first_infinite(a, "kappa_prime") - first_beyond(rbar_prime(a))))
    checks.append((f"boundaries off by at most {worst} cells", worst <= 1))
    checks.append(("alpha=0 row is MeanRegime for r>0",
                   all(cells[(r, 0.0)].regime is Regime.MEAN for r in r_grid[1:])))
    checks.append(("r=0 column is MedianRegime", all(cells[(0.0, a)].regime is Regime.MEDIAN for a in alpha_grid)))
    verdict(10, "phase diagram consistency", checks, elapsed)

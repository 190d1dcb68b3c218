import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import FAMILIES, joint_oracle
from robust_resolve.almost_sure import (almost_sure_radius, almost_sure_resolution, almost_sure_value,
                                        default_as_grid, rbar_prime)
from robust_resolve.divergences import DiscreteDistribution, kl, tv
from robust_resolve.least_favorable import resolution
from robust_resolve.numerics import Grid
from robust_resolve.radius import median_regime_radius, rbar, worst_case_radius

SMALL = Grid.symmetric(6.0, 41)


class TestThreshold:
    def test_value(self):
        assert abs(rbar_prime(0.1) - 1.757780) < 1e-6

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-6, 0.5))
    def test_closed_form_and_order(self, alpha):
        assert rbar_prime(alpha) == pytest.approx((1 - 2 * alpha) * math.log((1 - alpha) / alpha), abs=1e-12)
        assert rbar_prime(alpha) >= rbar(alpha) - 1e-12

    def test_alpha_zero(self):
        assert rbar_prime(0.0) == math.inf


class TestAgainstJointSolver:
    @pytest.mark.parametrize("name", sorted(FAMILIES))
    @pytest.mark.parametrize("delta,alpha", [(1.5, 0.1), (2.5, 0.2), (3.0, 0.05)])
    def test_profile_matches(self, name, delta, alpha):
        fam = FAMILIES[name]
        thetas = [0.0, 0.3 * delta, delta]
        sol = almost_sure_resolution(fam, delta, alpha, SMALL, theta_grid=thetas)
        profile = dict(sol.profile)
        for th in thetas:
            assert abs(profile[th] - joint_oracle(fam, SMALL, delta, alpha, th)) < 1e-3

    def test_minimum_over_theta(self, normal):
        sol = almost_sure_resolution(normal, 2.0, 0.15, SMALL)
        scan = min(joint_oracle(normal, SMALL, 2.0, 0.15, th) for th in np.linspace(-2.0, 2.0, 21))
        assert sol.r_prime <= scan + 1e-3
        assert abs(sol.r_prime - joint_oracle(normal, SMALL, 2.0, 0.15, sol.theta_witness)) < 1e-3


class TestSolution:
    @pytest.fixture(scope="class")
    @classmethod
    def sol(cls):
        fam = FAMILIES["normal"]
        return fam, almost_sure_resolution(fam, 2.0, 0.1, default_as_grid(fam, 2.0, 201))

    def test_feasible(self, sol):
        fam, s = sol
        grid = s.p_hat.grid

        def ref(c):
            return DiscreteDistribution.from_family(fam, c, grid)

        assert tv(s.p_hat, ref(s.theta_witness)) <= 0.1 + 1e-9
        assert tv(s.q_minus, ref(-2.0)) <= 0.1 + 1e-9
        assert tv(s.q_plus, ref(2.0)) <= 0.1 + 1e-9

    def test_value_is_worse_kl_and_certified(self, sol):
        _, s = sol
        assert abs(max(kl(s.p_hat, s.q_minus), kl(s.p_hat, s.q_plus)) - s.r_prime) < 1e-9
        assert 0 <= s.gap <= 1e-4

    def test_profile_even_scan(self, sol):
        _, s = sol
        thetas = [t for t, _ in s.profile]
        assert min(thetas) == 0.0 and max(thetas) == pytest.approx(2.0)
        assert s.r_prime <= min(v for _, v in s.profile) + 1e-12


class TestValues:
    @pytest.mark.parametrize("delta", [1.0, 2.0, 3.0])
    @pytest.mark.parametrize("alpha", [0.05, 0.1, 0.2])
    def test_not_below_worst_case(self, normal, delta, alpha):
        grid = default_as_grid(normal, delta, 401)
        assert almost_sure_value(normal, delta, alpha, grid) >= resolution(normal, delta, alpha) - 1e-4

    def test_overlap_is_zero(self, normal):
        sol = almost_sure_resolution(normal, 0.2, 0.1)
        assert sol.r_prime == 0.0 and sol.theta_witness == 0.2

    @pytest.mark.parametrize("delta", [1.0, 4.0, 16.0])
    def test_uncorrupted_is_kl_between_members(self, normal, delta):
        # KL(P_0, P_delta) = delta^2 / 2 for the unit normal
        grid = default_as_grid(normal, delta, 801)
        assert abs(almost_sure_value(normal, delta, 0.0, grid) - delta ** 2 / 2) < 1e-6 * max(1.0, delta ** 2)

    def test_nondecreasing_in_delta(self, normal):
        vals = [almost_sure_value(normal, d, 0.1, default_as_grid(normal, d, 201)) for d in (0.5, 1.0, 2.0, 3.0, 5.0)]
        assert all(b >= a - 1e-5 for a, b in zip(vals, vals[1:]))

    def test_bounded_by_threshold(self, normal):
        assert almost_sure_value(normal, 12.0, 0.2, default_as_grid(normal, 12.0, 201)) <= rbar_prime(0.2) + 1e-6


class TestRadius:
    def test_zero_r(self, normal):
        assert almost_sure_radius(normal, 0.0, 0.1).value == median_regime_radius(normal, 0.1)

    def test_unreachable(self, normal):
        assert almost_sure_radius(normal, 1.8, 0.1).is_infinite

    def test_small_r_golden(self, normal):
        k = almost_sure_radius(normal, 0.05, 0.1, grid_n=201)
        assert abs(k.value - 0.66) < 0.03
        assert k.value <= worst_case_radius(normal, 0.05, 0.1).value + 2e-2

    def test_negative_r(self, normal):
        with pytest.raises(ValueError):
            almost_sure_radius(normal, -1.0, 0.1)

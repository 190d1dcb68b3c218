import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import FAMILIES
from robust_resolve.exceptions import DomainError, ExtrapolationError
from robust_resolve.families import Kind, Location, LocationFamily

SCIPY = {"normal": stats.norm, "logistic": stats.logistic, "laplace": stats.laplace}

finite = st.floats(-30, 30, allow_nan=False)


class TestDensity:
    def test_normal_mode(self, normal):
        assert abs(normal.density(0.0, 0.0) - 1 / math.sqrt(2 * math.pi)) < 1e-15

    def test_laplace_at_one(self, laplace):
        assert abs(laplace.density(0.0, 1.0) - math.exp(-1) / 2) < 1e-15

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
    def test_matches_scipy(self, name, sigma):
        fam = LocationFamily.from_name(name, sigma)
        x = np.linspace(-8, 8, 101)
        assert np.allclose(fam.density(1.5, x), SCIPY[name].pdf(x, loc=1.5, scale=sigma), rtol=1e-12, atol=0)

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    @settings(max_examples=50, deadline=None)
    @given(t=finite, u=finite)
    def test_translation(self, name, t, u):
        fam = FAMILIES[name]
        assert fam.density(t, t + u) == pytest.approx(fam.density(0.0, u), rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_symmetry(self, name):
        fam = FAMILIES[name]
        x = np.linspace(0, 20, 401)
        assert np.max(np.abs(fam.density(0, x) - fam.density(0, -x))) < 1e-14

    def test_location_type(self):
        assert float(Location(2.5)) == 2.5
        with pytest.raises(DomainError):
            Location(math.nan)

    def test_bad_scale(self):
        with pytest.raises(DomainError):
            LocationFamily.normal(0.0)


class TestLogRatio:
    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 5), finite, st.floats(0.2, 4))
    def test_normal_closed_form(self, delta, xi, sigma):
        fam = LocationFamily.normal(sigma)
        assert fam.log_ratio(delta, xi) == pytest.approx(2 * delta * xi / sigma ** 2, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_zero_delta_and_zero_xi(self, name):
        fam = FAMILIES[name]
        assert np.all(fam.log_ratio(0.0, np.linspace(-5, 5, 11)) == 0)
        assert fam.log_ratio(1.7, 0.0) == 0

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    @pytest.mark.parametrize("delta", [0.3, 1.0, 4.0])
    def test_monotone_and_odd(self, name, delta):
        fam = FAMILIES[name]
        x = np.linspace(-15, 15, 3001)
        lr = fam.log_ratio(delta, x)
        assert np.all(np.diff(lr) >= -1e-12)
        assert np.max(np.abs(fam.log_ratio(delta, -x) + lr)) <= 1e-12

    def test_matches_definition(self, logistic):
        x = np.linspace(-6, 6, 25)
        direct = stats.logistic.logpdf(x - 1.2) - stats.logistic.logpdf(x + 1.2)
        assert np.allclose(logistic.log_ratio(1.2, x), direct, atol=1e-12)

    def test_negative_delta(self, normal):
        with pytest.raises(DomainError):
            normal.log_ratio(-1.0, 0.0)

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    @pytest.mark.parametrize("level", [-1.5, -0.2, 0.7, 1.9])
    def test_crossing(self, name, level):
        fam = FAMILIES[name]
        x = fam.log_ratio_crossing(1.0, level)
        if math.isfinite(x) and name != "laplace":
            assert fam.log_ratio(1.0, x) == pytest.approx(level, abs=1e-8)


class TestCdf:
    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_half_at_center(self, name):
        assert FAMILIES[name].cdf(3.0, 3.0) == 0.5

    def test_normal_quantile(self, normal):
        assert abs(normal.cdf(0, 1.2815515) - 0.9) < 1e-6

    def test_laplace_ln2(self, laplace):
        assert abs(laplace.cdf(0, math.log(2)) - 0.75) < 1e-15

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_against_scipy_and_limits(self, name):
        fam = FAMILIES[name]
        x = np.linspace(-12, 12, 97)
        assert np.allclose(fam.cdf(0, x), SCIPY[name].cdf(x), atol=1e-14)
        assert np.all(np.diff(fam.cdf(0, x)) >= 0)
        assert fam.cdf(0, -1e6) == 0.0 and fam.cdf(0, 1e6) == 1.0

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_ppf_inverts_cdf(self, name):
        fam = FAMILIES[name]
        p = np.linspace(0.01, 0.99, 21)
        assert np.allclose(fam.cdf(0, fam.generator_ppf(p)), p, atol=1e-12)


class TestCustomTable:
    def table(self, n=801, half=12.0):
        xi = np.linspace(-half, half, n)
        return xi, stats.norm.logpdf(xi)

    def test_reproduces_normal(self, normal):
        fam = LocationFamily.from_table(*self.table())
        x = np.linspace(-5, 5, 41)
        assert fam.kind is Kind.CUSTOM
        assert np.allclose(fam.density(0, x), normal.density(0, x), rtol=2e-4)
        assert np.allclose(fam.cdf(0, x), normal.cdf(0, x), atol=1e-4)

    def test_symmetrized_and_renormalized(self):
        xi, logd = self.table()
        fam = LocationFamily.from_table(xi, logd + 0.01 * np.tanh(xi) + 3.0)
        g = fam.g(xi)
        assert np.max(np.abs(g - g[::-1])) < 1e-15
        assert abs(np.trapezoid(g, xi) - 1) < 1e-6

    def test_rejects_zero_density(self):
        xi, logd = self.table()
        logd[0] = -np.inf
        with pytest.raises(DomainError):
            LocationFamily.from_table(xi, logd)

    def test_rejects_non_log_concave(self):
        xi = np.linspace(-6, 6, 241)
        mix = 0.5 * stats.norm.pdf(xi, -2.5, 0.6) + 0.5 * stats.norm.pdf(xi, 2.5, 0.6)
        with pytest.raises(DomainError):
            LocationFamily.from_table(xi, np.log(mix))

    def test_rejects_asymmetric_grid(self):
        with pytest.raises(DomainError):
            LocationFamily.from_table(np.linspace(-5, 6, 11), np.zeros(11))

    def test_extrapolation(self):
        fam = LocationFamily.from_table(*self.table(half=5.0))
        with pytest.raises(ExtrapolationError):
            fam.density(0.0, 6.0)

    def test_csv_round_trip(self, tmp_path):
        xi, logd = self.table(201, 8.0)
        path = tmp_path / "g.csv"
        np.savetxt(path, np.column_stack([xi, logd]), delimiter=",", header="xi,log_density", comments="")
        fam = LocationFamily.from_csv(path)
        assert fam.density(0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-3)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_sampling_matches_cdf(name):
    fam = FAMILIES[name]
    x = fam.sample(np.random.default_rng(0), 20_000, theta=1.0)
    ks = stats.kstest(x - 1.0, lambda t: fam.cdf(0, t))
    assert ks.pvalue > 1e-3


def test_default_grid_covers_shift(normal):
    g = normal.default_grid(3.0)
    assert g.is_symmetric and g.hi == 13.0 and g.n == 4001
    assert LocationFamily.laplace().default_grid(3.0).hi == 28.0

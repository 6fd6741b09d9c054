import numpy as np
import pytest
from scipy import stats

from src.montecarlo.statistics import (
    describe,
    empirical_cdf,
    fit_linear_growth,
    jackknife,
    ks_statistic,
    sample_covariance,
    sample_variance,
)


class TestJackknife:

    def test_mean_standard_error(self, rng):
        values = rng.standard_normal(50)
        estimate, error = jackknife(values, np.mean, blocks=50)
        assert estimate == pytest.approx(values.mean())
        assert error == pytest.approx(values.std(ddof=1) / np.sqrt(50), rel=1e-10)

    def test_constant_values(self):
        estimate, error = jackknife(np.full(20, 3.0), sample_variance)
        assert (estimate, error) == (0.0, 0.0)

    def test_needs_two_values(self):
        with pytest.raises(ValueError):
            jackknife(np.array([1.0]), np.mean)

    def test_resamples_rows_of_a_table(self, rng):
        table = rng.standard_normal((40, 3))
        estimate, error = jackknife(table, lambda rows: float(rows[:, 1].mean()), blocks=40)
        assert estimate == pytest.approx(table[:, 1].mean())
        assert error == pytest.approx(table[:, 1].std(ddof=1) / np.sqrt(40), rel=1e-10)

    def test_one_implementation_for_every_layer(self):
        from src.utils import resampling
        from src.vectors import moment_profiles
        assert jackknife is resampling.jackknife
        assert moment_profiles.jackknife is resampling.jackknife


class TestKolmogorovSmirnov:

    def test_point_mass_at_the_median(self):
        assert ks_statistic([0.0, 0.0], stats.norm.cdf) == pytest.approx(0.5)

    def test_against_own_empirical_cdf(self, rng):
        samples = rng.standard_normal(100)
        right, left = empirical_cdf(samples)
        assert ks_statistic(samples, right, left) == 0.0

    def test_atoms_use_left_limits(self):
        samples = [0.0, 0.0, 1.0, 2.0]
        right, left = empirical_cdf(samples)
        assert ks_statistic(samples, right) > 0.0
        assert ks_statistic(samples, right, left) == 0.0

    def test_draws_from_the_reference(self, rng):
        assert ks_statistic(rng.standard_normal(10_000), stats.norm.cdf) <= 0.03

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            ks_statistic([1.0], stats.norm.cdf)


class TestDescribe:

    def test_zero_variance(self):
        summary = describe(np.zeros(300))
        assert summary['variance'] == 0.0
        assert summary['skewness'] is None
        assert summary['ks_normal'] is None
        assert not summary['normality_flag']

    def test_underpowered(self, rng):
        assert describe(rng.standard_normal(50))['underpowered']

    def test_gaussian_samples(self, rng):
        summary = describe(2.0 * rng.standard_normal(20_000))
        assert summary['variance'] == pytest.approx(4.0, rel=0.05)
        assert summary['variance_se'] < 0.1
        assert summary['ks_normal'] < 0.02
        assert not summary['normality_flag']
        assert not summary['underpowered']

    def test_skewed_samples_are_flagged(self, rng):
        assert describe(rng.exponential(size=5000))['normality_flag']


def test_linear_growth_fit():
    fit = fit_linear_growth([8, 16, 32], [16.0, 32.0, 64.0])
    assert fit == pytest.approx({'kappa': 2.0, 'r_squared': 1.0})


def test_covariance_is_unconjugated():
    z = np.array([1j, -1j])
    assert sample_covariance(np.column_stack([z, z])) == pytest.approx(-2.0)


def test_complex_variance_uses_modulus():
    assert sample_variance(np.array([1j, -1j])) == pytest.approx(2.0)

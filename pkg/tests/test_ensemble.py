import numpy as np
import pandas as pd
import pytest

from src.ensemble.sample_matrix import EnsembleConfig, SampleMatrix, apply, assemble, dense_form
from src.ensemble.spectrum import (
    Spectrum,
    eigenvalues,
    linear_statistic,
    resolvent_trace,
    resolvent_traces,
    smoothed_statistic,
    write_spectrum_csv,
)
from src.fluctuations.functions import TestFunction, poisson_smooth
from src.measures.spectral_measures import TauSpec
from src.utils.exceptions import BudgetExceededError, LengthMismatchError
from src.utils.rng import derive_stream


def rank_one(n_dim: int) -> SampleMatrix:
    factor = np.zeros((n_dim, 1))
    factor[0, 0] = 1.0
    return SampleMatrix(factor=factor, tau=[1.0], n=n_dim, k=1)


class TestEnsembleConfig:

    def test_sample_count_from_ratio(self, gaussian_model):
        config = EnsembleConfig(n=8, k=2, model=gaussian_model, taus=TauSpec.constant(1.0), c=0.5)
        assert (config.dimension, config.sample_count, config.ratio) == (64, 32, 0.5)

    def test_needs_m_or_c(self, gaussian_model):
        with pytest.raises(ValueError, match="either m or c"):
            EnsembleConfig(n=8, k=2, model=gaussian_model, taus=TauSpec.constant(1.0))

    def test_rejects_small_n(self, gaussian_model):
        with pytest.raises(ValueError):
            EnsembleConfig(n=1, k=2, model=gaussian_model, taus=TauSpec.constant(1.0), m=4)

    def test_dict_form(self):
        config = EnsembleConfig.from_dict({'n': 4, 'k': 2, 'c': 1.0, 'model': {'kind': 'sphere'}, 'seed': 3})
        assert config.master_seed == 3
        assert config.to_dict()['m'] == 16
        assert config.taus == TauSpec.constant(1.0)


class TestAssemble:

    def test_rank_one_dense_form(self):
        expected = np.zeros((3, 3))
        expected[0, 0] = 1.0
        assert np.array_equal(dense_form(rank_one(3)), expected)

    def test_trace_identity(self, small_config):
        mat = assemble(small_config, derive_stream(small_config.master_seed, 0))
        assert np.trace(dense_form(mat)) == pytest.approx(mat.trace(), rel=1e-12)

    def test_sphere_trace_is_sample_count(self, sphere_model):
        config = EnsembleConfig(n=8, k=2, model=sphere_model, taus=TauSpec.constant(1.0), m=32)
        mat = assemble(config, derive_stream(0, 0))
        assert mat.trace() == pytest.approx(32.0, abs=1e-10)

    def test_factor_is_read_only(self, small_config):
        mat = assemble(small_config, derive_stream(0, 0))
        with pytest.raises(ValueError):
            mat.factor[0, 0] = 1.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            SampleMatrix(factor=np.ones((4, 3)), tau=[1.0, 1.0])

    def test_dense_cap(self, small_config):
        mat = assemble(small_config, derive_stream(0, 0))
        with pytest.raises(BudgetExceededError):
            dense_form(mat, dense_cap=8)


class TestApply:

    def test_zero_vector(self, small_config):
        mat = assemble(small_config, derive_stream(0, 0))
        assert np.array_equal(apply(mat, np.zeros(16)), np.zeros(16))

    def test_unit_column_is_fixed(self):
        y = np.array([0.6, 0.8, 0.0])
        mat = SampleMatrix(factor=y[:, None], tau=[1.0], n=3, k=1)
        assert apply(mat, y) == pytest.approx(y, abs=1e-15)

    def test_matches_dense_product(self, small_config, rng):
        mat = assemble(small_config, derive_stream(1, 0))
        v = rng.standard_normal(16)
        assert np.allclose(apply(mat, v), dense_form(mat) @ v, atol=1e-10)

    def test_wrong_length(self, small_config):
        mat = assemble(small_config, derive_stream(0, 0))
        with pytest.raises(LengthMismatchError):
            apply(mat, np.ones(5))


class TestSpectrum:

    def test_zero_matrix(self):
        mat = SampleMatrix(factor=np.ones((4, 1)) / 2.0, tau=[0.0], n=4, k=1)
        assert np.array_equal(eigenvalues(mat).eigenvalues, np.zeros(4))

    def test_rank_one(self):
        spec = eigenvalues(rank_one(4))
        assert spec.path == 'gram'
        assert spec.structural_zeros == 3
        assert spec.eigenvalues.tolist() == [0.0, 0.0, 0.0, 1.0]

    def test_gram_path_matches_dense_path(self, small_config):
        mat = assemble(small_config, derive_stream(2, 0))
        gram = eigenvalues(mat)
        dense = eigenvalues(mat, force_dense=True)
        assert (gram.path, dense.path) == ('gram', 'dense')
        assert np.allclose(gram.eigenvalues, dense.eigenvalues, atol=1e-8)

    def test_mixed_sign_taus_use_dense_path(self, gaussian_model):
        config = EnsembleConfig(n=3, k=2, model=gaussian_model, taus=TauSpec.explicit([1.0, -1.0, 2.0, -0.5]), m=4)
        spec = eigenvalues(assemble(config, derive_stream(3, 0)))
        assert spec.path == 'dense'
        assert spec.eigenvalues.min() < 0.0

    def test_non_finite_rejected(self):
        mat = SampleMatrix(factor=np.array([[np.nan], [1.0]]), tau=[1.0], n=2, k=1)
        with pytest.raises(ValueError, match="non-finite"):
            eigenvalues(mat)


class TestLinearStatistic:

    def test_counting(self, small_config):
        spec = eigenvalues(assemble(small_config, derive_stream(4, 0)))
        assert linear_statistic(spec, TestFunction.constant(1.0)) == pytest.approx(16.0)

    def test_identity_gives_trace(self, small_config):
        mat = assemble(small_config, derive_stream(4, 0))
        spec = eigenvalues(mat)
        phi = TestFunction.monomial(1, -1.0, spec.eigenvalues.max() + 1.0)
        assert linear_statistic(spec, phi) == pytest.approx(mat.trace(), rel=1e-10)

    def test_square_gives_frobenius_norm(self, gaussian_model):
        config = EnsembleConfig(n=8, k=2, model=gaussian_model, taus=TauSpec.constant(1.0), m=32)
        mat = assemble(config, derive_stream(5, 0))
        spec = eigenvalues(mat)
        phi = TestFunction.monomial(2, -1.0, spec.eigenvalues.max() + 1.0)
        assert linear_statistic(spec, phi) == pytest.approx(np.sum(dense_form(mat) ** 2), abs=1e-8)


class TestResolventTrace:

    def test_zero_matrix(self):
        spec = Spectrum(computed=np.zeros(4), structural_zeros=0, n=4, k=1, m=1, path='dense')
        assert resolvent_trace(spec, 1j) == pytest.approx(4j)

    def test_single_eigenvalue(self):
        spec = Spectrum(computed=np.array([1.0]), structural_zeros=0, n=1, k=1, m=1, path='dense')
        assert resolvent_trace(spec, 1j) == pytest.approx(0.5 + 0.5j)

    def test_matches_dense_resolvent(self, small_config):
        mat = assemble(small_config, derive_stream(6, 0))
        spec = eigenvalues(mat)
        z = 0.7 + 0.3j
        expected = np.trace(np.linalg.inv(dense_form(mat) - z * np.eye(16)))
        assert abs(resolvent_trace(spec, z) - expected) < 1e-8
        assert abs(resolvent_traces(spec, np.array([z]))[0] - expected) < 1e-8

    def test_real_axis_rejected(self):
        spec = Spectrum(computed=np.zeros(2), structural_zeros=0, n=2, k=1, m=1, path='dense')
        with pytest.raises(ValueError):
            resolvent_trace(spec, 1.0)


def test_smoothed_statistic_is_statistic_of_smoothed_function(small_config):
    spec = eigenvalues(assemble(small_config, derive_stream(8, 0)))
    phi = TestFunction.gaussian_bump(1.0, 0.3)
    eta = 0.1
    lo, hi = phi.support_hint()
    expected = linear_statistic(spec, poisson_smooth(phi, eta))
    assert smoothed_statistic(spec, phi, eta, lo, hi) == pytest.approx(expected, rel=1e-5)


def test_write_spectrum_csv(tmp_path, small_config):
    spec = eigenvalues(assemble(small_config, derive_stream(9, 0)))
    path = write_spectrum_csv(spec, tmp_path / 'spectrum.csv')
    frame = pd.read_csv(path)
    assert list(frame.columns) == ['lambda']
    assert np.allclose(frame['lambda'].to_numpy(), spec.eigenvalues, atol=1e-14)

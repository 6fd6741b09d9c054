import numpy as np
import pytest

from src.ensemble.sample_matrix import EnsembleConfig
from src.measures.spectral_measures import TauSpec
from src.mp_law.mpe_solver import constant_sigma
from src.vectors.vector_models import VectorModel


@pytest.fixture
def gaussian_model():
    return VectorModel.iid('gaussian')


@pytest.fixture
def sphere_model():
    return VectorModel.sphere()


@pytest.fixture
def unit_sigma():
    return constant_sigma(1.0)


@pytest.fixture
def two_atom_sigma():
    return TauSpec.discrete([(1.0, 0.5), (2.0, 0.5)]).limit_measure()


@pytest.fixture
def small_config(gaussian_model):
    """n = 4, k = 2, m = 8: N = 16 with a rank-deficient Gram path"""
    return EnsembleConfig(n=4, k=2, model=gaussian_model, taus=TauSpec.constant(1.0), m=8, master_seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def isolated_env(tmp_path, monkeypatch):
    """Run outputs and logs kept under the test's temporary directory"""
    monkeypatch.setenv('TENSORMP_OUT_DIR', str(tmp_path / 'runs'))
    monkeypatch.setenv('TENSORMP_LOG_DIR', str(tmp_path / 'logs'))
    monkeypatch.delenv('TENSORMP_THREADS', raising=False)
    monkeypatch.delenv('TENSORMP_MEMORY_BUDGET_MB', raising=False)
    return tmp_path

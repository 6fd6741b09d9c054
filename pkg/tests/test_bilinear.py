import numpy as np
import pytest

from src.fluctuations.bilinear import (
    bilinear_variance_rhs,
    bilinear_variance_rhs_general,
    g_functions,
    partial_trace,
    partial_traces,
)
from src.montecarlo.experiment_runner import build_bilinear_matrix
from src.montecarlo.statistics import sample_covariance
from src.mp_law.mpe_solver import solve_mpe
from src.utils.rng import derive_stream
from src.vectors.moment_profiles import analytic_moment_profile
from src.vectors.vector_models import VectorModel, tensor_samples


def random_symmetric(size: int, rng, complex_entries: bool = False) -> np.ndarray:
    h = rng.standard_normal((size, size))
    if complex_entries:
        h = h + 1j * rng.standard_normal((size, size))
    return h + h.T


@pytest.mark.parametrize('model', [VectorModel.iid('gaussian'), VectorModel.sphere(), VectorModel.iid('rademacher')])
def test_identity(model):
    n = 8
    profile = analytic_moment_profile(model, n)
    rhs = bilinear_variance_rhs(np.eye(n * n), profile.a, profile.b)
    assert rhs == pytest.approx(2.0 * (profile.a + profile.b + 2.0), abs=1e-12)


def test_partial_traces_of_identity():
    n = 5
    gamma, gamma_tilde = partial_traces(np.eye(n * n))
    assert np.array_equal(gamma, n * np.eye(n))
    assert np.array_equal(gamma_tilde, n * np.eye(n))


def test_partial_traces_of_a_product():
    rng = np.random.default_rng(0)
    left, right = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    gamma, gamma_tilde = partial_traces(np.kron(left, right))
    assert gamma == pytest.approx(np.trace(left) * right)
    assert gamma_tilde == pytest.approx(np.trace(right) * left)


def test_partial_trace_order_three():
    rng = np.random.default_rng(1)
    blocks = [rng.standard_normal((2, 2)) for _ in range(3)]
    h = np.kron(np.kron(blocks[0], blocks[1]), blocks[2])
    middle = partial_trace(h, 2, 3, keep=1)
    assert middle == pytest.approx(np.trace(blocks[0]) * np.trace(blocks[2]) * blocks[1])


def test_g_functions_of_identity():
    g = g_functions(np.eye(16), np.eye(16))
    assert g == pytest.approx({'g1': 1.0, 'g2': 1.0, 'g1_tilde': 1.0, 'g2_tilde': 1.0})


def test_single_diagonal_entry_is_negligible():
    n = 8
    h = np.zeros((n * n, n * n))
    h[3, 3] = 1.0
    assert 0.0 < bilinear_variance_rhs(h, 0.0, 0.0) < 1e-2


@pytest.mark.parametrize('complex_entries', [False, True])
def test_general_form_agrees_at_order_two(complex_entries):
    rng = np.random.default_rng(2)
    n = 4
    h = random_symmetric(n * n, rng, complex_entries)
    for a, b in [(0.0, 0.0), (-2.0, 0.0), (0.0, -2.0), (1.5, 0.7)]:
        assert bilinear_variance_rhs_general(h, n, 2, a, b) == pytest.approx(bilinear_variance_rhs(h, a, b), rel=1e-10)


@pytest.mark.parametrize('k', [1, 3])
def test_general_form_identity(k):
    n, a, b = 3, 0.5, -0.25
    assert bilinear_variance_rhs_general(np.eye(n ** k), n, k, a, b) == pytest.approx(k * (a + b + 2.0))


def test_non_symmetric_rejected():
    h = np.zeros((16, 16))
    h[0, 1] = 1.0
    with pytest.raises(ValueError, match="symmetric"):
        bilinear_variance_rhs(h, 0.0, 0.0)


@pytest.mark.parametrize('shape', [(16, 8), (5, 5)])
def test_wrong_shape_rejected(shape):
    with pytest.raises(ValueError):
        bilinear_variance_rhs(np.zeros(shape), 0.0, 0.0)


def frozen_resolvent(model, n, z, seed=0):
    return build_bilinear_matrix({'kind': 'resolvent', 'z': [z.real, z.imag], 'seed': seed, 'c': 1.0}, model, n)


def test_g_functions_of_resolvents_factorize(gaussian_model, unit_sigma):
    z = 1.0 + 1.0j
    f, _ = solve_mpe(unit_sigma, 1.0, z)
    errors = {}
    for n in (16, 24, 32):
        h = frozen_resolvent(gaussian_model, n, z)
        g = g_functions(h, h)
        errors[n] = max(abs(value - f * f) for value in g.values())
    assert errors[32] <= 0.05 * abs(f * f)
    assert errors[32] < errors[16] + 0.01 * abs(f * f)


def test_resolvent_forms_covariance_limit(unit_sigma):
    n = 16
    z1, z2 = 1.0 + 1.0j, 2.0 + 0.5j
    f1, _ = solve_mpe(unit_sigma, 1.0, z1)
    f2, _ = solve_mpe(unit_sigma, 1.0, z2)
    for model in (VectorModel.iid('gaussian'), VectorModel.iid('rademacher'), VectorModel.sphere()):
        profile = analytic_moment_profile(model, n)
        h1, h2 = frozen_resolvent(model, n, z1), frozen_resolvent(model, n, z2)
        g = g_functions(h1, h2)
        size = n * n
        value = (2.0 * profile.a * (np.trace(h1) / size) * (np.trace(h2) / size)
                 + 2.0 * (g['g1'] + g['g1_tilde']) + profile.b * (g['g2'] + g['g2_tilde']))
        limit = 2.0 * (profile.a + profile.b + 2.0) * f1 * f2
        scale = (2.0 * abs(profile.a) + abs(profile.b) + 4.0) * abs(f1 * f2)
        assert abs(value - limit) <= 0.1 * scale


@pytest.mark.slow
@pytest.mark.parametrize('model', [VectorModel.iid('gaussian'), VectorModel.iid('rademacher')])
def test_resolvent_forms_covariance_by_sampling(model, unit_sigma):
    n = 24
    z1, z2 = 1.0 + 1.0j, 2.0 + 0.5j
    f1, _ = solve_mpe(unit_sigma, 1.0, z1)
    f2, _ = solve_mpe(unit_sigma, 1.0, z2)
    profile = analytic_moment_profile(model, n)
    h1, h2 = frozen_resolvent(model, n, z1), frozen_resolvent(model, n, z2)

    y = tensor_samples(model, n, 2, 20_000, derive_stream(8, 0))
    forms = np.column_stack([np.einsum('ri,ij,rj->r', y, h1, y), np.einsum('ri,ij,rj->r', y, h2, y)])
    covariance = n * sample_covariance(forms)
    limit = 2.0 * (profile.a + profile.b + 2.0) * f1 * f2
    assert abs(covariance - limit) <= 0.15 * abs(limit)

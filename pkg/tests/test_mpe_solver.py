import numpy as np
import pytest

from src.mp_law.density import density
from src.mp_law.mpe_solver import (
    mp_closed_form,
    mp_edges,
    mpe_residual,
    solve_mpe,
    solve_mpe_grid,
    support_bounds,
)
from src.utils.exceptions import ConvergenceError


def test_value_at_i(unit_sigma):
    f, _ = solve_mpe(unit_sigma, 1.0, 1j)
    assert f == pytest.approx(0.30025 + 0.6248j, abs=1e-4)
    assert mp_closed_form(1.0, 1j) == pytest.approx(f, abs=1e-12)


@pytest.mark.parametrize('c', [0.5, 1.0, 2.0])
def test_matches_closed_form(unit_sigma, c):
    zs = np.linspace(-2.0, 8.0, 200) + 0.5j
    solution = solve_mpe_grid(unit_sigma, c, zs)
    assert np.max(np.abs(solution.f_values - mp_closed_form(c, zs))) < 1e-10
    assert solution.max_residual() <= 1e-12


@pytest.mark.parametrize('c', [0.5, 2.0])
def test_matches_closed_form_near_the_axis(unit_sigma, c):
    zs = np.linspace(0.0, 6.0, 61) + 0.02j
    solution = solve_mpe_grid(unit_sigma, c, zs)
    assert np.max(np.abs(solution.f_values - mp_closed_form(c, zs))) < 1e-8


def test_decay_at_infinity(unit_sigma):
    eta = 1e6
    f, _ = solve_mpe(unit_sigma, 1.0, 1j * eta)
    assert eta * abs(f) == pytest.approx(1.0, abs=1e-5)


def test_conjugation(two_atom_sigma):
    z = 0.8 + 0.3j
    upper, upper_prime = solve_mpe(two_atom_sigma, 0.5, z)
    lower, lower_prime = solve_mpe(two_atom_sigma, 0.5, np.conj(z))
    assert lower == pytest.approx(np.conj(upper), abs=1e-14)
    assert lower_prime == pytest.approx(np.conj(upper_prime), abs=1e-12)


def test_maps_upper_half_plane_into_itself(two_atom_sigma):
    zs = np.linspace(-3.0, 10.0, 50) + 0.1j
    solution = solve_mpe_grid(two_atom_sigma, 1.5, zs)
    assert np.all(solution.f_values.imag > 0)
    assert np.max(mpe_residual(two_atom_sigma, 1.5, zs, solution.f_values)) <= 1e-12


def test_derivative_by_finite_difference(two_atom_sigma):
    z, h = 1.2 + 0.4j, 1e-5
    _, fprime = solve_mpe(two_atom_sigma, 0.7, z)
    plus, _ = solve_mpe(two_atom_sigma, 0.7, z + h)
    minus, _ = solve_mpe(two_atom_sigma, 0.7, z - h)
    assert fprime == pytest.approx((plus - minus) / (2 * h), rel=1e-6)


def test_cauchy_riemann_on_a_grid(two_atom_sigma):
    base = np.linspace(-0.5, 6.0, 27) + 1j * np.repeat([0.05, 0.2, 1.0], 9)
    h = 1e-5
    shifted = np.concatenate([base + h, base - h, base + 1j * h, base - 1j * h])
    f = solve_mpe_grid(two_atom_sigma, 0.7, shifted).f_values.reshape(4, -1)
    along_real = (f[0] - f[1]) / (2 * h)
    along_imag = (f[2] - f[3]) / (2j * h)
    assert np.all(np.abs(along_real - along_imag) <= 1e-4 * np.abs(along_real))


def test_derivative_identity(unit_sigma):
    # c int tau (1 + tau f)^-2 dsigma - z = f / f'
    z, c = 0.5 + 0.25j, 2.0
    f, fprime = solve_mpe(unit_sigma, c, z)
    assert c / (1.0 + f) ** 2 - z == pytest.approx(f / fprime, abs=1e-10)


def test_real_axis_rejected(unit_sigma):
    with pytest.raises(ValueError, match="Im z"):
        solve_mpe(unit_sigma, 1.0, 1.0)


def test_non_convergence_raises(unit_sigma):
    with pytest.raises(ConvergenceError) as info:
        solve_mpe_grid(unit_sigma, 1.0, [1.0 + 1e-3j], max_iterations=1)
    assert info.value.residual > 1e-12


@pytest.mark.parametrize('c', [0.25, 1.0, 3.0])
def test_edges_are_discriminant_roots(c):
    for edge in mp_edges(c):
        assert (edge - c + 1.0) ** 2 - 4.0 * edge == pytest.approx(0.0, abs=1e-12)


def test_support_bounds(unit_sigma, two_atom_sigma):
    assert support_bounds(unit_sigma, 1.0) == pytest.approx((0.0, 4.0))
    lo, hi = support_bounds(two_atom_sigma, 1.0)
    assert lo == 0.0 and hi == pytest.approx(8.0)


def test_upper_edge_grows_with_ratio(unit_sigma):
    cs = [0.25, 0.5, 1.0, 2.0]
    edges = [support_bounds(unit_sigma, c)[1] for c in cs]
    assert all(lower < upper for lower, upper in zip(edges, edges[1:]))

    for c, edge in zip(cs, edges):
        grid = np.arange(0.005, edge + 0.5, 0.01)
        curve = density(unit_sigma, c, grid, eta_schedule=(0.004, 0.002, 0.001))
        last = grid[curve.density >= 2e-3].max()
        assert edge - 0.02 <= last <= edge + 0.02

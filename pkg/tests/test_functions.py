import math

import numpy as np
import pytest
from scipy import integrate

from src.fluctuations.functions import TestFunction, poisson_smooth, sobolev_norm
from src.utils.exceptions import NotInSobolevSpaceError


class TestPoissonSmoothing:

    def test_constant_is_fixed(self):
        phi = TestFunction.constant(2.5)
        assert poisson_smooth(phi, 0.3) is phi

    def test_indicator(self):
        smoothed = poisson_smooth(TestFunction.indicator(0.0, 1.0), 0.1)
        assert smoothed(0.5) == pytest.approx(2.0 / math.pi * math.atan(5.0), abs=1e-12)

    def test_gaussian_converges_as_eta_shrinks(self):
        phi = TestFunction.gaussian_bump(1.0, 0.5)
        errors = [abs(poisson_smooth(phi, eta)(1.0) - 1.0) for eta in (0.1, 0.05, 0.01)]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 0.05

    def test_cauchy_against_quadrature(self):
        phi = TestFunction.cauchy(0.5, 0.8)
        eta, x = 0.2, 0.3
        expected, _ = integrate.quad(lambda t: phi(t) * eta / ((x - t) ** 2 + eta ** 2), -np.inf, np.inf)
        assert poisson_smooth(phi, eta)(x) == pytest.approx(expected / math.pi, rel=1e-8)

    def test_generic_path_against_quadrature(self):
        phi = TestFunction.gaussian_bump(0.0, 1.0)
        eta, x = 0.3, 0.4
        expected, _ = integrate.quad(lambda t: phi(t) * eta / ((x - t) ** 2 + eta ** 2), -np.inf, np.inf)
        assert poisson_smooth(phi, eta)(x) == pytest.approx(expected / math.pi, rel=1e-7)

    def test_eta_must_be_positive(self):
        with pytest.raises(ValueError):
            poisson_smooth(TestFunction.gaussian_bump(), 0.0)


class TestSobolevNorm:

    def test_zero_function(self):
        assert sobolev_norm(TestFunction.constant(0.0), 3.0) == 0.0
        assert sobolev_norm(TestFunction.gaussian_bump().scaled(0.0), 3.0) == 0.0

    def test_closed_form_agrees_with_fft(self):
        phi = TestFunction.gaussian_bump(1.0, 1.0)
        assert sobolev_norm(phi, 1.0) == pytest.approx(sobolev_norm(phi, 1.0, method='fft'), rel=1e-6)

    def test_homogeneous_in_amplitude(self):
        phi = TestFunction.cauchy(0.0, 0.5)
        assert sobolev_norm(phi.scaled(3.0), 2.0) == pytest.approx(3.0 * sobolev_norm(phi, 2.0), rel=1e-10)

    def test_gaussian_l2_norm(self):
        # ||phi||_0^2 = 2 pi ||phi||_2^2 = 2 pi sqrt(pi) w
        w = 0.7
        norm = sobolev_norm(TestFunction.gaussian_bump(0.0, w), 0.0)
        assert norm ** 2 == pytest.approx(2.0 * math.pi * math.sqrt(math.pi) * w, rel=1e-9)

    @pytest.mark.parametrize('phi', [
        TestFunction.indicator(0.0, 1.0),
        TestFunction.monomial(1, 0.0, 2.0),
        TestFunction.constant(1.0),
    ])
    def test_rough_or_flat_functions_are_rejected(self, phi):
        assert not phi.sobolev_ok
        with pytest.raises(NotInSobolevSpaceError):
            sobolev_norm(phi, 3.0)

    def test_smooth_functions_pass_the_check(self):
        assert TestFunction.gaussian_bump().sobolev_ok
        assert TestFunction.poisson_smoothed_indicator(0.0, 1.0, 0.1).sobolev_ok


class TestTestFunction:

    def test_scale_alias(self):
        phi = TestFunction.from_dict({'kind': 'cauchy', 'center': 1.0, 'scale': 2.0})
        assert phi == TestFunction.cauchy(1.0, 2.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="valid kinds"):
            TestFunction.from_dict({'kind': 'sine'})

    def test_missing_kind(self):
        with pytest.raises(ValueError, match="kind"):
            TestFunction.from_dict({'center': 1.0})

    def test_degree_limit(self):
        with pytest.raises(ValueError):
            TestFunction.monomial(3, 0.0, 1.0)

    def test_taper(self):
        phi = TestFunction.monomial(1, 0.0, 1.0)
        taper = phi.taper(np.array([-2.0, -0.5, 0.5, 1.5, 2.5]))
        assert taper == pytest.approx([0.0, 0.5, 1.0, 0.5, 0.0])

    def test_tapered_monomial_is_exact_near_the_support(self):
        phi = TestFunction.tapered_monomial(2, (0.0, 4.0))
        x = np.linspace(-1.0, 5.0, 13)
        assert phi(x) == pytest.approx(x ** 2)
        assert phi(7.0) == 0.0

    def test_scalar_call(self):
        value = TestFunction.gaussian_bump()(0.0)
        assert isinstance(value, float)
        assert value == 1.0

    def test_dict_form(self):
        phi = TestFunction('smoothed', eta=0.1, base=TestFunction.gaussian_bump(1.0, 0.5))
        assert TestFunction.from_dict(phi.to_dict()) == phi
        assert phi.label.startswith('smoothed[gaussian-bump')

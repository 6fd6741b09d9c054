import pytest

from src.measures.spectral_measures import (
    SpectralMeasure,
    TauSpec,
    kolmogorov_distance,
    measure_moment,
    measure_support,
    ncm,
    realize_taus,
)
from src.utils.exceptions import LengthMismatchError


class TestRealizeTaus:

    def test_constant(self):
        assert realize_taus(TauSpec.constant(1.0), 3) == [1.0, 1.0, 1.0]

    def test_exact_quotas(self):
        spec = TauSpec.discrete([(1.0, 0.5), (2.0, 0.5)])
        assert realize_taus(spec, 4) == [1.0, 1.0, 2.0, 2.0]

    def test_largest_remainder(self):
        spec = TauSpec.discrete([(1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)])
        assert realize_taus(spec, 4) == [1.0, 1.0, 1.0, 2.0]

    def test_explicit_list_length_mismatch(self):
        with pytest.raises(LengthMismatchError, match="length mismatch"):
            realize_taus(TauSpec.explicit([1.0, 2.0]), 3)

    def test_sampled_is_reproducible(self):
        spec = TauSpec.from_dict({'kind': 'sampled', 'atoms': [[1.0, 0.3], [4.0, 0.7]], 'seed': 5})
        first = realize_taus(spec, 50)
        assert first == realize_taus(spec, 50)
        assert set(first) <= {1.0, 4.0}

    def test_rejects_empty_m(self):
        with pytest.raises(ValueError):
            realize_taus(TauSpec.constant(1.0), 0)

    @pytest.mark.parametrize('m', [10, 100, 1000])
    def test_ncm_converges_at_quota_rate(self, m):
        spec = TauSpec.discrete([(0.5, 0.2), (1.0, 0.3), (3.0, 0.5)])
        distance = kolmogorov_distance(ncm(realize_taus(spec, m)), spec.limit_measure())
        assert distance <= 3.0 / m


class TestTauSpec:

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="valid kinds"):
            TauSpec.from_dict({'kind': 'lognormal'})

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum"):
            TauSpec.discrete([(1.0, 0.5), (2.0, 0.4)])

    def test_dict_form(self):
        raw = {'kind': 'discrete-measure', 'atoms': [[1.0, 0.5], [2.0, 0.5]]}
        assert TauSpec.from_dict(raw).to_dict() == raw

    def test_explicit_limit_is_ncm(self):
        spec = TauSpec.explicit([2.0, 1.0, 1.0])
        assert spec.limit_measure() == ncm([1.0, 1.0, 2.0])


class TestMeasures:

    def test_ncm_counts(self):
        mu = ncm([1, 1, 2])
        assert mu.values.tolist() == [1.0, 2.0]
        assert mu.masses.tolist() == pytest.approx([2.0 / 3.0, 1.0 / 3.0])

    def test_ncm_single(self):
        assert ncm([5]).atoms == ((5.0, 1.0),)

    def test_ncm_mixed_signs(self):
        mu = ncm([-1, 0, 1, 1])
        assert mu.values.tolist() == [-1.0, 0.0, 1.0]
        assert mu.masses.tolist() == pytest.approx([0.25, 0.25, 0.5])
        assert mu.nonzero_mass() == pytest.approx(0.75)

    def test_ncm_empty(self):
        with pytest.raises(ValueError):
            ncm([])

    def test_moments(self):
        assert measure_moment(SpectralMeasure(((1.0, 1.0),)), 4) == 1.0
        assert measure_moment(SpectralMeasure(((-1.0, 0.5), (1.0, 0.5))), 1) == 0.0
        assert measure_moment(SpectralMeasure(((1.0, 0.5), (2.0, 0.5))), 2) == pytest.approx(2.5)

    @pytest.mark.parametrize('p', [0, 1, 2, 3, 4])
    def test_moments_are_linear_in_mixtures(self, p):
        left, right = [0.5, 1.0, 1.0, 3.0], [-2.0, 0.25, 4.0, 4.0]
        mixed = measure_moment(ncm(left + right), p)
        assert mixed == pytest.approx(0.5 * (measure_moment(ncm(left), p) + measure_moment(ncm(right), p)))

    def test_moments_grow_with_order_above_one(self):
        mu = ncm([1.0, 1.5, 2.0, 3.0, 3.0])
        moments = [measure_moment(mu, p) for p in range(5)]
        assert moments[0] == pytest.approx(1.0)
        assert all(lower <= upper for lower, upper in zip(moments, moments[1:]))

    def test_support(self):
        assert measure_support(ncm([3.0, -1.0, 2.0])) == (-1.0, 3.0)

    def test_unsorted_atoms_rejected(self):
        with pytest.raises(ValueError):
            SpectralMeasure(((2.0, 0.5), (1.0, 0.5)))

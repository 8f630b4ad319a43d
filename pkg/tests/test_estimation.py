import math

import numpy as np
import pytest

from covlearn.coverage import CoverageFunction, exact_fourier, random_coverage
from covlearn.cube import DistributionSpec, IndexSet, child_rng, sample_masks
from covlearn.estimation import (
    CoefficientEstimate,
    SampleBatch,
    batch_source,
    estimate_coefficient,
    exact_source,
    hoeffding_half_width,
    hoeffding_samples,
    lattice_search,
    spectrum_from_counts,
    spectrum_source,
    split_budget,
)


class TestSampleBatch:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            SampleBatch(3, np.array([], dtype=np.uint64), np.array([]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            SampleBatch(3, np.zeros(2, dtype=np.uint64), np.zeros(3))

    def test_rejects_out_of_range_labels(self):
        with pytest.raises(ValueError):
            SampleBatch(3, np.zeros(1, dtype=np.uint64), np.array([1.5]))


def test_coefficient_estimate_requires_positive_tolerance():
    with pytest.raises(ValueError):
        CoefficientEstimate(IndexSet(0, 3), 0.0, 0.0)


class TestHoeffding:
    def test_plug_in_value(self):
        assert hoeffding_samples(1.0, 2 / math.e**2) == 4

    def test_derived_value(self):
        assert hoeffding_samples(0.1, 0.01) == math.ceil(200 * math.log(200))
        assert hoeffding_samples(0.1, 0.01) == 1060

    def test_halving_tolerance_quadruples(self):
        a = hoeffding_samples(0.2, 0.05)
        b = hoeffding_samples(0.1, 0.05)
        assert b in (4 * a, 4 * a - 1, 4 * a - 2, 4 * a - 3)

    def test_half_width_inverts_sample_count(self):
        m = hoeffding_samples(0.05, 0.01)
        assert hoeffding_half_width(m, 0.01) <= 0.05

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            hoeffding_samples(0.0, 0.5)
        with pytest.raises(ValueError):
            hoeffding_samples(0.5, 1.5)


class TestEstimateCoefficient:
    def test_zero_labels(self):
        batch = SampleBatch(3, np.arange(8, dtype=np.uint64), np.zeros(8))
        for t in range(8):
            assert estimate_coefficient(batch, IndexSet(t, 3)).value == 0.0

    def test_one_labels_empty_set(self):
        batch = SampleBatch(3, np.arange(8, dtype=np.uint64), np.ones(8))
        assert estimate_coefficient(batch, IndexSet(0, 3)).value == 1.0

    def test_single_disjunction_monte_carlo(self):
        c = CoverageFunction(4, 0.0, {1: 1.0})
        masks = sample_masks(DistributionSpec.uniform(4), 100_000, child_rng(0, 0))
        batch = SampleBatch(4, masks, c.eval_masks(masks))
        est = estimate_coefficient(batch, IndexSet(1, 4))
        assert abs(est.value - (-0.5)) < 0.02

    def test_unbiased(self):
        # 100 independent estimates of hat(c)({1}) for c = OR_1 average to
        # within 3 standard errors of -0.5
        c = CoverageFunction(4, 0.0, {1: 1.0})
        d = DistributionSpec.uniform(4)
        m = 400
        vals = []
        for i in range(100):
            masks = sample_masks(d, m, child_rng(1, i))
            batch = SampleBatch(4, masks, c.eval_masks(masks))
            vals.append(estimate_coefficient(batch, IndexSet(1, 4)).value)
        mean = float(np.mean(vals))
        stderr = 0.5 / math.sqrt(m * 100)  # variance of OR*chi is <= 1/4
        assert abs(mean - (-0.5)) < 3 * stderr


class TestSpectrumFromCounts:
    def test_matches_batch_estimates(self):
        c = random_coverage(6, 6, 4, 3)
        values = c.eval_masks(np.arange(64, dtype=np.uint64))
        rng = child_rng(2, 0)
        counts = rng.multinomial(5000, np.full(64, 1 / 64)).astype(np.float64)
        spectrum = spectrum_from_counts(counts, values)
        # expand the counts into an explicit batch and compare every t
        masks = np.repeat(np.arange(64, dtype=np.uint64), counts.astype(int))
        batch = SampleBatch(6, masks, c.eval_masks(masks))
        for t in range(64):
            direct = estimate_coefficient(batch, IndexSet(t, 6)).value
            assert abs(spectrum[t] - direct) < 1e-12

    def test_rejects_zero_total(self):
        with pytest.raises(ValueError):
            spectrum_from_counts(np.zeros(4), np.zeros(4))


class TestSources:
    def test_exact_source(self):
        c = CoverageFunction(2, 0.0, {1: 1.0})
        src = exact_source(exact_fourier(c))
        assert src(0).value == pytest.approx(0.5)
        assert src(1).value == pytest.approx(-0.5)

    def test_spectrum_source_length_check(self):
        with pytest.raises(ValueError):
            spectrum_source(3, np.zeros(4), 0.1)

    def test_batch_source(self):
        batch = SampleBatch(2, np.arange(4, dtype=np.uint64), np.ones(4))
        src = batch_source(batch, 0.1)
        assert src(0).value == 1.0
        assert src(3).value == 0.0


class TestLatticeSearch:
    def test_pair_disjunction_example(self):
        c = CoverageFunction(2, 0.0, {0b11: 0.25})
        src = exact_source(exact_fourier(c))
        kept = lattice_search(src, IndexSet(0b11, 2), 0.06, 2)
        assert set(kept) == {0, 0b01, 0b10, 0b11}
        assert kept[0].value == pytest.approx(0.1875)
        for m in (0b01, 0b10, 0b11):
            assert kept[m].value == pytest.approx(-0.0625)

    def test_high_threshold_keeps_only_empty(self):
        c = CoverageFunction(2, 0.0, {0b01: 1.0})
        src = exact_source(exact_fourier(c))
        kept = lattice_search(src, IndexSet(0b11, 2), 0.6, 2)
        assert set(kept) == {0}

    def test_threshold_above_one_keeps_only_empty(self):
        c = random_coverage(5, 5, 3, 0)
        src = exact_source(exact_fourier(c))
        kept = lattice_search(src, IndexSet(0b11111, 5), 1.01, 5)
        assert set(kept) == {0}

    @pytest.mark.parametrize("theta", [0.1, 0.03])
    @pytest.mark.parametrize("seed", range(10))
    def test_equals_brute_force(self, theta, seed):
        n = 8
        c = random_coverage(n, 8, 5, seed)
        t = exact_fourier(c)
        kept = lattice_search(
            exact_source(t), IndexSet.from_indices(range(n), n), theta, n
        )
        brute = {m for m in range(1, 1 << n) if abs(t[m]) >= theta}
        assert {m for m in kept if m != 0} == brute

    def test_kept_count_bounded_by_spectral_norm(self):
        for seed in range(10):
            c = random_coverage(7, 8, 5, seed)
            theta = 0.05
            kept = lattice_search(
                exact_source(exact_fourier(c)),
                IndexSet.from_indices(range(7), 7),
                theta,
                7,
            )
            assert len(kept) - 1 <= 2 / theta

    def test_rejects_bad_args(self):
        src = exact_source(exact_fourier(CoverageFunction.zero(2)))
        with pytest.raises(ValueError):
            lattice_search(src, IndexSet(0, 2), 0.0, 2)
        with pytest.raises(ValueError):
            lattice_search(src, IndexSet(0, 2), 0.1, 0)


def test_split_budget():
    assert split_budget(0.1, 10) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        split_budget(0.1, 0)

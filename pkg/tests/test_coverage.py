import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covlearn.coverage import (
    CoverageFunction,
    average_project,
    dense_table,
    eval_coverage,
    exact_fourier,
    junta_variables,
    l1_distance_mc,
    random_coverage,
    walsh_hadamard,
)
from covlearn.cube import DimensionMismatch, DistributionSpec, IndexSet, Point


class TestCoverageFunction:
    def test_rejects_empty_set_term(self):
        with pytest.raises(ValueError):
            CoverageFunction(3, 0.0, {0: 0.5})

    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError):
            CoverageFunction(3, 0.0, {1: -0.1})
        with pytest.raises(ValueError):
            CoverageFunction(3, -0.1, {})

    def test_rejects_total_above_one(self):
        with pytest.raises(ValueError):
            CoverageFunction(3, 0.5, {1: 0.6})

    def test_rejects_out_of_range_set(self):
        with pytest.raises(ValueError):
            CoverageFunction(2, 0.0, {0b100: 0.5})

    def test_size_and_total(self):
        c = CoverageFunction(3, 0.1, {1: 0.2, 0b110: 0.0})
        assert c.size() == 1
        assert abs(c.total_weight() - 0.3) < 1e-15


class TestEvalCoverage:
    def setup_method(self):
        # 0.5*OR_{1} + 0.5*OR_{2}
        self.c = CoverageFunction(2, 0.0, {0b01: 0.5, 0b10: 0.5})

    def test_all_plus(self):
        assert eval_coverage(self.c, Point(0b00, 2)) == 0.0

    def test_first_minus(self):
        assert eval_coverage(self.c, Point(0b01, 2)) == 0.5

    def test_both_minus(self):
        assert eval_coverage(self.c, Point(0b11, 2)) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            eval_coverage(self.c, Point(0, 3))

    def test_batch_matches_scalar(self):
        masks = np.arange(4, dtype=np.uint64)
        vals = self.c.eval_masks(masks)
        for m in range(4):
            assert vals[m] == eval_coverage(self.c, Point(m, 2))


class TestWalshHadamard:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            walsh_hadamard(np.zeros(3))

    def test_self_inverse(self):
        rng = np.random.default_rng(0)
        v = rng.random(64)
        back = walsh_hadamard(walsh_hadamard(v)) / 64
        assert np.abs(back - v).max() < 1e-12

    def test_single_parity(self):
        # indicator spectrum of chi_{0b101} on n=3
        masks = np.arange(8, dtype=np.uint64)
        signs = 1.0 - 2.0 * (np.bitwise_count(masks & np.uint64(0b101)) % 2)
        spec = walsh_hadamard(signs) / 8
        assert abs(spec[0b101] - 1.0) < 1e-12
        assert np.abs(np.delete(spec, 0b101)).max() < 1e-12


class TestExactFourier:
    def test_single_disjunction(self):
        c = CoverageFunction(2, 0.0, {0b01: 1.0})
        t = exact_fourier(c)
        assert t[0] == pytest.approx(0.5)
        assert t[0b01] == pytest.approx(-0.5)
        assert t[0b10] == 0.0
        assert t[0b11] == 0.0

    def test_pair_disjunction(self):
        c = CoverageFunction(2, 0.0, {0b11: 0.25})
        t = exact_fourier(c)
        assert t[0] == pytest.approx(0.1875)
        for mask in (0b01, 0b10, 0b11):
            assert t[mask] == pytest.approx(-0.0625)

    def test_constant_one(self):
        c = CoverageFunction(3, 1.0, {})
        t = exact_fourier(c)
        assert t[0] == 1.0
        assert all(t[m] == 0.0 for m in range(1, 8))

    def test_analytic_equals_wht(self):
        for seed in range(25):
            c = random_coverage(9, 8, 6, seed)
            a = exact_fourier(c, "analytic")
            b = exact_fourier(c, "wht")
            for m in set(a.coeffs) | set(b.coeffs):
                assert abs(a[m] - b[m]) < 1e-9

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            exact_fourier(CoverageFunction.zero(2), "fft")


class TestSpectralInvariants:
    @pytest.mark.parametrize("seed", range(20))
    def test_spectral_norm_at_most_two(self, seed):
        c = random_coverage(10, 12, 8, seed)
        assert exact_fourier(c).spectral_l1() <= 2 + 1e-9

    @pytest.mark.parametrize("seed", range(10))
    def test_monotonicity_and_magnitude(self, seed):
        c = random_coverage(7, 8, 5, seed)
        t = exact_fourier(c)
        for v in range(1, 1 << 7):
            assert t[v] <= 1e-15  # non-positive off the empty set
            assert abs(t[v]) <= 2.0 ** -int(v).bit_count() + 1e-12
            sub = (v - 1) & v
            while sub:
                assert abs(t[v]) <= abs(t[sub]) + 1e-12
                sub = (sub - 1) & v

    @pytest.mark.parametrize("seed", range(10))
    def test_expectation_at_least_half_max(self, seed):
        c = random_coverage(8, 10, 6, seed)
        assert exact_fourier(c)[0] >= dense_table(c).max() / 2 - 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_parseval(self, seed):
        c = random_coverage(8, 10, 6, seed)
        table = dense_table(c)
        total = sum(v * v for v in exact_fourier(c).coeffs.values())
        assert abs(total - float((table**2).mean())) <= 1e-9


class TestAverageProject:
    def test_pair_projected_to_one_var(self):
        c = CoverageFunction(2, 0.0, {0b11: 1.0})
        p = average_project(c, IndexSet(0b01, 2))
        assert p.affine == pytest.approx(0.5)
        assert p.terms == {0b01: pytest.approx(0.5)}

    def test_inside_set_passes_through(self):
        c = CoverageFunction(2, 0.0, {0b01: 1.0})
        p = average_project(c, IndexSet(0b01, 2))
        assert p.affine == 0.0
        assert p.terms == {0b01: 1.0}

    def test_fully_outside_becomes_affine(self):
        c = CoverageFunction(2, 0.0, {0b10: 1.0})
        p = average_project(c, IndexSet(0b01, 2))
        assert p.affine == pytest.approx(0.5)
        assert p.terms == {}

    @pytest.mark.parametrize("seed", range(10))
    def test_agrees_with_brute_force_averaging(self, seed):
        n = 6
        c = random_coverage(n, 6, 4, seed)
        i_mask = (seed * 13 + 5) % (1 << n)
        proj = average_project(c, IndexSet(i_mask, n))
        table = dense_table(c)
        masks = np.arange(1 << n, dtype=np.uint64)
        outside = np.uint64(((1 << n) - 1) & ~i_mask)
        for x in range(1 << n):
            group = (masks & np.uint64(i_mask)) == (x & i_mask)
            expected = float(table[group].mean())
            assert abs(eval_coverage(proj, Point(x, n)) - expected) < 1e-12

    def test_projection_coefficients_match_inside(self):
        # projected coefficients equal original ones for sets inside I
        c = random_coverage(7, 8, 5, 3)
        i_set = IndexSet(0b0011011, 7)
        t0 = exact_fourier(c)
        t1 = exact_fourier(average_project(c, i_set))
        for sub in range(1 << 7):
            if sub & ~i_set.mask == 0:
                assert abs(t0[sub] - t1[sub]) < 1e-12


class TestJunta:
    @pytest.mark.parametrize("eps", [0.5, 0.25])
    @pytest.mark.parametrize("seed", range(5))
    def test_junta_bound_and_error(self, eps, seed):
        c = random_coverage(9, 10, 6, seed)
        t = exact_fourier(c)
        i_set = junta_variables(t, eps)
        assert i_set.size() <= 4 / eps**2
        proj = average_project(c, i_set)
        l1 = float(np.abs(dense_table(c) - dense_table(proj)).mean())
        assert l1 <= eps + 1e-12


class TestRandomCoverage:
    def test_single_term_structure(self):
        c = random_coverage(4, 1, 1, 0)
        assert c.size() == 1
        (mask,) = c.terms
        assert int(mask).bit_count() == 1

    def test_deterministic(self):
        a = random_coverage(8, 10, 5, 42)
        b = random_coverage(8, 10, 5, 42)
        assert a == b

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            random_coverage(4, 0, 2, 0)
        with pytest.raises(ValueError):
            random_coverage(4, 3, 5, 0)

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_always_valid(self, seed):
        c = random_coverage(6, 8, 4, seed)
        assert c.total_weight() <= 1 + 1e-12


class TestL1DistanceMC:
    def test_identical_functions(self):
        c = random_coverage(5, 4, 3, 0)
        d = DistributionSpec.uniform(5)
        est, hw = l1_distance_mc(c.eval_masks, c.eval_masks, d, 1000, 0)
        assert est == 0.0
        assert hw == pytest.approx(math.sqrt(math.log(2 / 0.05) * 2 / 1000))

    def test_constant_gap(self):
        d = DistributionSpec.uniform(4)
        one = lambda m: np.ones(len(m))
        zero = lambda m: np.zeros(len(m))
        est, _ = l1_distance_mc(one, zero, d, 500, 1)
        assert est == 1.0

    def test_half_gap(self):
        c = CoverageFunction(4, 0.0, {1: 1.0})
        zero = lambda m: np.zeros(len(m))
        d = DistributionSpec.uniform(4)
        est, hw = l1_distance_mc(c.eval_masks, zero, d, 50_000, 2)
        assert abs(est - 0.5) < hw

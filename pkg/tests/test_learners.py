import math

import numpy as np
import pytest

from covlearn.coverage import (
    CoverageFunction,
    dense_table,
    exact_fourier,
    random_coverage,
)
from covlearn.cube import DistributionSpec, child_rng
from covlearn.estimation import exact_source
from covlearn.learners import (
    DisjointDnf,
    DnfClassifier,
    OracleExhausted,
    PmacHypothesis,
    PmacPolyLeaf,
    PmacZeroLeaf,
    RejectionRestrictedOracle,
    SampledOracle,
    SparsePolynomial,
    UniformTableOracle,
    agnostic_degree,
    agnostic_learn,
    dnf_input_map,
    dnf_reduction_learn,
    dnf_to_coverage,
    pac_core,
    pac_learn_uniform,
    pmac_learn,
    proper_agnostic_learn,
    proper_pac_learn,
    proper_size_bound,
    random_disjoint_dnf,
    truncation_length,
)


def l1_exact(h, c: CoverageFunction) -> float:
    masks = np.arange(1 << c.n, dtype=np.uint64)
    return float(np.abs(h.eval_masks(masks) - c.eval_masks(masks)).mean())


class TestSparsePolynomial:
    def test_rejects_unknown_basis(self):
        with pytest.raises(ValueError):
            SparsePolynomial(3, "monomial")

    def test_rejects_bad_layer_key(self):
        with pytest.raises(ValueError):
            SparsePolynomial(3, "layered_parity", layers={4: {0: 1.0}})

    def test_clamp(self):
        p = SparsePolynomial(2, "parity", {0: 1.5}, clamp=True)
        assert p(0) == 1.0

    def test_dense_and_sparse_eval_agree(self):
        rng = child_rng(0, 0)
        coeffs = {int(t): float(v) for t, v in zip(range(300), rng.random(300))}
        p_big = SparsePolynomial(10, "parity", coeffs)
        sparse = SparsePolynomial(10, "parity", dict(list(coeffs.items())[:100]))
        masks = np.arange(1 << 10, dtype=np.uint64)
        rest = SparsePolynomial(10, "parity", dict(list(coeffs.items())[100:]))
        combined = sparse.eval_masks(masks) + rest.eval_masks(masks)
        assert np.abs(p_big.eval_masks(masks) - combined).max() < 1e-9


class TestUniformTableOracle:
    def test_restrict_conditions_exactly(self):
        c = random_coverage(5, 4, 3, 0)
        o = UniformTableOracle.from_coverage(c)
        r = o.restrict(2, -1)
        masks = np.arange(32, dtype=np.uint64)
        expected = c.eval_masks(masks)[(masks >> np.uint64(2)) & np.uint64(1) == 1]
        assert np.array_equal(r.values, expected)
        assert r.free_vars == (0, 1, 3, 4)

    def test_lift_set(self):
        o = UniformTableOracle(5, (1, 3, 4), np.zeros(8))
        assert o.lift_set(0b101) == (1 << 1) | (1 << 4)

    def test_scaled_clamp(self):
        o = UniformTableOracle(1, (0,), np.array([0.0, 3.0]))
        assert o.scaled(0.5, clamp_unit=True).values.tolist() == [0.0, 1.0]

    def test_draw_counts_total(self):
        o = UniformTableOracle.from_coverage(random_coverage(4, 3, 2, 1))
        counts = o.draw_counts(10_000, child_rng(1, 0))
        assert counts.sum() == 10_000

    def test_draw_cap(self):
        o = UniformTableOracle.from_coverage(random_coverage(3, 2, 2, 0))
        with pytest.raises(OracleExhausted):
            o.draw(1 << 27, child_rng(0, 0))


class TestRejectionOracle:
    def test_conditioned_draws(self):
        d = DistributionSpec.uniform(4)
        base = SampledOracle(d, lambda m, rng: np.zeros(len(m)))
        r = RejectionRestrictedOracle(base, 2, -1)
        masks, _ = r.draw(500, child_rng(2, 0))
        assert (((masks >> np.uint64(2)) & np.uint64(1)) == 1).all()

    def test_budget_exhaustion(self):
        # conditioning on a layer-0 distribution having a -1 bit never succeeds
        d = DistributionSpec.layer(4, 0)
        base = SampledOracle(d, lambda m, rng: np.zeros(len(m)))
        r = RejectionRestrictedOracle(base, 0, -1)
        with pytest.raises(OracleExhausted):
            r.draw(100, child_rng(3, 0))


class TestPacLearning:
    @pytest.mark.parametrize("seed", range(5))
    def test_exact_source_error_bound(self, seed):
        # with exact coefficient sources the kept tail satisfies the
        # Parseval bound, so the l1 error is at most eps deterministically
        n = 10
        c = random_coverage(n, 8, 6, seed)
        t = exact_fourier(c)
        src = exact_source(t)
        eps = 0.25
        h = pac_core(n, eps, src, lambda pool: src)
        assert l1_exact(h, c) <= eps
        # concentration: mass off the kept support is at most eps^2 / 3
        tail = sum(v * v for m, v in t.coeffs.items() if m not in h.coeffs)
        assert tail <= eps * eps / 3 + 1e-12

    def test_pair_disjunction_support_recovery(self):
        c = CoverageFunction(6, 0.0, {0b11: 0.25})
        o = UniformTableOracle.from_coverage(c)
        h = pac_learn_uniform(o, 0.4, 7)
        # theta = 0.16^... eps^2/6 = 0.0267: all four true sets pass it
        assert set(h.coeffs) >= {0, 0b01, 0b10, 0b11}
        assert l1_exact(h, c) <= 0.4

    def test_sampled_run_small_error(self):
        c = random_coverage(8, 6, 4, 11)
        o = UniformTableOracle.from_coverage(c)
        h = pac_learn_uniform(o, 0.3, 5)
        assert l1_exact(h, c) <= 0.3

    def test_rejects_bad_eps(self):
        o = UniformTableOracle.from_coverage(random_coverage(3, 2, 2, 0))
        with pytest.raises(ValueError):
            pac_learn_uniform(o, 1.5, 0)


class TestPmacLearning:
    def test_zero_target_gives_zero_leaf(self):
        o = UniformTableOracle.from_coverage(CoverageFunction.zero(5))
        h = pmac_learn(o, 0.5, 0.2, 0)
        assert isinstance(h.root, PmacZeroLeaf)
        assert h.eval_masks(np.arange(32, dtype=np.uint64)).max() == 0.0

    def test_bounded_away_target_single_leaf(self):
        # c = 1/2 + 1/2 OR_1 never drops below half its max, so no split
        c = CoverageFunction(5, 0.5, {1: 0.5})
        o = UniformTableOracle.from_coverage(c)
        h = pmac_learn(o, 0.5, 0.2, 1)
        assert isinstance(h.root, PmacPolyLeaf)

    @pytest.mark.parametrize("seed", range(3))
    def test_multiplicative_guarantee_and_nonnegativity(self, seed):
        c = random_coverage(8, 6, 4, seed + 20)
        o = UniformTableOracle.from_coverage(c)
        gamma, delta = 0.5, 0.2
        h = pmac_learn(o, gamma, delta, seed)
        masks = np.arange(1 << 8, dtype=np.uint64)
        hv = h.eval_masks(masks)
        cv = c.eval_masks(masks)
        assert (hv >= 0).all()
        good = (hv <= cv + 1e-12) & (cv <= (1 + gamma) * hv + 1e-12)
        assert good.mean() >= 1 - delta

    def test_depth_capped(self):
        c = random_coverage(10, 8, 6, 3)
        o = UniformTableOracle.from_coverage(c)
        delta = 0.2
        h = pmac_learn(o, 0.5, delta, 2)
        assert h.depth() <= math.ceil(math.log2(3.0 / delta)) + 1

    def test_rejects_bad_args(self):
        o = UniformTableOracle.from_coverage(CoverageFunction.zero(3))
        with pytest.raises(ValueError):
            pmac_learn(o, 0.0, 0.2, 0)
        with pytest.raises(ValueError):
            pmac_learn(o, 0.5, 1.2, 0)


class TestProperPac:
    def test_size_bound_formula(self):
        eps = 0.3
        expected = (12.0 / eps) ** math.ceil(math.log2(6.0 / eps))
        assert proper_size_bound(eps, math.inf) == expected
        assert proper_size_bound(eps, 5.0) == 5.0

    def test_zero_target(self):
        o = UniformTableOracle.from_coverage(CoverageFunction.zero(5))
        h = proper_pac_learn(o, 0.3, 5, 0)
        assert isinstance(h, CoverageFunction)
        assert l1_exact(h, CoverageFunction.zero(5)) <= 1e-7

    def test_recovers_small_target(self):
        c = random_coverage(8, 5, 4, 2)
        o = UniformTableOracle.from_coverage(c)
        h = proper_pac_learn(o, 0.3, c.size(), 3)
        # the hypothesis is a legal coverage function by construction
        assert isinstance(h, CoverageFunction)
        assert l1_exact(h, c) <= 0.3

    def test_rejects_bad_args(self):
        o = UniformTableOracle.from_coverage(CoverageFunction.zero(3))
        with pytest.raises(ValueError):
            proper_pac_learn(o, 0.3, 0.5, 0)


class TestAgnostic:
    def test_degree_formula(self):
        assert agnostic_degree(0.25) == math.ceil(math.log2(12))

    def test_single_layer_fits_constant_label(self):
        # all mass on the top layer with a constant label: the fit must
        # return that label at the all-minus-one point
        d = DistributionSpec.layer(4, 4)
        o = SampledOracle(d, lambda m, rng: np.full(len(m), 0.37))
        h = agnostic_learn(o, d, 0.3, 0)
        assert h(0b1111) == pytest.approx(0.37, abs=1e-6)

    def test_noisy_coverage_target(self):
        c = random_coverage(3, 3, 2, 1)
        d = DistributionSpec.uniform(3)
        noise = 0.05

        def label(m, rng):
            return np.clip(c.eval_masks(m) + rng.uniform(-noise, noise, len(m)), 0, 1)

        h = agnostic_learn(SampledOracle(d, label), d, 0.15, 4)
        assert l1_exact(h, c) <= noise + 0.15

    def test_symmetric_distribution_layered_output(self):
        d = DistributionSpec.symmetric([0.0, 0.5, 0.5, 0.0])
        c = CoverageFunction(3, 0.0, {0b001: 0.5})
        o = SampledOracle(d, lambda m, rng: c.eval_masks(m))
        h = agnostic_learn(o, d, 0.3, 6)
        assert h.basis == "layered_parity"
        masks = np.arange(8, dtype=np.uint64)
        weights = np.bitwise_count(masks)
        sel = (weights == 1) | (weights == 2)
        err = np.abs(h.eval_masks(masks) - c.eval_masks(masks))[sel].mean()
        assert err <= 0.3


class TestProperAgnostic:
    def test_truncation_length_formula(self):
        assert truncation_length(0.25, 0.25) == 16
        with pytest.raises(ValueError):
            truncation_length(0.6, 0.25)

    def test_constant_half_labels(self):
        d = DistributionSpec.uniform(3)
        o = SampledOracle(d, lambda m, rng: np.full(len(m), 0.5))
        h = proper_agnostic_learn(o, d, 0.5, 0.5, 0)
        assert isinstance(h, CoverageFunction)
        masks = np.arange(8, dtype=np.uint64)
        assert np.abs(h.eval_masks(masks) - 0.5).mean() <= 1e-6

    def test_exact_coverage_target(self):
        c = CoverageFunction(3, 0.1, {0b011: 0.4})
        d = DistributionSpec.uniform(3)
        o = SampledOracle(d, lambda m, rng: c.eval_masks(m))
        h = proper_agnostic_learn(o, d, 0.4, 0.5, 1)
        assert l1_exact(h, c) <= 0.4

    def test_rejects_unbounded_distribution(self):
        d = DistributionSpec.product([0.01, 0.5])
        o = SampledOracle(d, lambda m, rng: np.zeros(len(m)))
        with pytest.raises(ValueError):
            proper_agnostic_learn(o, d, 0.3, 0.25, 0)


class TestDnfReduction:
    def test_input_map_example(self):
        # x = (-1, +1) maps to (-1, +1, +1, -1)
        out = dnf_input_map(np.array([0b01], dtype=np.uint64), 2)
        assert out[0] == 0b1001

    def test_disjoint_validation(self):
        with pytest.raises(ValueError):
            DisjointDnf(2, (((0b01), 0b01),))  # both polarities of x_1
        with pytest.raises(ValueError):
            DisjointDnf(2, ((0b01, 0), (0b11, 0)))  # overlapping terms

    @pytest.mark.parametrize("seed", range(10))
    def test_coverage_identity(self, seed):
        n, s = 5, 3
        d = random_disjoint_dnf(n, s, seed)
        c = dnf_to_coverage(d)
        masks = np.arange(1 << n, dtype=np.uint64)
        mapped = dnf_input_map(masks, n)
        lhs = d.eval_masks(masks)
        rhs = s * (1.0 - c.eval_masks(mapped))
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_exact_inner_learner_zero_error(self):
        n, s = 6, 3
        d = random_disjoint_dnf(n, s, 4)
        target = dnf_to_coverage(d)

        class BoolOracle:
            n = d.n

            def draw(self, m, rng):
                masks = rng.integers(0, 1 << d.n, size=m, dtype=np.uint64)
                return masks, d.eval_masks(masks)

        h = dnf_reduction_learn(BoolOracle(), s, 0.1, lambda o, e: target)
        assert isinstance(h, DnfClassifier)
        masks = np.arange(1 << n, dtype=np.uint64)
        assert np.array_equal(h.eval_masks(masks), d.eval_masks(masks))

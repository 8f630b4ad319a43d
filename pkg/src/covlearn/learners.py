"""Learning algorithms for coverage functions.

Implemented learners, all from uniform or specified-distribution examples:

- pac_learn_uniform: sparse-polynomial hypothesis with l1 error eps.
- pmac_learn: multiplicative (1+gamma) approximation on 1-delta mass.
- proper_pac_learn: hypothesis is itself a coverage function.
- agnostic_learn: excess l1 error eps against the best coverage fit, for
  product and symmetric distributions.
- proper_agnostic_learn: agnostic and proper, for bounded product
  distributions.
- dnf_reduction_learn: learns disjoint DNFs through the coordinate-doubling
  reduction to coverage learning.

Nominal sample counts can be astronomically large at small accuracy
parameters.  When the example oracle is backed by a dense value table over
the (sub)cube (n up to ~24), drawing N uniform examples is simulated exactly
by a multinomial draw of per-cell counts, and all Fourier estimates come
from one Walsh-Hadamard transform of the weighted counts.  This is
distribution-identical to drawing the N examples one by one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .coverage import CoverageFunction, walsh_hadamard
from .cube import (
    DistributionSpec,
    IndexSet,
    child_rng,
    eval_disjunction_batch,
    eval_parity_batch,
    popcount,
    sample_masks,
)
from .estimation import (
    CoeffSource,
    CoefficientEstimate,
    SampleBatch,
    batch_source,
    hoeffding_half_width,
    hoeffding_samples,
    lattice_search,
    spectrum_from_counts,
    spectrum_source,
)
from .regression import SIMPLEX_LIKE, UNCONSTRAINED, L1Problem, solve_l1

# Centralized algorithm constants.  Accuracy/confidence parameters flow in
# from callers; these are the fixed numeric choices of the implementation.
PAC_THETA_DIV = 6  # theta = eps^2 / 6
PAC_PHASE_FAILURE = 1 / 6  # two phases at 1/6 each, overall confidence 2/3
PROPER_THETA_DIV = 108  # theta = eps^2 / 108
PROPER_PHASE_FAILURE = 1 / 9  # three phases at 1/9 each
PMAC_ETA_NUM = 1 / 18  # eta = (1/18) / log2(3/delta)
BOOST_REPS_FACTOR = 8  # r = ceil(8 ln(2/eta)) repetitions
REGRESSION_SAMPLE_FACTOR = 64  # m = ceil(64 * features / eps^2)
FEATURE_CAP = 20000
DIRECT_DRAW_CAP = 1 << 26  # largest materialized sample for generic oracles
DENSE_EVAL_SUPPORT = 256  # polynomial support above which dense eval is used
REJECTION_CAP_FACTOR = 100


class OracleExhausted(RuntimeError):
    """The example oracle cannot supply the requested sample."""


class BasisTooLarge(ValueError):
    """Feature basis exceeds the documented column cap."""


@dataclass(frozen=True)
class LearnParams:
    """Bundle of learner parameters; epsilon doubles as gamma for PMAC."""

    epsilon: float
    delta: float = 1 / 3
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.epsilon < 1 or not 0 < self.delta < 1:
            raise ValueError("parameters must lie in (0,1)")


# --------------------------------------------------------------------------
# Hypothesis representations


@dataclass(frozen=True)
class SparsePolynomial:
    """Sparse polynomial hypothesis.

    basis "parity": value = sum over T of coeffs[T] * chi_T(x).
    basis "layered_parity": a separate parity polynomial per Hamming layer,
    value = sum over T of layers[weight(x)][T] * chi_T(x).
    clamp restricts emitted values to [0,1].
    """

    n: int
    basis: str = "parity"
    coeffs: Mapping[int, float] = field(default_factory=dict)
    layers: Mapping[int, Mapping[int, float]] = field(default_factory=dict)
    clamp: bool = False

    def __post_init__(self) -> None:
        if self.basis not in ("parity", "layered_parity"):
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.basis == "layered_parity":
            if any(not 0 <= k <= self.n for k in self.layers):
                raise ValueError("layer keys must lie in 0..n")

    def support_size(self) -> int:
        if self.basis == "parity":
            return len(self.coeffs)
        return sum(len(c) for c in self.layers.values())

    def eval_masks(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.uint64)
        if self.basis == "parity":
            out = _eval_parity_poly(self.n, self.coeffs, masks)
        else:
            out = np.zeros(len(masks), dtype=np.float64)
            weights = popcount(masks)
            for k, coeffs in self.layers.items():
                sel = weights == k
                if sel.any():
                    out[sel] = _eval_parity_poly(self.n, coeffs, masks[sel])
        if self.clamp:
            out = np.clip(out, 0.0, 1.0)
        return out

    def __call__(self, mask: int) -> float:
        return float(self.eval_masks(np.array([mask], dtype=np.uint64))[0])


def _eval_parity_poly(
    n: int, coeffs: Mapping[int, float], masks: np.ndarray
) -> np.ndarray:
    if not coeffs:
        return np.zeros(len(masks), dtype=np.float64)
    if len(coeffs) > DENSE_EVAL_SUPPORT and n <= 24:
        dense = np.zeros(1 << n, dtype=np.float64)
        for t, v in coeffs.items():
            dense[t] = v
        return walsh_hadamard(dense)[masks]
    out = np.zeros(len(masks), dtype=np.float64)
    for t, v in coeffs.items():
        out += v * eval_parity_batch(t, masks)
    return out


@dataclass(frozen=True)
class PmacZeroLeaf:
    def eval_masks(self, masks: np.ndarray) -> np.ndarray:
        return np.zeros(len(masks), dtype=np.float64)

    def depth(self) -> int:
        return 0


@dataclass(frozen=True)
class PmacPolyLeaf:
    """Shifted, rescaled and clamped polynomial leaf:
    value = max(m_tilde/4, 3*m_tilde*(poly(x) - shift))."""

    poly: SparsePolynomial
    m_tilde: float
    shift: float

    def eval_masks(self, masks: np.ndarray) -> np.ndarray:
        raw = 3.0 * self.m_tilde * (self.poly.eval_masks(masks) - self.shift)
        return np.maximum(self.m_tilde / 4.0, raw)

    def depth(self) -> int:
        return 0


@dataclass(frozen=True)
class PmacNode:
    """Split on coordinate var: minus branch handles x_var = -1."""

    var: int
    minus: "PmacNode | PmacPolyLeaf | PmacZeroLeaf"
    plus: "PmacNode | PmacPolyLeaf | PmacZeroLeaf"

    def eval_masks(self, masks: np.ndarray) -> np.ndarray:
        out = np.empty(len(masks), dtype=np.float64)
        sel = ((masks >> np.uint64(self.var)) & np.uint64(1)) == 1
        if sel.any():
            out[sel] = self.minus.eval_masks(masks[sel])
        if (~sel).any():
            out[~sel] = self.plus.eval_masks(masks[~sel])
        return out

    def depth(self) -> int:
        return 1 + max(self.minus.depth(), self.plus.depth())


@dataclass(frozen=True)
class PmacHypothesis:
    """Decision tree of subcube prefixes with non-negative leaves."""

    n: int
    root: PmacNode | PmacPolyLeaf | PmacZeroLeaf

    def eval_masks(self, masks: np.ndarray) -> np.ndarray:
        return self.root.eval_masks(np.asarray(masks, dtype=np.uint64))

    def __call__(self, mask: int) -> float:
        return float(self.eval_masks(np.array([mask], dtype=np.uint64))[0])

    def depth(self) -> int:
        return self.root.depth()


# --------------------------------------------------------------------------
# Example oracles


@dataclass(frozen=True)
class UniformTableOracle:
    """Uniform example oracle over a subcube, backed by a dense value table.

    free_vars[i] is the original coordinate carried by compact bit i; values
    has one target value per compact cell mask.  Restriction fixes one free
    coordinate and compacts the table, which conditions the uniform
    distribution exactly.
    """

    n_total: int
    free_vars: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.values) != 1 << len(self.free_vars):
            raise ValueError("table length must be 2^(free variable count)")

    @classmethod
    def from_coverage(cls, c: CoverageFunction) -> "UniformTableOracle":
        masks = np.arange(1 << c.n, dtype=np.uint64)
        return cls(c.n, tuple(range(c.n)), c.eval_masks(masks))

    @classmethod
    def from_function(
        cls, f: Callable[[np.ndarray], np.ndarray], n: int
    ) -> "UniformTableOracle":
        masks = np.arange(1 << n, dtype=np.uint64)
        return cls(n, tuple(range(n)), np.asarray(f(masks), dtype=np.float64))

    @property
    def n(self) -> int:
        return len(self.free_vars)

    def draw(self, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if m > DIRECT_DRAW_CAP:
            raise OracleExhausted(f"direct draw of {m} examples is over the cap")
        masks = rng.integers(0, len(self.values), size=m, dtype=np.uint64)
        return masks, self.values[masks]

    def draw_counts(self, total: int, rng: np.random.Generator) -> np.ndarray:
        """Exact per-cell counts of `total` i.i.d. uniform draws.

        Totals beyond the int64 range are drawn in exact chunks; the count
        array is float64, adequate for every tolerance used here.
        """
        cells = len(self.values)
        p = np.full(cells, 1.0 / cells)
        counts = np.zeros(cells, dtype=np.float64)
        remaining = int(total)
        chunk_cap = 4 * 10**18
        while remaining > 0:
            chunk = min(remaining, chunk_cap)
            counts += rng.multinomial(chunk, p)
            remaining -= chunk
        return counts

    def restrict(self, compact_var: int, sign: int) -> "UniformTableOracle":
        """Fix free coordinate compact_var to sign (-1 or +1)."""
        if not 0 <= compact_var < self.n:
            raise ValueError("variable index out of range")
        idx = np.arange(len(self.values))
        want = 1 if sign == -1 else 0
        sel = (idx >> compact_var) & 1 == want
        new_vars = tuple(v for i, v in enumerate(self.free_vars) if i != compact_var)
        return UniformTableOracle(self.n_total, new_vars, self.values[sel])

    def scaled(self, factor: float, clamp_unit: bool = False) -> "UniformTableOracle":
        vals = self.values * factor
        if clamp_unit:
            vals = np.clip(vals, 0.0, 1.0)
        return UniformTableOracle(self.n_total, self.free_vars, vals)

    def lift_set(self, compact_set_mask: int) -> int:
        mask = 0
        for i, v in enumerate(self.free_vars):
            if compact_set_mask >> i & 1:
                mask |= 1 << v
        return mask


@dataclass(frozen=True)
class SampledOracle:
    """Generic example oracle: draws points from a distribution and labels
    them with a callback (which may inject noise via its rng argument)."""

    dist: DistributionSpec
    label_fn: Callable[[np.ndarray, np.random.Generator], np.ndarray]

    @property
    def n(self) -> int:
        return self.dist.n

    def draw(self, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if m > DIRECT_DRAW_CAP:
            raise OracleExhausted(f"direct draw of {m} examples is over the cap")
        masks = sample_masks(self.dist, m, rng)
        return masks, np.asarray(self.label_fn(masks, rng), dtype=np.float64)


@dataclass(frozen=True)
class RejectionRestrictedOracle:
    """Conditions a generic oracle on x_var = sign by rejection sampling,
    giving up after 100x the expected number of draws."""

    parent: "SampledOracle | RejectionRestrictedOracle"
    var: int
    sign: int

    @property
    def n(self) -> int:
        return self.parent.n

    def draw(self, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        want = 1 if self.sign == -1 else 0
        out_masks: list[np.ndarray] = []
        out_labels: list[np.ndarray] = []
        got = 0
        budget = REJECTION_CAP_FACTOR * 2 * m
        while got < m:
            take = min(max(2 * (m - got), 64), DIRECT_DRAW_CAP)
            if budget <= 0:
                raise OracleExhausted("rejection sampling budget exhausted")
            take = min(take, budget)
            budget -= take
            masks, labels = self.parent.draw(take, rng)
            sel = ((masks >> np.uint64(self.var)) & np.uint64(1)) == want
            out_masks.append(masks[sel])
            out_labels.append(labels[sel])
            got += int(sel.sum())
        masks = np.concatenate(out_masks)[:m]
        labels = np.concatenate(out_labels)[:m]
        return masks, labels


def _oracle_coeff_source(
    oracle, m: int, rng: np.random.Generator, failure: float
) -> CoeffSource:
    """Empirical coefficient source from one sample of size m."""
    if isinstance(oracle, UniformTableOracle):
        counts = oracle.draw_counts(m, rng)
        spectrum = spectrum_from_counts(counts, oracle.values)
        return spectrum_source(oracle.n, spectrum, hoeffding_half_width(m, failure))
    masks, labels = oracle.draw(m, rng)
    return batch_source(SampleBatch(oracle.n, masks, labels), failure)


# --------------------------------------------------------------------------
# PAC learning (improper)


def _pac_pool_bound(theta: float, itilde_size: int) -> int:
    # every kept set satisfies |estimate| >= theta, so |true coeff| >= theta/2
    # and spectral-norm 2 bounds kept sets by 4/theta; each is extended by at
    # most |I~| candidates
    return math.ceil(4.0 / theta * max(itilde_size, 1)) + 1


def pac_core(
    n: int,
    eps: float,
    phase1_source: CoeffSource,
    phase2_source_for: Callable[[int], CoeffSource],
) -> SparsePolynomial:
    """Two-phase sparse Fourier selection shared by the sampled and the
    private-query paths: singleton screen, then lattice search.

    phase2_source_for receives the union-bound pool size so the caller can
    budget its per-estimate confidence.
    """
    theta = eps * eps / PAC_THETA_DIV
    max_level = math.ceil(math.log2(2.0 / theta))
    itilde = [i for i in range(n) if abs(phase1_source(1 << i).value) >= theta]
    pool = _pac_pool_bound(theta, len(itilde))
    source = phase2_source_for(pool)
    kept = lattice_search(
        source, IndexSet.from_indices(itilde, n), theta, max_level
    )
    return SparsePolynomial(n, "parity", {t: e.value for t, e in kept.items()})


def pac_learn_uniform(oracle, eps: float, seed: int) -> SparsePolynomial:
    """PAC learner from uniform examples with l1 error eps (confidence 2/3
    when the target is a coverage function)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    n = oracle.n
    theta = eps * eps / PAC_THETA_DIV
    m1 = hoeffding_samples(theta / 2, PAC_PHASE_FAILURE / n)
    phase1 = _oracle_coeff_source(oracle, m1, child_rng(seed, 1), PAC_PHASE_FAILURE / n)

    def phase2_for(pool: int) -> CoeffSource:
        failure = PAC_PHASE_FAILURE / pool
        m2 = hoeffding_samples(theta / 2, failure)
        return _oracle_coeff_source(oracle, m2, child_rng(seed, 2), failure)

    return pac_core(n, eps, phase1, phase2_for)


# --------------------------------------------------------------------------
# PMAC learning


def _score_on_holdout(
    oracle, hyps: Sequence[SparsePolynomial], m: int, rng: np.random.Generator
) -> int:
    """Index of the hypothesis with least empirical l1 error on a fresh
    held-out sample of size m."""
    if isinstance(oracle, UniformTableOracle):
        counts = oracle.draw_counts(m, rng)
        cells = np.arange(len(oracle.values), dtype=np.uint64)
        scores = [
            float(counts @ np.abs(h.eval_masks(cells) - oracle.values)) / m
            for h in hyps
        ]
    else:
        masks, labels = oracle.draw(m, rng)
        scores = [float(np.abs(h.eval_masks(masks) - labels).mean()) for h in hyps]
    return int(np.argmin(scores))


def _boosted_pac(oracle, eps: float, eta: float, seed: int) -> SparsePolynomial:
    """PAC learner with confidence boosted from 2/3 to 1-eta: r independent
    runs scored on a held-out batch, keeping the best."""
    r = math.ceil(BOOST_REPS_FACTOR * math.log(2.0 / eta))
    hyps = [pac_learn_uniform(oracle, eps, seed * 1000 + 7 * i) for i in range(r)]
    m_hold = hoeffding_samples(eps / 4, eta / (2 * r))
    best = _score_on_holdout(oracle, hyps, m_hold, child_rng(seed, 999))
    return hyps[best]


def _lift_poly(poly: SparsePolynomial, oracle: UniformTableOracle) -> SparsePolynomial:
    coeffs = {oracle.lift_set(t): v for t, v in poly.coeffs.items()}
    return SparsePolynomial(oracle.n_total, "parity", coeffs)


def pmac_learn(
    oracle: UniformTableOracle, gamma: float, delta: float, seed: int
) -> PmacHypothesis:
    """Multiplicative approximation: with probability at least 2/3 the output
    h satisfies Pr[h(x) <= c(x) <= (1+gamma) h(x)] >= 1-delta.

    The target may be any non-negative coverage function; the range is not
    assumed bounded by 1.
    """
    if not 0 < gamma or not 0 < delta < 1:
        raise ValueError("gamma must be positive and delta in (0,1)")
    depth_cap = math.log2(3.0 / delta)
    eta = PMAC_ETA_NUM / depth_cap
    root = _pmac_recurse(oracle, 0, gamma, delta, eta, depth_cap, seed)
    return PmacHypothesis(oracle.n_total, root)


def _pmac_recurse(
    oracle: UniformTableOracle,
    k: int,
    gamma: float,
    delta: float,
    eta: float,
    depth_cap: float,
    seed: int,
):
    if k > depth_cap:
        return PmacZeroLeaf()
    rng = child_rng(seed, k, 0)
    # 3-approximation of the maximum: Pr[c >= M/3] >= 1/4 per sample
    m_max = math.ceil(math.log(2.0 / eta) / math.log(4.0 / 3.0))
    _, labels = oracle.draw(m_max, rng)
    m_tilde = float(labels.max())
    if m_tilde == 0.0:
        return PmacZeroLeaf()

    # p~ estimates Pr[c <= M~/4] within delta/9
    m_p = hoeffding_samples(delta / 9, eta)
    p_tilde = _estimate_small_fraction(oracle, m_tilde / 4.0, m_p, rng)

    if p_tilde < 2 * delta / 9:
        eps1 = (1.0 / 12.0) * (gamma / 2.0) * (delta / 3.0)
        scaled = oracle.scaled(1.0 / (3.0 * m_tilde), clamp_unit=True)
        poly = _boosted_pac(scaled, eps1, eta, seed * 31 + k)
        return PmacPolyLeaf(_lift_poly(poly, oracle), m_tilde, gamma / 24.0)

    # pivot search: a coordinate whose -1 half has uniformly large labels
    log_term = math.log(9.0 / delta)
    m_piv = math.ceil((3.0 / delta) * math.log(oracle.n / eta))
    masks, labels = oracle.draw(m_piv, rng)
    label_floor = m_tilde / (16.0 * log_term)
    pivot = None
    for j in range(oracle.n):
        sel = ((masks >> np.uint64(j)) & np.uint64(1)) == 1
        if not sel.any() or labels[sel].min() >= label_floor:
            pivot = j
            break
    if pivot is None:
        return PmacZeroLeaf()

    minus_oracle = oracle.restrict(pivot, -1)
    eps_minus = (gamma / 2.0) * (delta / 3.0) / (48.0 * log_term)
    scaled = minus_oracle.scaled(1.0 / (3.0 * m_tilde), clamp_unit=True)
    poly = _boosted_pac(scaled, eps_minus, eta, seed * 37 + k)
    minus_leaf = PmacPolyLeaf(
        _lift_poly(poly, minus_oracle), m_tilde, gamma / (96.0 * log_term)
    )
    plus_branch = _pmac_recurse(
        oracle.restrict(pivot, +1), k + 1, gamma, delta, eta, depth_cap, seed
    )
    return PmacNode(oracle.free_vars[pivot], minus_leaf, plus_branch)


def _estimate_small_fraction(
    oracle, threshold: float, m: int, rng: np.random.Generator
) -> float:
    """Empirical estimate of Pr[label <= threshold] over m fresh examples."""
    if isinstance(oracle, UniformTableOracle):
        counts = oracle.draw_counts(m, rng)
        return float(counts[oracle.values <= threshold].sum()) / m
    _, labels = oracle.draw(m, rng)
    return float((labels <= threshold).mean())


# --------------------------------------------------------------------------
# Proper PAC learning


def proper_size_bound(eps: float, size_bound: float) -> float:
    """s_eps = min(size bound, (12/eps)^ceil(log2(6/eps)))."""
    return min(size_bound, (12.0 / eps) ** math.ceil(math.log2(6.0 / eps)))


def proper_pac_core(
    n: int,
    eps: float,
    s_eps: float,
    phase1_source: CoeffSource,
    phase2_source_for: Callable[[int], CoeffSource],
    draw_labeled: Callable[[int], tuple[np.ndarray, np.ndarray]],
) -> CoverageFunction:
    """Three stages shared by the sampled and the private-query paths:
    singleton screen, lattice search at the size-aware threshold, then
    simplex-constrained l1 regression over the selected disjunctions."""
    theta = eps * eps / PROPER_THETA_DIV
    max_level = math.ceil(math.log2(6.0 / eps))
    keep_thr = eps * eps / (54.0 * s_eps)
    est_tol = eps * eps / (108.0 * s_eps)

    itilde = [i for i in range(n) if abs(phase1_source(1 << i).value) >= theta]
    pool = math.ceil(2.0 / est_tol * max(len(itilde), 1)) + 1
    kept = lattice_search(
        phase2_source_for(pool),
        IndexSet.from_indices(itilde, n),
        keep_thr,
        max_level,
    )
    sets = sorted(t for t in kept if t != 0)

    m3 = max(
        hoeffding_samples(eps / 2, PROPER_PHASE_FAILURE),
        math.ceil(REGRESSION_SAMPLE_FACTOR * (len(sets) + 1) / eps**2),
    )
    masks, labels = draw_labeled(m3)
    design = np.empty((len(masks), len(sets) + 1), dtype=np.float64)
    design[:, 0] = 1.0
    for j, s in enumerate(sets):
        design[:, j + 1] = eval_disjunction_batch(s, masks)
    sol = solve_l1(L1Problem(design, labels, SIMPLEX_LIKE))
    affine = float(sol.coefficients[0])
    terms = {
        s: float(w) for s, w in zip(sets, sol.coefficients[1:]) if w > 0.0
    }
    return CoverageFunction(n, affine, terms)


def proper_pac_learn(
    oracle, eps: float, size_bound: float, seed: int
) -> CoverageFunction:
    """Proper PAC learner: the hypothesis is itself a coverage function with
    l1 error at most eps (confidence 2/3).  size_bound is the caller's bound
    on the number of terms of the target, or math.inf."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    if size_bound < 1:
        raise ValueError("size_bound must be >= 1")
    n = oracle.n
    s_eps = proper_size_bound(eps, size_bound)
    theta = eps * eps / PROPER_THETA_DIV
    est_tol = eps * eps / (108.0 * s_eps)
    m1 = hoeffding_samples(theta / 2, PROPER_PHASE_FAILURE / n)
    phase1 = _oracle_coeff_source(
        oracle, m1, child_rng(seed, 1), PROPER_PHASE_FAILURE / n
    )

    def phase2_for(pool: int) -> CoeffSource:
        failure = PROPER_PHASE_FAILURE / pool
        m2 = hoeffding_samples(est_tol, failure)
        return _oracle_coeff_source(oracle, m2, child_rng(seed, 2), failure)

    def draw_labeled(m3: int) -> tuple[np.ndarray, np.ndarray]:
        return oracle.draw(m3, child_rng(seed, 3))

    return proper_pac_core(n, eps, s_eps, phase1, phase2_for, draw_labeled)


# --------------------------------------------------------------------------
# Agnostic learning


def agnostic_degree(eps: float) -> int:
    return math.ceil(math.log2(3.0 / eps))


def _sets_up_to(n: int, degree: int, include_empty: bool = True) -> list[int]:
    out = [0] if include_empty else []
    for size in range(1, min(degree, n) + 1):
        for combo in itertools.combinations(range(n), size):
            out.append(sum(1 << i for i in combo))
    return out


def agnostic_learn(
    oracle, d: DistributionSpec, eps: float, seed: int
) -> SparsePolynomial:
    """Agnostic learner for product and symmetric distributions: excess l1
    error at most eps over the best coverage-function fit (confidence 2/3).
    Labels may be arbitrary values in [0,1]."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    n = d.n
    deg = agnostic_degree(eps)
    parities = _sets_up_to(n, deg)

    if d.variant in ("uniform", "product"):
        layer_keys: list[int] | None = None
        features = [(None, t) for t in parities]
    else:
        if d.variant == "layer":
            layer_keys = [d.k]
        else:
            layer_keys = [k for k, w in enumerate(d.layer_weights) if w > 0]
        features = [(k, t) for k in layer_keys for t in parities]
    if len(features) > FEATURE_CAP:
        raise BasisTooLarge(
            f"basis needs {len(features)} features, over the cap {FEATURE_CAP}"
        )

    m = math.ceil(REGRESSION_SAMPLE_FACTOR * len(features) / eps**2)
    masks, labels = oracle.draw(m, child_rng(seed, 0))
    design = np.empty((m, len(features)), dtype=np.float64)
    if layer_keys is None:
        for j, (_, t) in enumerate(features):
            design[:, j] = eval_parity_batch(t, masks)
    else:
        weights = popcount(masks)
        for j, (k, t) in enumerate(features):
            design[:, j] = eval_parity_batch(t, masks) * (weights == k)
    sol = solve_l1(L1Problem(design, labels, UNCONSTRAINED))

    if layer_keys is None:
        coeffs = {
            t: float(v)
            for (_, t), v in zip(features, sol.coefficients)
            if v != 0.0
        }
        return SparsePolynomial(n, "parity", coeffs, clamp=True)
    layers: dict[int, dict[int, float]] = {k: {} for k in layer_keys}
    for (k, t), v in zip(features, sol.coefficients):
        if v != 0.0:
            layers[k][t] = float(v)
    return SparsePolynomial(n, "layered_parity", layers=layers, clamp=True)


def truncation_length(kappa: float, eps: float) -> int:
    """Disjunction length beyond which terms are eps-close to constant under
    a kappa-bounded product distribution: (2/kappa) * ceil(log2(1/eps))."""
    if not 0 < kappa <= 0.5 or not 0 < eps < 1:
        raise ValueError("kappa must lie in (0,1/2] and eps in (0,1)")
    return math.ceil(2.0 / kappa * math.ceil(math.log2(1.0 / eps)))


def proper_agnostic_learn(
    oracle, d: DistributionSpec, eps: float, kappa: float, seed: int
) -> CoverageFunction:
    """Proper agnostic learner for kappa-bounded product distributions.

    The stated excess error eps is split internally: eps/2 for truncating to
    short disjunctions, eps/2 for the regression."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0,1)")
    if d.variant not in ("uniform", "product"):
        raise ValueError("proper agnostic learning needs a product distribution")
    biases = d.biases if d.variant == "product" else (0.5,) * d.n
    if any(min(b, 1 - b) < kappa - 1e-12 for b in biases):
        raise ValueError(f"marginals must satisfy min(bias, 1-bias) >= {kappa}")

    half = eps / 2.0
    k_len = truncation_length(kappa, half)
    sets = _sets_up_to(d.n, k_len, include_empty=False)
    if len(sets) + 1 > FEATURE_CAP:
        raise BasisTooLarge(
            f"basis needs {len(sets) + 1} features, over the cap {FEATURE_CAP}"
        )
    m = math.ceil(REGRESSION_SAMPLE_FACTOR * (len(sets) + 1) / half**2)
    masks, labels = oracle.draw(m, child_rng(seed, 0))
    design = np.empty((m, len(sets) + 1), dtype=np.float64)
    design[:, 0] = 1.0
    for j, s in enumerate(sets):
        design[:, j + 1] = eval_disjunction_batch(s, masks)
    sol = solve_l1(L1Problem(design, labels, SIMPLEX_LIKE))
    affine = float(sol.coefficients[0])
    terms = {s: float(w) for s, w in zip(sets, sol.coefficients[1:]) if w > 0.0}
    return CoverageFunction(d.n, affine, terms)


# --------------------------------------------------------------------------
# Disjoint-DNF reduction


@dataclass(frozen=True)
class DisjointDnf:
    """DNF whose terms are mutually exclusive.  Each term is a pair of masks:
    positive literals (require x_i = -1) and negated literals (require +1)."""

    n: int
    terms: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        for pos, neg in self.terms:
            if pos & neg:
                raise ValueError("a term uses a variable in both polarities")
            if (pos | neg) >> self.n:
                raise ValueError("term uses variables outside the first n")
        for a, b in itertools.combinations(self.terms, 2):
            if not ((a[0] & b[1]) | (b[0] & a[1])):
                raise ValueError("terms are not mutually exclusive")

    def eval_masks(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.uint64)
        out = np.zeros(len(masks), dtype=np.float64)
        for pos, neg in self.terms:
            hit = ((masks & np.uint64(pos)) == pos) & ((masks & np.uint64(neg)) == 0)
            out = np.maximum(out, hit.astype(np.float64))
        return out


def random_disjoint_dnf(n: int, s: int, seed: int) -> DisjointDnf:
    """Random s-term disjoint DNF: terms carry distinct patterns on a block
    of selector variables (which forces disjointness) plus random extra
    literals."""
    if s < 1:
        raise ValueError("s must be >= 1")
    k = max(1, math.ceil(math.log2(s)))
    if k > n:
        raise ValueError("too many terms for the dimension")
    rng = child_rng(seed, 0)
    terms = []
    for pattern in rng.choice(1 << k, size=s, replace=False):
        pos = neg = 0
        for b in range(k):
            if int(pattern) >> b & 1:
                pos |= 1 << b
            else:
                neg |= 1 << b
        for v in range(k, n):
            roll = rng.random()
            if roll < 0.2:
                pos |= 1 << v
            elif roll < 0.4:
                neg |= 1 << v
        terms.append((pos, neg))
    return DisjointDnf(n, tuple(terms))


def dnf_input_map(masks: np.ndarray, n: int) -> np.ndarray:
    """The coordinate-doubling map: output coordinate 2i copies x_i and
    coordinate 2i+1 carries its negation."""
    masks = np.asarray(masks, dtype=np.uint64)
    out = np.zeros(len(masks), dtype=np.uint64)
    for i in range(n):
        bit = (masks >> np.uint64(i)) & np.uint64(1)
        out |= bit << np.uint64(2 * i)
        out |= (np.uint64(1) - bit) << np.uint64(2 * i + 1)
    return out


def dnf_to_coverage(d: DisjointDnf) -> CoverageFunction:
    """The coverage function on 2n variables that the reduction targets:
    1 - d(x)/s = sum over terms of (1/s) OR over the negated-literal map."""
    s = len(d.terms)
    terms: dict[int, float] = {}
    for pos, neg in d.terms:
        mask = 0
        for i in range(d.n):
            if pos >> i & 1:
                mask |= 1 << (2 * i + 1)
            if neg >> i & 1:
                mask |= 1 << (2 * i)
        terms[mask] = terms.get(mask, 0.0) + 1.0 / s
    return CoverageFunction(2 * d.n, 0.0, terms)


@dataclass(frozen=True)
class DnfClassifier:
    """Boolean hypothesis from the reduction: predicts 1 iff
    s * (1 - h'(map(x))) >= 1/2."""

    n: int
    s: int
    inner: object  # anything with eval_masks over 2n-variable masks

    def eval_masks(self, masks: np.ndarray) -> np.ndarray:
        mapped = dnf_input_map(np.asarray(masks, dtype=np.uint64), self.n)
        vals = self.s * (1.0 - self.inner.eval_masks(mapped))
        return (vals >= 0.5).astype(np.float64)


@dataclass(frozen=True)
class _MappedOracle:
    """Transforms Boolean DNF examples (x, y) into coverage examples
    (map(x), 1 - y/s) on 2n variables."""

    base: object
    n_orig: int
    s: int

    @property
    def n(self) -> int:
        return 2 * self.n_orig

    def draw(self, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        masks, ys = self.base.draw(m, rng)
        return dnf_input_map(masks, self.n_orig), 1.0 - ys / self.s

    def eval_masks(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def dnf_reduction_learn(
    boolean_oracle, s: int, eps: float, coverage_learner
) -> DnfClassifier:
    """Learns an s-term disjoint DNF through coverage learning.

    coverage_learner(oracle, eps') must return an l1-eps'-accurate hypothesis
    for the induced distribution on 2n variables; it is invoked at
    eps' = eps/(2s), which bounds the classification error by eps."""
    if s < 1:
        raise ValueError("s must be >= 1")
    n = boolean_oracle.n
    mapped = _MappedOracle(boolean_oracle, n, s)
    inner = coverage_learner(mapped, eps / (2.0 * s))
    return DnfClassifier(n, s, inner)

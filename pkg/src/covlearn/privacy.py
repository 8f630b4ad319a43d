"""Differentially private release of monotone conjunction counting queries.

A dataset induces the coverage function c_D(x) = 1 - CQ_D(AND over S_x),
where S_x is the set of coordinates at which x is -1.  The release
algorithms learn c_D through a budgeted, Laplace-noised counting-query
oracle and publish a summary: a sparse Fourier polynomial (all marginals),
a layered polynomial (k-way marginals), or a synthetic dataset whose own
counting queries reproduce the learned hypothesis exactly.

Privacy model: each counting query has sensitivity 1/|D|; adding Laplace
noise of scale b = q/(epsilon * |D|) to each of at most q queries makes the
whole transcript epsilon-differentially private by basic composition.
Admission requires |D| >= q (ln q + ln(1/delta)) / (epsilon * tau) so that,
with probability 1 - delta, every noisy answer is within the tolerance tau
that the simulated learner needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .coverage import CoverageFunction
from .cube import child_rng, popcount
from .estimation import CoefficientEstimate, hoeffding_samples
from .learners import (
    PROPER_PHASE_FAILURE,
    REGRESSION_SAMPLE_FACTOR,
    SparsePolynomial,
    _pac_pool_bound,
    _sets_up_to,
    agnostic_degree,
    agnostic_learn,
    pac_core,
    proper_pac_core,
    proper_size_bound,
)
from .cube import IndexSet

Predicate = Callable[[np.ndarray], np.ndarray]


class GateRefused(RuntimeError):
    """Dataset too small for the private simulation."""

    def __init__(self, size: int, required: float):
        super().__init__(
            f"dataset of size {size} is below the required size {required:.0f} "
            "for private simulation"
        )
        self.required = required


class BudgetExhausted(RuntimeError):
    """The private oracle refused a query beyond its budget."""


@dataclass(frozen=True)
class Dataset:
    """Multiset of cube points, stored as distinct masks with multiplicities
    so that datasets far larger than memory are exact."""

    n: int
    masks: np.ndarray
    mults: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if len(self.masks) != len(self.mults):
            raise ValueError("masks and multiplicities must have equal length")
        if len(self.masks) and len(np.unique(self.masks)) != len(self.masks):
            raise ValueError("masks must be distinct")
        if (self.mults < 1).any() if len(self.mults) else False:
            raise ValueError("multiplicities must be >= 1")

    @classmethod
    def from_points(cls, masks: Iterable[int], n: int) -> "Dataset":
        arr = np.asarray(list(masks), dtype=np.uint64)
        uniq, counts = np.unique(arr, return_counts=True)
        return cls(n, uniq, counts.astype(np.int64))

    @classmethod
    def from_multiplicities(
        cls, pairs: Iterable[tuple[int, int]], n: int
    ) -> "Dataset":
        pairs = [(m, c) for m, c in pairs if c > 0]
        masks = np.asarray([m for m, _ in pairs], dtype=np.uint64)
        mults = np.asarray([c for _, c in pairs], dtype=np.int64)
        return cls(n, masks, mults)

    @classmethod
    def iid_uniform(cls, n: int, size: int, rng: np.random.Generator) -> "Dataset":
        """Exact i.i.d. uniform dataset of any size via per-cell counts."""
        if n > 24:
            raise ValueError("aggregated uniform sampling supports n <= 24")
        counts = rng.multinomial(size, np.full(1 << n, 2.0**-n))
        nz = counts.nonzero()[0]
        return cls(n, nz.astype(np.uint64), counts[nz].astype(np.int64))

    @property
    def size(self) -> int:
        return int(self.mults.sum())

    def is_empty(self) -> bool:
        return len(self.masks) == 0


def and_query(set_mask: int) -> Predicate:
    """AND over S: 1 iff every coordinate of S is -1.  The empty conjunction
    is constant 1."""
    s = np.uint64(set_mask)

    def predicate(masks: np.ndarray) -> np.ndarray:
        return ((masks & s) == s).astype(np.float64)

    return predicate


def counting_query(d: Dataset, predicate: Predicate) -> float:
    """Exact counting query: multiplicity-weighted average of the predicate
    (a vectorized map from point masks to values in [0,1])."""
    if d.is_empty():
        raise ValueError("counting query on an empty dataset")
    vals = np.asarray(predicate(d.masks), dtype=np.float64)
    return float(d.mults @ vals) / d.size


def coverage_of_dataset(d: Dataset) -> CoverageFunction:
    """c_D = sum over z in D of (1/|D|) OR over the +1-coordinates of z.

    A point with all coordinates -1 contributes the empty disjunction,
    identically 0, so it adds nothing; then c_D(x) = 1 - CQ_D(AND over S_x)
    pointwise.
    """
    if d.is_empty():
        raise ValueError("empty dataset has no coverage function")
    full = (1 << d.n) - 1
    size = d.size
    terms: dict[int, float] = {}
    for mask, mult in zip(d.masks, d.mults):
        s = int(~mask) & full
        if s:
            terms[s] = terms.get(s, 0.0) + int(mult) / size
    return CoverageFunction(d.n, 0.0, terms)


def all_conjunction_answers(d: Dataset) -> np.ndarray:
    """Exact counting-query answers for every monotone conjunction at once.

    Returns a length-2^n array indexed by set mask: entry S is the fraction
    of dataset rows z with S contained in the -1-coordinates of z, computed
    by a superset-sum transform (n <= 24).
    """
    if d.n > 24:
        raise ValueError("dense conjunction table needs n <= 24")
    if d.is_empty():
        raise ValueError("counting query on an empty dataset")
    table = np.zeros(1 << d.n, dtype=np.float64)
    table[d.masks] = d.mults
    for bit in range(d.n):
        t = table.reshape(-1, 2 << bit)
        t[:, : 1 << bit] += t[:, 1 << bit :]
    return table / d.size


def gate_size(q: int, tau: float, epsilon: float, delta: float) -> float:
    """Minimum dataset size admitted for q tau-tolerant queries."""
    if math.isinf(epsilon):
        return 0.0
    return q * (math.log(q) + math.log(1.0 / delta)) / (epsilon * tau)


@dataclass
class PrivateOracle:
    """Budgeted Laplace-noised counting-query gate.

    The queries-used counter is the only mutable state in the package;
    queries must be issued sequentially.
    """

    dataset: Dataset
    q: int
    tau: float
    epsilon: float
    delta: float
    rng: np.random.Generator
    used: int = 0

    def __post_init__(self) -> None:
        if self.q < 1 or self.tau <= 0 or not 0 < self.delta < 1:
            raise ValueError("need q >= 1, tau > 0, delta in (0,1)")
        if self.epsilon <= 0:
            raise ValueError("privacy epsilon must be positive")
        required = gate_size(self.q, self.tau, self.epsilon, self.delta)
        if self.dataset.size < required:
            raise GateRefused(self.dataset.size, required)

    @property
    def scale(self) -> float:
        if math.isinf(self.epsilon):
            return 0.0
        return self.q / (self.epsilon * self.dataset.size)

    def noise(self, count: int = 1) -> np.ndarray:
        """The Laplace draws used by queries; exposed for auditing."""
        if self.scale == 0.0:
            return np.zeros(count)
        return self.rng.laplace(0.0, self.scale, size=count)

    def query(self, predicate: Predicate) -> float:
        if self.used >= self.q:
            raise BudgetExhausted(f"query budget of {self.q} exhausted")
        self.used += 1
        value = counting_query(self.dataset, predicate) + float(self.noise(1)[0])
        return min(1.0, max(0.0, value))


def _fourier_predicate(d: Dataset, t_mask: int) -> Predicate:
    """F_T(z) = (1 + h(T)) / 2 where h is the Fourier coefficient of the
    disjunction contributed by z, computed analytically."""
    full = (1 << d.n) - 1

    def predicate(masks: np.ndarray) -> np.ndarray:
        s_neg = ~masks & np.uint64(full)
        scale = 2.0 ** -popcount(s_neg).astype(np.float64)
        if t_mask == 0:
            or_hat = 1.0 - scale
        else:
            inside = (s_neg & np.uint64(t_mask)) == t_mask
            or_hat = np.where(inside, -scale, 0.0)
        return (1.0 + or_hat) / 2.0

    return predicate


def _private_coeff_source(oracle: PrivateOracle, tolerance: float):
    """Fourier coefficients of c_D through private counting queries:
    coefficient = 2 * query(F_T) - 1."""
    n = oracle.dataset.n

    def source(mask: int) -> CoefficientEstimate:
        value = 2.0 * oracle.query(_fourier_predicate(oracle.dataset, mask)) - 1.0
        return CoefficientEstimate(IndexSet(mask, n), value, tolerance)

    return source


def _private_labels(
    oracle: PrivateOracle, masks: np.ndarray
) -> np.ndarray:
    """Training labels for c_D: 1 - private answer to AND over S_x."""
    return np.array(
        [1.0 - oracle.query(and_query(int(m))) for m in masks], dtype=np.float64
    )


@dataclass(frozen=True)
class ReleaseSummary:
    """Published summary answering monotone conjunction counting queries.

    variant "fourier" or "polynomial": answers are clamp(1 - h(x)) for the
    stored polynomial h.  variant "synthetic": answers are genuine counting
    queries on the stored synthetic dataset (an empty synthetic dataset
    answers every query with 1, the limit of a near-zero c_D).
    """

    variant: str
    n: int
    alpha_bar: float
    epsilon: float
    delta: float
    queries_used: int
    dataset_size: int
    poly: SparsePolynomial | None = None
    synthetic: Dataset | None = None

    def __post_init__(self) -> None:
        if self.variant not in ("fourier", "polynomial", "synthetic"):
            raise ValueError(f"unknown summary variant {self.variant!r}")

    def answer_masks(self, x_masks: np.ndarray) -> np.ndarray:
        """Answers to the conjunction queries AND over S_x, one per mask."""
        x_masks = np.asarray(x_masks, dtype=np.uint64)
        if self.variant == "synthetic":
            if self.synthetic is None or self.synthetic.is_empty():
                return np.ones(len(x_masks), dtype=np.float64)
            h = coverage_of_dataset(self.synthetic)
            return 1.0 - h.eval_masks(x_masks)
        assert self.poly is not None
        return np.clip(1.0 - self.poly.eval_masks(x_masks), 0.0, 1.0)

    def answer(self, set_mask: int) -> float:
        return float(self.answer_masks(np.array([set_mask], dtype=np.uint64))[0])


def marginals_query_budget(n: int, alpha_bar: float) -> tuple[int, float]:
    """(q, tau) for the all-marginals release: one query per estimated
    Fourier coefficient, bounded a priori."""
    theta = alpha_bar**2 / 6.0
    itilde_bound = math.ceil(4.0 / theta)
    q = n + _pac_pool_bound(theta, itilde_bound)
    return q, theta / 4.0


def release_all_marginals(
    d: Dataset, alpha_bar: float, epsilon: float, delta: float, seed: int
) -> ReleaseSummary:
    """Private release answering all monotone conjunction queries with
    average error alpha_bar over the uniform query distribution."""
    if not 0 < alpha_bar < 1:
        raise ValueError("alpha_bar must lie in (0,1)")
    theta = alpha_bar**2 / 6.0
    q, tau = marginals_query_budget(d.n, alpha_bar)
    oracle = PrivateOracle(d, q, tau, epsilon, delta, child_rng(seed, 0))
    source = _private_coeff_source(oracle, theta / 2.0)
    poly = pac_core(d.n, alpha_bar, source, lambda pool: source)
    return ReleaseSummary(
        "fourier",
        d.n,
        alpha_bar,
        epsilon,
        delta,
        oracle.used,
        d.size,
        poly=poly,
    )


def k_way_query_budget(n: int, k: int, alpha_bar: float) -> tuple[int, float]:
    """(q, tau) for the k-way release: one query per regression example."""
    deg = agnostic_degree(alpha_bar / 2.0)
    features = len(_sets_up_to(n, deg))
    q = math.ceil(REGRESSION_SAMPLE_FACTOR * features / (alpha_bar / 2.0) ** 2)
    return q, alpha_bar / 4.0


def release_k_way(
    d: Dataset, k: int, alpha_bar: float, epsilon: float, delta: float, seed: int
) -> ReleaseSummary:
    """Private release answering length-k conjunction queries with average
    error alpha_bar over the uniform distribution on length-k conjunctions."""
    if not 0 < alpha_bar < 1:
        raise ValueError("alpha_bar must lie in (0,1)")
    if not 0 <= k <= d.n:
        raise ValueError("k must lie in 0..n")
    from .cube import DistributionSpec

    q, tau = k_way_query_budget(d.n, k, alpha_bar)
    oracle = PrivateOracle(d, q, tau, epsilon, delta, child_rng(seed, 0))
    dist = DistributionSpec.layer(d.n, k)

    class _Wrapper:
        n = d.n

        @staticmethod
        def draw(m: int, rng: np.random.Generator):
            from .cube import sample_masks

            masks = sample_masks(dist, m, rng)
            return masks, _private_labels(oracle, masks)

    poly = agnostic_learn(_Wrapper(), dist, alpha_bar / 2.0, seed)
    return ReleaseSummary(
        "polynomial",
        d.n,
        alpha_bar,
        epsilon,
        delta,
        oracle.used,
        d.size,
        poly=poly,
    )


def synthetic_query_budget(
    n: int, alpha_bar: float, size_bound: float
) -> tuple[int, float]:
    """(q, tau) for the synthetic release: coefficient queries plus one
    query per regression example, all bounded a priori."""
    eps_l = alpha_bar / 2.0
    s_eps = proper_size_bound(eps_l, size_bound)
    theta = eps_l**2 / 108.0
    est_tol = eps_l**2 / (108.0 * s_eps)
    itilde_bound = math.ceil(4.0 / theta)
    kept_bound = math.ceil(2.0 / est_tol)
    pool_bound = kept_bound * itilde_bound + 2
    m3_bound = max(
        hoeffding_samples(eps_l / 2, PROPER_PHASE_FAILURE),
        math.ceil(REGRESSION_SAMPLE_FACTOR * (kept_bound + 1) / eps_l**2),
    )
    q = n + pool_bound + m3_bound
    tau = min(est_tol / 2.0, alpha_bar / 8.0)
    return q, tau


def release_synthetic(
    d: Dataset,
    alpha_bar: float,
    epsilon: float,
    delta: float,
    seed: int,
    size_bound: float = math.inf,
) -> ReleaseSummary:
    """Private synthetic-dataset release: answers all monotone conjunction
    queries with average error alpha_bar over the uniform distribution.

    size_bound is an a-priori bound on the number of distinct disjunction
    terms of c_D (fewer distinct dataset rows means a smaller bound and a
    laxer admission gate); pass math.inf when unknown.
    """
    if not 0 < alpha_bar < 1:
        raise ValueError("alpha_bar must lie in (0,1)")
    eps_l = alpha_bar / 2.0
    s_eps = proper_size_bound(eps_l, size_bound)
    est_tol = eps_l**2 / (108.0 * s_eps)
    q, tau = synthetic_query_budget(d.n, alpha_bar, size_bound)
    oracle = PrivateOracle(d, q, tau, epsilon, delta, child_rng(seed, 0))

    phase1 = _private_coeff_source(oracle, (eps_l**2 / 108.0) / 2.0)
    phase2 = _private_coeff_source(oracle, est_tol)

    def draw_labeled(m3: int) -> tuple[np.ndarray, np.ndarray]:
        from .cube import DistributionSpec, sample_masks

        masks = sample_masks(
            DistributionSpec.uniform(d.n), m3, child_rng(seed, 1)
        )
        return masks, _private_labels(oracle, masks)

    hypothesis = proper_pac_core(
        d.n, eps_l, s_eps, phase1, lambda pool: phase2, draw_labeled
    )
    synthetic = synthesize_dataset(hypothesis, alpha_bar)
    return ReleaseSummary(
        "synthetic",
        d.n,
        alpha_bar,
        epsilon,
        delta,
        oracle.used,
        d.size,
        synthetic=synthetic,
    )


def synthesize_dataset(h: CoverageFunction, alpha_bar: float) -> Dataset:
    """Rounds a coverage hypothesis onto the grid alpha_bar/(4t) and emits
    the dataset whose coverage function equals the rounded hypothesis
    exactly.

    Each term OR_S becomes copies of the point that is +1 exactly on S; the
    affine weight rides on the all-(+1) point as OR over all coordinates,
    off by at most 2^-n in l1.  Padding with all-(-1) points (which
    contribute the identically-zero empty disjunction) fixes the denominator
    so the identity is exact rather than proportional.
    """
    full = (1 << h.n) - 1
    terms = [(s, w) for s, w in h.terms.items() if w > 0.0]
    if h.affine > 0.0:
        merged = dict(terms)
        merged[full] = merged.get(full, 0.0) + h.affine
        terms = list(merged.items())
    t = len(terms)
    if t == 0:
        return Dataset(h.n, np.array([], dtype=np.uint64), np.array([], dtype=np.int64))
    denom = math.ceil(4 * t / alpha_bar)
    pairs = []
    total = 0
    for s, w in terms:
        copies = math.floor(w * denom)
        if copies:
            pairs.append((full & ~s, copies))
            total += copies
    if total == 0:
        return Dataset(h.n, np.array([], dtype=np.uint64), np.array([], dtype=np.int64))
    if total < denom:
        # all-(-1) padding: contributes 0 to the coverage function
        existing = {m for m, _ in pairs}
        if full in existing:
            pairs = [(m, c + (denom - total) if m == full else c) for m, c in pairs]
        else:
            pairs.append((full, denom - total))
    return Dataset.from_multiplicities(pairs, h.n)

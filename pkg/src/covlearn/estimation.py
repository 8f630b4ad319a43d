"""Sample-based Fourier coefficient estimation and the monotone lattice search.

A "coefficient source" is any callable mask -> CoefficientEstimate.  Three
implementations live here: empirical estimation over a sample batch, exact
lookup in a Fourier table, and lookup in a precomputed spectrum built from
aggregated per-point counts (the route used when nominal sample counts are
astronomically large but n is small).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .coverage import FourierTable, walsh_hadamard
from .cube import IndexSet, eval_parity_batch

CoeffSource = Callable[[int], "CoefficientEstimate"]

LABEL_TOL = 1e-9


@dataclass(frozen=True)
class SampleBatch:
    """Labeled sample: point masks and labels in [0,1], same length."""

    n: int
    masks: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        if len(self.masks) == 0:
            raise ValueError("sample batch must be non-empty")
        if len(self.masks) != len(self.labels):
            raise ValueError("points and labels must have equal length")
        lo, hi = float(self.labels.min()), float(self.labels.max())
        if lo < -LABEL_TOL or hi > 1 + LABEL_TOL:
            raise ValueError(f"labels outside [0,1]: range [{lo}, {hi}]")

    def __len__(self) -> int:
        return len(self.masks)


@dataclass(frozen=True)
class CoefficientEstimate:
    """An estimate of one Fourier coefficient with its confidence half-width."""

    index: IndexSet
    value: float
    tolerance: float

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


def hoeffding_samples(tolerance: float, failure: float) -> int:
    """Samples for a two-sided Hoeffding bound on range-[-1,1] variables:
    ceil((2/tolerance^2) * ln(2/failure))."""
    if not 0 < tolerance <= 2 or not 0 < failure < 1:
        raise ValueError("tolerance must lie in (0,2] and failure in (0,1)")
    return math.ceil(2.0 / tolerance**2 * math.log(2.0 / failure))


def hoeffding_half_width(samples: int, failure: float) -> float:
    return math.sqrt(2.0 * math.log(2.0 / failure) / samples)


def estimate_coefficient(
    batch: SampleBatch, t: IndexSet, failure: float = 1e-3
) -> CoefficientEstimate:
    """Empirical mean of label * parity over the batch.

    Unbiased for the coefficient when the batch is uniform; the tolerance is
    the Hoeffding half-width at the caller's per-estimate failure budget.
    """
    signs = eval_parity_batch(t.mask, batch.masks)
    value = float(signs @ batch.labels) / len(batch)
    return CoefficientEstimate(t, value, hoeffding_half_width(len(batch), failure))


def batch_source(batch: SampleBatch, failure: float) -> CoeffSource:
    def source(mask: int) -> CoefficientEstimate:
        return estimate_coefficient(batch, IndexSet(mask, batch.n), failure)

    return source


def exact_source(table: FourierTable) -> CoeffSource:
    def source(mask: int) -> CoefficientEstimate:
        return CoefficientEstimate(IndexSet(mask, table.n), table[mask], 1e-15)

    return source


def spectrum_source(n: int, spectrum: np.ndarray, tolerance: float) -> CoeffSource:
    """Lookup into a length-2^n array of coefficients indexed by set mask."""
    if len(spectrum) != 1 << n:
        raise ValueError("spectrum length must be 2^n")

    def source(mask: int) -> CoefficientEstimate:
        return CoefficientEstimate(IndexSet(mask, n), float(spectrum[mask]), tolerance)

    return source


def spectrum_from_counts(weights: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """All empirical Fourier coefficients of a weighted sample at once.

    weights[x] is how many sample points landed on point mask x (any
    non-negative reals); labels[x] is the label shared by that cell.  The
    result equals estimate_coefficient for every t simultaneously, via one
    Walsh-Hadamard transform.
    """
    total = float(weights.sum())
    if total <= 0:
        raise ValueError("weights must have positive total")
    return walsh_hadamard(np.asarray(weights, dtype=np.float64) * labels) / total


def lattice_search(
    coeff_source: CoeffSource,
    candidate_vars: IndexSet,
    theta: float,
    max_level: int,
) -> dict[int, CoefficientEstimate]:
    """Breadth-first search of the subset lattice of candidate_vars.

    Level t extends each surviving (t-1)-set; a set is kept iff the estimated
    coefficient satisfies |estimate| >= theta.  Runs exactly max_level levels
    and returns all kept sets plus the estimate at the empty set.  Each set
    is visited once: a set is extended only by variables above its maximum
    element, which reaches every subset exactly once, and coefficient-
    magnitude monotonicity over supersets means the surviving sets coincide
    with the all-orders search.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if max_level < 1:
        raise ValueError("max_level must be >= 1")
    candidates = candidate_vars.indices()
    kept: dict[int, CoefficientEstimate] = {0: coeff_source(0)}
    frontier = [0]
    for _ in range(max_level):
        next_frontier = []
        for t_mask in frontier:
            low = t_mask.bit_length()  # extend by i > max(T) only
            for i in candidates:
                if i < low:
                    continue
                ext = t_mask | 1 << i
                est = coeff_source(ext)
                if abs(est.value) >= theta:
                    kept[ext] = est
                    next_frontier.append(ext)
        if not next_frontier:
            break
        frontier = next_frontier
    return kept


def split_budget(phase_failure: float, count: int) -> float:
    """Uniform union-bound split of a phase failure budget over count estimates."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return phase_failure / count

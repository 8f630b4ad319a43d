"""Points, index sets and sampling on the Boolean cube {-1,+1}^n.

Encoding used throughout the package: a point or index set is a bitmask in
which bit i (0-based) is set iff coordinate i is -1 ("true") / iff i belongs
to the set.  Batch operations work on numpy uint64 arrays of masks, which
caps the fast path at n <= 64; the scalar API uses Python ints and works for
any n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_COMPACT_N = 64


class DimensionMismatch(ValueError):
    """Operands live on cubes of different dimension."""


def popcount(masks: np.ndarray) -> np.ndarray:
    return np.bitwise_count(masks)


def parity_sign(masks: np.ndarray) -> np.ndarray:
    """(-1)**popcount(mask) as an int8 array of +-1."""
    return (1 - 2 * (np.bitwise_count(masks).astype(np.int8) & 1)).astype(np.int8)


def iter_submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask``, including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


@dataclass(frozen=True)
class Point:
    """A point of {-1,+1}^n.  Bit i of ``mask`` set <=> x_i = -1."""

    mask: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if self.mask < 0 or self.mask >> self.n:
            raise ValueError("mask has bits outside the first n positions")

    @classmethod
    def from_values(cls, values: Sequence[int]) -> "Point":
        mask = 0
        for i, v in enumerate(values):
            if v == -1:
                mask |= 1 << i
            elif v != 1:
                raise ValueError("coordinates must be -1 or +1")
        return cls(mask, len(values))

    def values(self) -> list[int]:
        return [-1 if self.mask >> i & 1 else 1 for i in range(self.n)]

    def weight(self) -> int:
        """Hamming weight: number of -1 coordinates."""
        return int(self.mask).bit_count()


@dataclass(frozen=True)
class IndexSet:
    """A subset of the n coordinates, stored as a bitmask."""

    mask: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if self.mask < 0 or self.mask >> self.n:
            raise ValueError("mask has bits outside the first n positions")

    @classmethod
    def from_indices(cls, indices: Iterable[int], n: int) -> "IndexSet":
        mask = 0
        for i in indices:
            if not 0 <= i < n:
                raise ValueError(f"index {i} out of range for n={n}")
            mask |= 1 << i
        return cls(mask, n)

    def indices(self) -> list[int]:
        return [i for i in range(self.n) if self.mask >> i & 1]

    def size(self) -> int:
        return int(self.mask).bit_count()

    def __contains__(self, i: int) -> bool:
        return bool(self.mask >> i & 1)


def eval_disjunction(s: IndexSet, x: Point) -> int:
    """Monotone disjunction OR_s: 1 iff some selected coordinate is -1.

    The empty set evaluates to 0; the constant-1 "empty disjunction" is
    represented by the affine term of a coverage function, never here.
    """
    if s.n != x.n:
        raise DimensionMismatch(f"index set on n={s.n}, point on n={x.n}")
    return 1 if s.mask & x.mask else 0


def eval_parity(t: IndexSet, x: Point) -> int:
    """Parity chi_t(x) = prod of the selected coordinates; empty t gives +1."""
    if t.n != x.n:
        raise DimensionMismatch(f"index set on n={t.n}, point on n={x.n}")
    return -1 if (t.mask & x.mask).bit_count() & 1 else 1


def eval_disjunction_batch(set_mask: int, masks: np.ndarray) -> np.ndarray:
    """OR_S over an array of point masks, as a float array of 0/1."""
    return ((masks & np.uint64(set_mask)) != 0).astype(np.float64)


def eval_parity_batch(set_mask: int, masks: np.ndarray) -> np.ndarray:
    """chi_T over an array of point masks, as a float array of +-1."""
    return parity_sign(masks & np.uint64(set_mask)).astype(np.float64)


# --------------------------------------------------------------------------
# Distributions


@dataclass(frozen=True)
class DistributionSpec:
    """Sampling law on the cube.

    variant is one of "uniform", "product", "layer", "symmetric".
    product: biases[i] = Pr[x_i = -1], each in (0,1).
    layer: uniform over points of Hamming weight k (number of -1s).
    symmetric: mixture over layers 0..n with the given weights.
    """

    variant: str
    n: int
    biases: tuple[float, ...] | None = None
    k: int | None = None
    layer_weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if self.variant == "uniform":
            pass
        elif self.variant == "product":
            if self.biases is None or len(self.biases) != self.n:
                raise ValueError("product distribution needs n biases")
            if not all(0.0 < b < 1.0 for b in self.biases):
                raise ValueError("product biases must lie in the open interval (0,1)")
        elif self.variant == "layer":
            if self.k is None or not 0 <= self.k <= self.n:
                raise ValueError("layer k must lie in 0..n")
        elif self.variant == "symmetric":
            w = self.layer_weights
            if w is None or len(w) != self.n + 1:
                raise ValueError("symmetric mixture needs n+1 layer weights")
            if any(x < 0 for x in w):
                raise ValueError("layer weights must be non-negative")
            if abs(sum(w) - 1.0) > 1e-12:
                raise ValueError("layer weights must sum to 1")
        else:
            raise ValueError(f"unknown distribution variant {self.variant!r}")

    @classmethod
    def uniform(cls, n: int) -> "DistributionSpec":
        return cls("uniform", n)

    @classmethod
    def product(cls, biases: Sequence[float]) -> "DistributionSpec":
        return cls("product", len(biases), biases=tuple(biases))

    @classmethod
    def layer(cls, n: int, k: int) -> "DistributionSpec":
        return cls("layer", n, k=k)

    @classmethod
    def symmetric(cls, weights: Sequence[float]) -> "DistributionSpec":
        return cls("symmetric", len(weights) - 1, layer_weights=tuple(weights))


def child_rng(seed: int, *path: int) -> np.random.Generator:
    """Deterministic splittable seeding: (master seed, task path) -> generator.

    Identical (seed, path) pairs always reproduce identical streams, so
    parallel and serial runs agree.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def _sample_layer(n: int, ks: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of prescribed Hamming weights, one mask per entry of ks."""
    m = len(ks)
    # rank the i.i.d. uniforms per row; the k smallest ranks get a -1
    order = np.argsort(rng.random((m, n)), axis=1)
    ranks = np.empty_like(order)
    rows = np.arange(m)[:, None]
    ranks[rows, order] = np.arange(n)[None, :]
    chosen = ranks < ks[:, None]
    weights = (np.uint64(1) << np.arange(n, dtype=np.uint64))[None, :]
    return np.where(chosen, weights, np.uint64(0)).sum(axis=1, dtype=np.uint64)


def sample_masks(d: DistributionSpec, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw m point masks from the distribution (n <= 64)."""
    n = d.n
    if n > MAX_COMPACT_N:
        raise ValueError(f"batch sampling supports n <= {MAX_COMPACT_N}")
    if d.variant == "uniform":
        if n == 64:
            return rng.integers(0, 2**64, size=m, dtype=np.uint64)
        return rng.integers(0, 1 << n, size=m, dtype=np.uint64)
    if d.variant == "product":
        bits = rng.random((m, n)) < np.asarray(d.biases)[None, :]
        weights = (np.uint64(1) << np.arange(n, dtype=np.uint64))[None, :]
        return np.where(bits, weights, np.uint64(0)).sum(axis=1, dtype=np.uint64)
    if d.variant == "layer":
        return _sample_layer(n, np.full(m, d.k, dtype=np.int64), rng)
    if d.variant == "symmetric":
        ks = rng.choice(n + 1, size=m, p=np.asarray(d.layer_weights))
        return _sample_layer(n, ks.astype(np.int64), rng)
    raise AssertionError("unreachable")


def sample(d: DistributionSpec, rng: np.random.Generator) -> Point:
    """Draw a single point."""
    return Point(int(sample_masks(d, 1, rng)[0]), d.n)


# --------------------------------------------------------------------------
# Shared text format: one point per line, characters in {0,1}, '1' <=> -1.


def format_point_line(mask: int, n: int) -> str:
    return "".join("1" if mask >> i & 1 else "0" for i in range(n))


def parse_point_line(line: str) -> tuple[int, int]:
    """Returns (mask, n)."""
    line = line.strip()
    if not line or set(line) - {"0", "1"}:
        raise ValueError(f"bad point line {line!r}: expected characters in {{0,1}}")
    mask = 0
    for i, ch in enumerate(line):
        if ch == "1":
            mask |= 1 << i
    return mask, len(line)

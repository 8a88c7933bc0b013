"""Uniform samplers for weight-d rows and combinatorial matrices, plus the
two permutation couplings used to generate a uniform d-subset.

Indices exposed to callers are 1-based: a :class:`SupportSet` over ``n``
holds values in ``1..n`` and a permutation ``sigma`` is a length-``n``
sequence with ``sigma[i - 1]`` the image of ``i``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CouplingRangeError, RangeViolation
from .fflinalg import IntMatrix, ResidueVector

__all__ = [
    "RngStream",
    "SupportSet",
    "CombinatorialMatrix",
    "sample_support",
    "sample_matrix",
    "random_permutation",
    "coupled_support_bernoulli",
    "coupled_support_rademacher",
    "differing_pairs_count",
    "default_window",
    "enumerate_supports",
    "enumerate_matrices",
    "coupling_law",
]

_U64 = 1 << 64


class RngStream:
    """Counter-based random stream keyed by ``(master_seed, stream_index)``.

    Backed by Philox seeded through a SeedSequence whose spawn key is the
    stream index, so streams with different indices are independent and a
    given pair always reproduces the same draws. Not safe to share between
    concurrent callers.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        for name, value in (("master_seed", master_seed), ("stream_index", stream_index)):
            if not 0 <= int(value) < _U64:
                raise RangeViolation(f"{name} must be a 64-bit unsigned integer")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected an RngStream or numpy Generator, got {type(rng).__name__}")


@dataclass(frozen=True)
class SupportSet:
    """A d-subset of ``1..n``, stored sorted."""

    n: int
    elements: tuple[int, ...]

    def __post_init__(self):
        elements = tuple(sorted(int(x) for x in self.elements))
        if len(set(elements)) != len(elements):
            raise RangeViolation("support indices must be distinct")
        if elements and (elements[0] < 1 or elements[-1] > self.n):
            raise RangeViolation(f"support indices must lie in [1, {self.n}]")
        object.__setattr__(self, "elements", elements)

    @property
    def d(self) -> int:
        return len(self.elements)

    def to_bits(self) -> np.ndarray:
        bits = np.zeros(self.n, dtype=np.uint8)
        bits[[i - 1 for i in self.elements]] = 1
        return bits

    def __str__(self):
        return ",".join(str(i) for i in self.elements)

    @classmethod
    def parse(cls, text: str, n: int) -> "SupportSet":
        text = text.strip()
        return cls(n, tuple(int(x) for x in text.split(",")) if text else ())


@dataclass(frozen=True, eq=False)
class CombinatorialMatrix:
    """n x n 0/1 matrix whose rows each contain exactly d ones."""

    n: int
    d: int
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.shape != (self.n, self.n):
            raise RangeViolation(f"expected a {self.n}x{self.n} matrix, got {bits.shape}")
        if bits.size and ((bits > 1).any() or (bits.sum(axis=1) != self.d).any()):
            raise RangeViolation(f"every row must be 0/1 with exactly {self.d} ones")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def rows(self) -> tuple[SupportSet, ...]:
        return tuple(
            SupportSet(self.n, tuple(int(j) + 1 for j in np.flatnonzero(row)))
            for row in self.bits
        )

    def row_sums(self) -> np.ndarray:
        return self.bits.sum(axis=1, dtype=np.int64)

    def to_int_matrix(self) -> IntMatrix:
        return IntMatrix.coerce(self.bits)

    def __eq__(self, other):
        if not isinstance(other, CombinatorialMatrix):
            return NotImplemented
        return (self.n, self.d) == (other.n, other.d) and np.array_equal(self.bits, other.bits)


def _check_weight(n: int, d: int):
    if n < 1 or not 1 <= d <= n:
        raise RangeViolation(f"need 1 <= d <= n, got n={n}, d={d}")


def _partial_shuffle(n: int, d: int, size: int, gen: np.random.Generator) -> np.ndarray:
    """(size, n) 0/1 array, each row a uniform d-subset.

    Runs min(d, n - d) Fisher-Yates steps on every row at once; when the
    complement is shorter it is the part that gets shuffled out.
    """
    k = min(d, n - d)
    perm = np.tile(np.arange(n), (size, 1))
    rows = np.arange(size)
    for i in range(k):
        j = gen.integers(i, n, size=size)
        head = perm[rows, i].copy()
        perm[rows, i] = perm[rows, j]
        perm[rows, j] = head
    bits = np.zeros((size, n), dtype=np.uint8) if k == d else np.ones((size, n), dtype=np.uint8)
    bits[rows[:, None], perm[:, :k]] = 1 if k == d else 0
    return bits


def sample_support(n: int, d: int, rng) -> SupportSet:
    """Uniform d-subset of ``1..n``."""
    _check_weight(n, d)
    bits = _partial_shuffle(n, d, 1, _generator(rng))[0]
    return SupportSet(n, tuple(int(j) + 1 for j in np.flatnonzero(bits)))


def sample_matrix(n: int, d: int, rng) -> CombinatorialMatrix:
    """Q_{n,d}: n independent uniform rows of weight d."""
    _check_weight(n, d)
    return CombinatorialMatrix(n, d, _partial_shuffle(n, d, n, _generator(rng)))


def random_permutation(n: int, rng) -> tuple[int, ...]:
    """Uniform permutation of ``1..n`` as a tuple of images."""
    return tuple(int(x) + 1 for x in _generator(rng).permutation(n))


def _check_coupling(sigma: Sequence[int], d: int) -> int:
    n = len(sigma)
    if d < 1:
        raise RangeViolation(f"d must be >= 1, got {d}")
    if n < 2 * d:
        raise CouplingRangeError(f"coupling needs n >= 2d, got n={n}, d={d}")
    if sorted(sigma) != list(range(1, n + 1)):
        raise RangeViolation("sigma must be a permutation of 1..n")
    return n


def coupled_support_bernoulli(gamma: Sequence[int], sigma: Sequence[int], d: int) -> SupportSet:
    """{sigma(i) : gamma_i = 1} united with {sigma(i + d) : gamma_i = 0}."""
    n = _check_coupling(sigma, d)
    if len(gamma) != d or any(g not in (0, 1) for g in gamma):
        raise RangeViolation("gamma must be a 0/1 vector of length d")
    return SupportSet(n, tuple(sigma[i] if g else sigma[i + d] for i, g in enumerate(gamma)))


def coupled_support_rademacher(gamma: Sequence[int], sigma: Sequence[int], d: int) -> SupportSet:
    """Same coupling driven by signs: bit i is (1 + gamma_i) / 2."""
    if len(gamma) != d or any(g not in (-1, 1) for g in gamma):
        raise RangeViolation("gamma must be a +-1 vector of length d")
    return coupled_support_bernoulli([(1 + g) // 2 for g in gamma], sigma, d)


def default_window(n: int, d: int) -> int:
    """max(1, floor(d / (20 ln n))), the number of leading pairs examined."""
    if n < 2:
        return 1
    return max(1, math.floor(d / (20 * math.log(n))))


def differing_pairs_count(v, sigma: Sequence[int], d: int, m: int) -> int:
    """Number of l in 1..m with v[sigma(l)] != v[sigma(l + d)]."""
    n = _check_coupling(sigma, d)
    entries = v.entries if isinstance(v, ResidueVector) else tuple(v)
    if len(entries) != n:
        raise RangeViolation(f"vector length {len(entries)} does not match n={n}")
    if not 1 <= m <= d:
        raise RangeViolation(f"window m must satisfy 1 <= m <= d, got m={m}, d={d}")
    return sum(entries[sigma[l] - 1] != entries[sigma[l + d] - 1] for l in range(m))


ENUMERATION_CAP = 10**6


def enumerate_supports(n: int, d: int):
    """Every d-subset of 1..n in lexicographic order."""
    _check_weight(n, d)
    for c in itertools.combinations(range(1, n + 1), d):
        yield SupportSet(n, c)


def enumerate_matrices(n: int, d: int):
    """Every outcome of Q_{n,d}; all C(n,d)**n are equally likely."""
    _check_weight(n, d)
    total = math.comb(n, d) ** n
    if total > ENUMERATION_CAP:
        raise RangeViolation(f"{total} matrices exceed the enumeration cap {ENUMERATION_CAP}")
    rows = [s.to_bits() for s in enumerate_supports(n, d)]
    for choice in itertools.product(rows, repeat=n):
        yield CombinatorialMatrix(n, d, np.stack(choice))


def coupling_law(n: int, d: int, kind: str = "bernoulli") -> Counter:
    """Counts of each support over all 2**d * n! equally likely (gamma, sigma)."""
    if kind == "bernoulli":
        signs, couple = (0, 1), coupled_support_bernoulli
    elif kind == "rademacher":
        signs, couple = (-1, 1), coupled_support_rademacher
    else:
        raise RangeViolation(f"unknown coupling kind {kind!r}")
    if n < 2 * d:
        raise CouplingRangeError(f"coupling needs n >= 2d, got n={n}, d={d}")
    law: Counter = Counter()
    gammas = list(itertools.product(signs, repeat=d))
    for sigma in itertools.permutations(range(1, n + 1)):
        for gamma in gammas:
            law[couple(gamma, sigma, d).elements] += 1
    return law

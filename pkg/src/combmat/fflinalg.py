"""Exact linear algebra over prime fields Z_p and over the integers.

Matrices over Z_p are numpy arrays. For p < 2**31 the entries are int64 and
every product of two residues fits below 2**62, so reductions never
overflow; larger moduli fall back to object arrays of Python ints.
Integer matrices keep arbitrary-precision Python ints throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import NotPrimeError, NotSquareError, RangeViolation

__all__ = [
    "is_prime",
    "next_prime",
    "PrimeField",
    "IntMatrix",
    "MatrixZp",
    "ResidueVector",
    "reduce_mod_p",
    "rank_mod_p",
    "det_mod_p",
    "kernel_size",
    "hadamard_bound",
    "crt_primes",
    "det_integer_exact",
    "format_matrix",
    "parse_matrix",
    "read_matrix",
    "write_matrix",
]

# Largest modulus whose residue products fit in int64 with headroom.
_INT64_SAFE = 1 << 31

# Deterministic Miller-Rabin witnesses, valid for n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Deterministic primality test for n < 3.3e24."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    r, s = 0, n - 1
    while s % 2 == 0:
        r += 1
        s //= 2
    for a in _MR_BASES:
        x = pow(a, s, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    n = max(n, 2)
    while not is_prime(n):
        n += 1
    return n


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not is_prime(int(self.p)):
            raise NotPrimeError(f"p must be prime, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))

    def __int__(self):
        return self.p


def _as_modulus(p) -> int:
    return p.p if isinstance(p, PrimeField) else PrimeField(p).p


def _dtype_for(p: int):
    return np.int64 if p < _INT64_SAFE else object


@dataclass(frozen=True)
class IntMatrix:
    """Rectangular matrix of arbitrary-precision integers."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.rows)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise RangeViolation("matrix rows have unequal lengths")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def coerce(cls, a) -> "IntMatrix":
        if isinstance(a, cls):
            return a
        if isinstance(a, np.ndarray):
            if a.ndim != 2:
                raise RangeViolation(f"expected a 2-d array, got shape {a.shape}")
            return cls(tuple(tuple(int(x) for x in row) for row in a.tolist()))
        return cls(tuple(tuple(row) for row in a))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    @property
    def is_square(self) -> bool:
        return self.n_rows == self.n_cols

    def __add__(self, other):
        other = IntMatrix.coerce(other)
        if (self.n_rows, self.n_cols) != (other.n_rows, other.n_cols):
            raise RangeViolation("cannot add matrices of different shapes")
        return IntMatrix(
            tuple(
                tuple(x + y for x, y in zip(r, s)) for r, s in zip(self.rows, other.rows)
            )
        )

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(r) for r in self.rows)

    def to_array(self) -> np.ndarray:
        out = np.empty((self.n_rows, self.n_cols), dtype=object)
        for i, row in enumerate(self.rows):
            out[i, :] = row
        return out


@dataclass(frozen=True, eq=False)
class MatrixZp:
    """Matrix with entries in [0, p)."""

    entries: np.ndarray
    p: int

    def __post_init__(self):
        p = _as_modulus(self.p)
        a = np.array(self.entries, dtype=_dtype_for(p))
        if a.ndim != 2:
            raise RangeViolation(f"expected a 2-d array, got shape {a.shape}")
        if a.size and ((a < 0).any() or (a >= p).any()):
            raise RangeViolation(f"entries must lie in [0, {p})")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "p", p)

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other):
        if not isinstance(other, MatrixZp):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.entries, other.entries)

    def __repr__(self):
        return f"MatrixZp(p={self.p}, entries={self.entries.tolist()})"


@dataclass(frozen=True)
class ResidueVector:
    """Vector over Z_p. Use :meth:`from_ints` to reduce arbitrary integers."""

    entries: tuple[int, ...]
    p: int

    def __post_init__(self):
        p = _as_modulus(self.p)
        entries = tuple(int(x) for x in self.entries)
        if any(x < 0 or x >= p for x in entries):
            raise RangeViolation(f"entries must lie in [0, {p})")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_ints(cls, values: Iterable[int], p) -> "ResidueVector":
        p = _as_modulus(p)
        return cls(tuple(int(x) % p for x in values), p)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def support(self) -> tuple[int, ...]:
        """1-based indices of the nonzero entries."""
        return tuple(i + 1 for i, x in enumerate(self.entries) if x)

    def is_constant(self) -> bool:
        return len(set(self.entries)) <= 1


def reduce_mod_p(A, p) -> MatrixZp:
    """Least nonnegative residues of an integer matrix."""
    p = _as_modulus(p)
    A = IntMatrix.coerce(A)
    reduced = [[x % p for x in row] for row in A.rows]
    if not reduced:
        return MatrixZp(np.zeros((0, 0), dtype=_dtype_for(p)), p)
    return MatrixZp(np.array(reduced, dtype=_dtype_for(p)), p)


def _echelon(a: np.ndarray, p: int) -> tuple[int, int]:
    """Forward elimination on a copy; returns (rank, signed pivot product mod p).

    The pivot is the first nonzero entry at or below the current row in the
    current column. The product is the determinant only for square input.
    """
    a = a.copy()
    n_rows, n_cols = a.shape
    rank = 0
    det = 1
    for c in range(n_cols):
        if rank == n_rows:
            break
        nz = np.flatnonzero(a[rank:, c])
        if nz.size == 0:
            det = 0
            continue
        r = rank + int(nz[0])
        if r != rank:
            a[[rank, r]] = a[[r, rank]]
            det = -det
        pivot = int(a[rank, c])
        det = det * pivot % p
        inv = pow(pivot, -1, p)
        a[rank, c:] = a[rank, c:] * inv % p
        below = a[rank + 1 :, c].copy()
        if below.any():
            a[rank + 1 :, c:] = (a[rank + 1 :, c:] - np.outer(below, a[rank, c:])) % p
        rank += 1
    return rank, det % p


def rank_mod_p(M: MatrixZp) -> int:
    if M.entries.size == 0:
        return 0
    return _echelon(M.entries, M.p)[0]


def _require_square(n_rows: int, n_cols: int):
    if n_rows != n_cols:
        raise NotSquareError(f"expected a square matrix, got {n_rows}x{n_cols}")


def det_mod_p(M: MatrixZp) -> int:
    _require_square(M.n_rows, M.n_cols)
    if M.n_rows == 0:
        return 1 % M.p
    rank, det = _echelon(M.entries, M.p)
    return det if rank == M.n_rows else 0


def kernel_size(M: MatrixZp) -> int:
    """|ker M| over Z_p, i.e. p ** (n - rank)."""
    _require_square(M.n_rows, M.n_cols)
    return M.p ** (M.n_cols - rank_mod_p(M))


def hadamard_bound(A) -> int:
    """Ceiling of the product of Euclidean row norms; bounds |det A|."""
    A = IntMatrix.coerce(A)
    sq = math.prod(sum(x * x for x in row) for row in A.rows)
    h = math.isqrt(sq)
    return h if h * h == sq else h + 1


_PRIME_CACHE: list[int] = []


def crt_primes(count: int) -> list[int]:
    """The `count` largest primes below 2**31, in descending order."""
    q = _PRIME_CACHE[-1] - 1 if _PRIME_CACHE else _INT64_SAFE - 1
    while len(_PRIME_CACHE) < count:
        while not is_prime(q):
            q -= 1
        _PRIME_CACHE.append(q)
        q -= 1
    return _PRIME_CACHE[:count]


def _primes_covering(bound: int) -> list[int]:
    chosen: list[int] = []
    modulus = 1
    k = 0
    while modulus <= 2 * bound or not chosen:
        k += 1
        q = crt_primes(k)[-1]
        chosen.append(q)
        modulus *= q
    return chosen


def det_integer_exact(A) -> int:
    """Exact integer determinant by multi-modular elimination and CRT.

    Residues are taken modulo descending primes below 2**31 until their
    product exceeds twice the Hadamard bound; the CRT value is then lifted
    to the symmetric range.
    """
    A = IntMatrix.coerce(A)
    _require_square(A.n_rows, A.n_cols)
    if A.n_rows == 0:
        return 1
    residue, modulus = 0, 1
    for q in _primes_covering(hadamard_bound(A)):
        r = det_mod_p(reduce_mod_p(A, q))
        # x = residue + modulus * k with x = r (mod q)
        k = (r - residue) * pow(modulus, -1, q) % q
        residue += modulus * k
        modulus *= q
    if residue > modulus // 2:
        residue -= modulus
    return residue


def format_matrix(A) -> str:
    """Plain-text form: "n_rows n_cols" then one space-separated row per line."""
    if isinstance(A, MatrixZp):
        rows = A.entries.tolist()
        shape = A.entries.shape
    else:
        A = IntMatrix.coerce(A)
        rows = A.rows
        shape = (A.n_rows, A.n_cols)
    lines = [f"{shape[0]} {shape[1]}"]
    lines += [" ".join(str(int(x)) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> IntMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise RangeViolation("empty matrix text")
    header = lines[0].split()
    if len(header) != 2:
        raise RangeViolation(f"bad header line {lines[0]!r}")
    n_rows, n_cols = (int(x) for x in header)
    body = [[int(x) for x in ln.split()] for ln in lines[1:]]
    if len(body) != n_rows or any(len(r) != n_cols for r in body):
        raise RangeViolation(f"matrix body does not match header {n_rows}x{n_cols}")
    return IntMatrix(tuple(tuple(r) for r in body))


def read_matrix(path) -> IntMatrix:
    return parse_matrix(Path(path).read_text(encoding="utf-8"))


def write_matrix(path, A) -> None:
    Path(path).write_text(format_matrix(A), encoding="utf-8")


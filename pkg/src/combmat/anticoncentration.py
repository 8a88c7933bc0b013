"""Exact atom probabilities P[q . v = b] for a uniform weight-d row q.

Three independent routes compute the same law: a dynamic program over
(position, number chosen, residue), brute-force enumeration of every
d-subset, and the closed binomial sum for indicator vectors. Probabilities
are :class:`fractions.Fraction`; floats appear only in Fourier magnitudes
and diagnostics.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import InstanceTooLarge, RangeViolation
from .fflinalg import PrimeField, ResidueVector
from .sampler import RngStream, default_window, differing_pairs_count, random_permutation

__all__ = [
    "ResidueVector",
    "AtomDistribution",
    "FourierProfile",
    "AppendixCell",
    "AtomBound",
    "binom",
    "atom_distribution_dp",
    "atom_distribution_bruteforce",
    "atom_prob_indicator_closedform",
    "is_almost_constant",
    "verify_atom_bound",
    "fourier_coefficients",
    "fourier_profile",
    "uniformity_deviation",
    "product_deviation",
    "verify_cosine_bound",
    "appendix_inequality_check",
    "appendix_sweep",
    "differing_pair_probability",
    "cosine_product_expectation",
]

BRUTEFORCE_CAP = 10**7


def binom(a: int, k: int) -> int:
    """C(a, k), zero whenever k < 0 or k > a."""
    if k < 0 or a < 0 or k > a:
        return 0
    return math.comb(a, k)


@dataclass(frozen=True)
class AtomDistribution:
    p: int
    probs: dict[int, Fraction]

    def __post_init__(self):
        if set(self.probs) != set(range(self.p)):
            raise RangeViolation("distribution must assign a value to every residue")
        if sum(self.probs.values()) != 1 or any(not 0 <= x <= 1 for x in self.probs.values()):
            raise RangeViolation("atom probabilities must lie in [0, 1] and sum to 1")

    def __getitem__(self, b: int) -> Fraction:
        return self.probs[b % self.p]

    def max_atom(self) -> tuple[int, Fraction]:
        """(b, P[b]) for the largest atom, smallest b on ties."""
        b = max(range(self.p), key=lambda r: (self.probs[r], -r))
        return b, self.probs[b]

    def to_rows(self) -> list[dict]:
        return [
            {"b": b, "numerator": x.numerator, "denominator": x.denominator}
            for b, x in sorted(self.probs.items())
        ]


@dataclass(frozen=True)
class FourierProfile:
    p: int
    magnitudes: dict[int, float]

    def to_rows(self) -> list[dict]:
        return [{"xi": xi, "magnitude": m} for xi, m in sorted(self.magnitudes.items())]


@dataclass(frozen=True)
class AppendixCell:
    n: int
    d: int
    p: int
    s: int
    b: int
    i: int
    t: int
    a: int
    c: int

    @property
    def holds(self) -> bool:
        """a >= (d / 2n) c, checked as 2n a >= d c."""
        return 2 * self.n * self.a >= self.d * self.c

    @property
    def holds_strong(self) -> bool:
        """a >= (d / n) c; reported, not required."""
        return self.n * self.a >= self.d * self.c


@dataclass(frozen=True)
class AtomBound:
    max_atom: Fraction
    bound: Fraction
    holds: bool
    witness: int


def _coerce_vector(v, p=None) -> ResidueVector:
    if isinstance(v, ResidueVector):
        return v
    if p is None:
        raise TypeError("a plain sequence needs an explicit modulus p")
    return ResidueVector.from_ints(v, p)


def _check_weight(n: int, d: int):
    if not 1 <= d <= n:
        raise RangeViolation(f"need 1 <= d <= n, got n={n}, d={d}")


def _from_counts(counts, p: int, total: int) -> AtomDistribution:
    return AtomDistribution(p, {b: Fraction(int(counts[b]), total) for b in range(p)})


def atom_distribution_dp(v, d: int, p=None) -> AtomDistribution:
    """Exact law of q . v mod p by counting subsets per (chosen, residue).

    ``table[k, r]`` is the number of k-subsets of the positions seen so far
    whose entries sum to r; each new entry x shifts the k-1 row by x.
    """
    v = _coerce_vector(v, p)
    n, p = v.n, v.p
    _check_weight(n, d)
    table = np.zeros((d + 1, p), dtype=object)
    table[:] = 0
    table[0, 0] = 1
    for i, x in enumerate(v.entries):
        top = min(i + 1, d)
        table[1 : top + 1] = table[1 : top + 1] + np.roll(table[:top], x, axis=1)
    return _from_counts(table[d], p, math.comb(n, d))


def atom_distribution_bruteforce(v, d: int, p=None) -> AtomDistribution:
    """Exact law of q . v mod p by enumerating all d-subsets."""
    v = _coerce_vector(v, p)
    n, p = v.n, v.p
    _check_weight(n, d)
    total = math.comb(n, d)
    if total > BRUTEFORCE_CAP:
        raise InstanceTooLarge(f"C({n},{d}) = {total} exceeds the cap {BRUTEFORCE_CAP}")
    counts = [0] * p
    for subset in itertools.combinations(v.entries, d):
        counts[sum(subset) % p] += 1
    return _from_counts(counts, p, total)


def atom_prob_indicator_closedform(s: int, b: int, n: int, d: int, p: int) -> Fraction:
    """P[|T & S| = b (mod p)] for |S| = s and T a uniform d-subset."""
    p = PrimeField(p).p
    if not 0 <= b < p:
        raise RangeViolation(f"need 0 <= b < p, got b={b}")
    if not 2 <= s <= n:
        raise RangeViolation(f"need 2 <= s <= n, got s={s}, n={n}")
    _check_weight(n, d)
    ell = min((s - b) // p, (d - b) // p)
    total = sum(binom(s, i * p + b) * binom(n - s, d - i * p - b) for i in range(ell + 1))
    return Fraction(total, math.comb(n, d))


def is_almost_constant(v, d: int, p=None) -> tuple[bool, int]:
    """Whether some level set of v exceeds n - d / (10 ln n).

    Returns the flag with the residue of the largest level set (smallest
    residue on ties) as witness. A True flag means v lies outside the set
    of vectors whose level sets are all small.
    """
    v = _coerce_vector(v, p)
    n = v.n
    if n < 2:
        raise RangeViolation("need n >= 2")
    sizes = [0] * v.p
    for x in v.entries:
        sizes[x] += 1
    witness = max(range(v.p), key=lambda b: (sizes[b], -b))
    return sizes[witness] > n - d / (10 * math.log(n)), witness


def verify_atom_bound(v, d: int, p=None) -> AtomBound:
    """Compare the exact largest atom with 1 - d/(2n).

    The bound is claimed for 1 <= d <= n/2 and v off the constant line;
    constant v is rejected.
    """
    v = _coerce_vector(v, p)
    if v.is_constant():
        raise RangeViolation("v lies in span(1); the atom bound does not apply")
    b, top = atom_distribution_dp(v, d).max_atom()
    bound = 1 - Fraction(d, 2 * v.n)
    return AtomBound(top, bound, top <= bound, b)


def fourier_coefficients(v, d: int, p=None) -> np.ndarray:
    """E e_p(xi q . v) for xi = 0..p-1, from the exact atom law."""
    dist = atom_distribution_dp(v, d, p)
    q = dist.p
    probs = [float(dist.probs[b]) for b in range(q)]
    return np.array(
        [sum(pb * cmath.exp(2j * math.pi * xi * b / q) for b, pb in enumerate(probs)) for xi in range(q)]
    )


def fourier_profile(v, d: int, p=None) -> FourierProfile:
    coef = fourier_coefficients(v, d, p)
    mags = {xi: min(1.0, float(abs(c))) for xi, c in enumerate(coef)}
    mags[0] = 1.0
    return FourierProfile(len(coef), mags)


def uniformity_deviation(v, d: int, p=None) -> float:
    """max_b |p P[q . v = b] - 1| for a single row."""
    dist = atom_distribution_dp(v, d, p)
    return float(max(abs(dist.p * x - 1) for x in dist.probs.values()))


def product_deviation(single_row: float, n: int) -> float:
    """(1 + dev)^n - 1: relative deviation of P[Qv = a] over n independent rows."""
    return math.expm1(n * math.log1p(single_row))


def verify_cosine_bound(p: int) -> tuple[float, bool]:
    """max over m in 1..p-1 of |cos(pi m / p)| e^{2/p^2}, and whether it is <= 1."""
    p = PrimeField(p).p
    m = np.arange(1, p)
    ratio = float(np.max(np.abs(np.cos(np.pi * m / p))) * math.exp(2 / p**2))
    return ratio, ratio <= 1.0


def appendix_inequality_check(n: int, d: int, p: int, s: int, b: int) -> list[AppendixCell]:
    """Cells i = 0..ell with t = ip + b, the neighbouring-residue numerator
    a_i = C(s,t-1)C(n-s,d-t+1) + C(s,t+1)C(n-s,d-t-1) and the on-target
    numerator c_i = C(s,t)C(n-s,d-t).
    """
    p = PrimeField(p).p
    if not 1 <= d or 2 * d > n:
        raise RangeViolation(f"need 1 <= d <= n/2, got n={n}, d={d}")
    if not 2 <= s <= n - 1:
        raise RangeViolation(f"need 2 <= s <= n-1, got s={s}, n={n}")
    if not 0 <= b < p:
        raise RangeViolation(f"need 0 <= b < p, got b={b}")
    ell = min((s - b) // p, (d - b) // p)
    cells = []
    for i in range(ell + 1):
        t = i * p + b
        a = binom(s, t - 1) * binom(n - s, d - t + 1) + binom(s, t + 1) * binom(n - s, d - t - 1)
        c = binom(s, t) * binom(n - s, d - t)
        cells.append(AppendixCell(n, d, p, s, b, i, t, a, c))
    return cells


def appendix_sweep(n_max: int, primes=(2, 3, 5, 7), n_min: int = 3) -> Iterator[AppendixCell]:
    """Every cell with n_min <= n <= n_max, 1 <= d <= n/2, 2 <= s < n, all b, i."""
    for n in range(max(n_min, 3), n_max + 1):
        for d in range(1, n // 2 + 1):
            for p in primes:
                for s in range(2, n):
                    for b in range(p):
                        yield from appendix_inequality_check(n, d, p, s, b)


def differing_pair_probability(v, d: int, trials: int, seed: int = 0, p=None) -> tuple[float, float]:
    """Monte Carlo P[some l <= d has v[sigma(l)] != v[sigma(l+d)]].

    Returns the estimate and the implied constant c = estimate * n / d.
    """
    v = _coerce_vector(v, p)
    hits = 0
    for t in range(trials):
        sigma = random_permutation(v.n, RngStream(seed, t))
        hits += differing_pairs_count(v, sigma, d, d) > 0
    est = hits / trials
    return est, est * v.n / d


def cosine_product_expectation(v, d: int, trials: int, seed: int = 0, p=None, m=None) -> tuple[float, float]:
    """Monte Carlo E_sigma[exp(-2 X / p^2)], X counting differing pairs in a window.

    The window defaults to :func:`default_window`. Also returns the measured
    exponent -ln(E) / ln(n), reported in place of an unspecified constant.
    """
    v = _coerce_vector(v, p)
    m = default_window(v.n, d) if m is None else m
    total = 0.0
    for t in range(trials):
        sigma = random_permutation(v.n, RngStream(seed, t))
        total += math.exp(-2 * differing_pairs_count(v, sigma, d, m) / v.p**2)
    mean = total / trials
    return mean, -math.log(mean) / math.log(v.n)

"""Reproducible Monte Carlo and exact experiments on Q_{n,d}.

Trial ``t`` of every experiment draws from ``RngStream(master_seed, t)``,
and outcomes are folded in trial order, so results do not depend on how
many worker processes run the trials.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Callable, Iterable, Optional

from .errors import EigenpairViolation, NotSquareError, PrimeDividesDegree, RangeViolation
from .fflinalg import (
    IntMatrix,
    PrimeField,
    crt_primes,
    det_integer_exact,
    is_prime,
    kernel_size,
    rank_mod_p,
    reduce_mod_p,
)
from .sampler import RngStream, enumerate_matrices, sample_matrix

__all__ = [
    "LOG_CONVENTION",
    "RESULTS_SCHEMA",
    "ExperimentConfig",
    "EstimateCI",
    "PrimeChoice",
    "KernelMoment",
    "wilson_interval",
    "choose_prime",
    "estimate_singularity",
    "eigenpair_check",
    "estimate_perturbed_singularity",
    "kernel_first_moment",
    "zero_column_probability",
    "estimate_zero_column",
    "conjecture_scan",
    "exact_probability",
    "singularity_views",
    "results_row",
]

LOG_CONVENTION = "natural"

RESULTS_SCHEMA = (
    "n", "d", "p", "degenerate", "trials", "successes",
    "estimate", "ci_lo", "ci_hi", "seed", "mode",
)

_Z95 = statistics.NormalDist().inv_cdf(0.975)


@dataclass(frozen=True)
class ExperimentConfig:
    """One reproducible run. ``prime=None`` selects the prime automatically."""

    n: int
    d: int
    trials: int = 1000
    master_seed: int = 0
    prime: Optional[int] = None
    A: Optional[IntMatrix] = None

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.d <= self.n:
            raise RangeViolation(f"need 1 <= d <= n, got n={self.n}, d={self.d}")
        if self.trials < 1:
            raise RangeViolation(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.master_seed < 1 << 64:
            raise RangeViolation("seed must be a 64-bit unsigned integer")
        if self.prime is not None:
            PrimeField(self.prime)
        if self.A is not None:
            A = IntMatrix.coerce(self.A)
            if (A.n_rows, A.n_cols) != (self.n, self.n):
                raise NotSquareError(f"A must be {self.n}x{self.n}, got {A.n_rows}x{A.n_cols}")
            object.__setattr__(self, "A", A)

    @property
    def prime_rule(self) -> str:
        return "auto" if self.prime is None else "fixed"


@dataclass(frozen=True)
class EstimateCI:
    successes: int
    trials: int
    estimate: float
    ci_lo: float
    ci_hi: float
    master_seed: int

    @classmethod
    def from_counts(cls, successes: int, trials: int, master_seed: int) -> "EstimateCI":
        lo, hi = wilson_interval(successes, trials)
        return cls(successes, trials, successes / trials, lo, hi, master_seed)

    @property
    def exact(self) -> Fraction:
        return Fraction(self.successes, self.trials)

    @property
    def standard_error(self) -> float:
        q = self.estimate
        return math.sqrt(q * (1 - q) / self.trials)

    def covers(self, value) -> bool:
        return self.ci_lo <= value <= self.ci_hi


@dataclass(frozen=True)
class PrimeChoice:
    p: int
    target: float
    degenerate: bool


@dataclass(frozen=True)
class KernelMoment:
    p: int
    prime_choice: Optional[PrimeChoice]
    mean: Fraction
    mean_ci: tuple[float, float]
    tail: EstimateCI
    markov_bound: float
    markov_holds: bool
    counts: dict = field(default_factory=dict)


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval; clipped so that it always contains the point estimate."""
    if trials < 1 or not 0 <= successes <= trials:
        raise RangeViolation(f"invalid counts {successes}/{trials}")
    q = successes / trials
    z2 = z * z
    denom = 1 + z2 / trials
    centre = (q + z2 / (2 * trials)) / denom
    half = z * math.sqrt(q * (1 - q) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, min(q, centre - half)), min(1.0, max(q, centre + half))


def _prime_target(n: int, d: int) -> float:
    if n < 2:
        return math.inf
    ln = math.log(n)
    return d / (math.sqrt(n) * ln**1.5)


def choose_prime(n: int, d: int) -> PrimeChoice:
    """Prime nearest to d / (sqrt(n) ln^{3/2} n) that does not divide d.

    Ties go to the larger prime. Targets below 2 (and n = 1, where the
    target is undefined) are flagged degenerate and get the smallest prime
    not dividing d.
    """
    if n < 1 or not 1 <= d <= n:
        raise RangeViolation(f"need 1 <= d <= n, got n={n}, d={d}")
    x = _prime_target(n, d)

    def ok(q):
        return is_prime(q) and d % q != 0

    if not x >= 2 or math.isinf(x):
        q = 2
        while not ok(q):
            q += 1
        return PrimeChoice(q, x, True)
    lower = math.floor(x)
    while lower >= 2 and not ok(lower):
        lower -= 1
    upper = math.ceil(x)
    while not ok(upper):
        upper += 1
    if lower < 2 or upper - x <= x - lower:
        return PrimeChoice(upper, x, False)
    return PrimeChoice(lower, x, False)


def _run_trials(fn: Callable[[int], object], trials: int, workers: int = 1) -> list:
    if workers is None or workers <= 1:
        return [fn(t) for t in range(trials)]
    chunk = max(1, trials // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials), chunksize=chunk))


def _singular_trial(n: int, d: int, seed: int, A: Optional[IntMatrix], t: int) -> bool:
    Q = sample_matrix(n, d, RngStream(seed, t)).to_int_matrix()
    if A is not None:
        Q = A + Q
    return det_integer_exact(Q) == 0


def _kernel_trial(n: int, d: int, seed: int, p: int, t: int) -> int:
    Q = sample_matrix(n, d, RngStream(seed, t)).to_int_matrix()
    return kernel_size(reduce_mod_p(Q, p))


def _zero_column_trial(n: int, d: int, seed: int, t: int) -> bool:
    return bool((sample_matrix(n, d, RngStream(seed, t)).bits.sum(axis=0) == 0).any())


def estimate_singularity(cfg: ExperimentConfig, workers: int = 1) -> EstimateCI:
    """Fraction of sampled Q_{n,d} with exact determinant zero."""
    if cfg.A is not None:
        raise RangeViolation("config carries a perturbation; use estimate_perturbed_singularity")
    fn = partial(_singular_trial, cfg.n, cfg.d, cfg.master_seed, None)
    hits = sum(_run_trials(fn, cfg.trials, workers))
    return EstimateCI.from_counts(hits, cfg.trials, cfg.master_seed)


def eigenpair_check(A, d: int) -> bool:
    """True iff A 1 = -d 1, i.e. (1, -d) is an eigenpair of A."""
    A = IntMatrix.coerce(A)
    if not A.is_square:
        raise NotSquareError(f"expected a square matrix, got {A.n_rows}x{A.n_cols}")
    return all(s == -d for s in A.row_sums())


def estimate_perturbed_singularity(cfg: ExperimentConfig, workers: int = 1) -> EstimateCI:
    """Fraction of samples with det(A + Q_{n,d}) = 0.

    Raises :class:`EigenpairViolation` when A 1 = -d 1, since then
    A + Q is always singular.
    """
    if cfg.A is None:
        raise RangeViolation("perturbed estimate needs a matrix A in the config")
    if eigenpair_check(cfg.A, cfg.d):
        raise EigenpairViolation(f"(1, -{cfg.d}) is an eigenpair of A")
    fn = partial(_singular_trial, cfg.n, cfg.d, cfg.master_seed, cfg.A)
    hits = sum(_run_trials(fn, cfg.trials, workers))
    return EstimateCI.from_counts(hits, cfg.trials, cfg.master_seed)


def _resolve_prime(cfg: ExperimentConfig) -> tuple[int, Optional[PrimeChoice]]:
    if cfg.prime is not None:
        return cfg.prime, None
    choice = choose_prime(cfg.n, cfg.d)
    return choice.p, choice


def kernel_first_moment(cfg: ExperimentConfig, workers: int = 1) -> KernelMoment:
    """Empirical E|ker_{Z_p} Q| and P[|ker| >= p], with the Markov check
    P[K >= p] <= E[K] / p + 3 SE."""
    p, choice = _resolve_prime(cfg)
    if cfg.d % p == 0:
        raise PrimeDividesDegree(f"p={p} divides d={cfg.d}")
    ks = _run_trials(partial(_kernel_trial, cfg.n, cfg.d, cfg.master_seed, p), cfg.trials, workers)
    total = sum(ks)
    mean = Fraction(total, cfg.trials)
    if cfg.trials > 1:
        sd = statistics.stdev(float(k) for k in ks)
    else:
        sd = 0.0
    half = _Z95 * sd / math.sqrt(cfg.trials)
    tail = EstimateCI.from_counts(sum(k >= p for k in ks), cfg.trials, cfg.master_seed)
    bound = float(mean) / p + 3 * tail.standard_error
    counts: dict[int, int] = {}
    for k in ks:
        counts[k] = counts.get(k, 0) + 1
    return KernelMoment(
        p, choice, mean, (float(mean) - half, float(mean) + half), tail,
        bound, tail.estimate <= bound, dict(sorted(counts.items())),
    )


def zero_column_probability(n: int, d: int) -> Fraction:
    """Exact P[Q_{n,d} has an all-zero column] by inclusion-exclusion over columns."""
    if n < 1 or not 1 <= d <= n:
        raise RangeViolation(f"need 1 <= d <= n, got n={n}, d={d}")
    total = math.comb(n, d)
    return sum(
        (
            (-1) ** (k + 1) * math.comb(n, k) * Fraction(math.comb(n - k, d), total) ** n
            for k in range(1, n - d + 1)
        ),
        Fraction(0),
    )


def estimate_zero_column(cfg: ExperimentConfig, workers: int = 1) -> EstimateCI:
    fn = partial(_zero_column_trial, cfg.n, cfg.d, cfg.master_seed)
    hits = sum(_run_trials(fn, cfg.trials, workers))
    return EstimateCI.from_counts(hits, cfg.trials, cfg.master_seed)


def results_row(cfg: ExperimentConfig, est: EstimateCI, mode: str) -> dict:
    if cfg.prime is not None:
        p, degenerate = cfg.prime, False
    else:
        choice = choose_prime(cfg.n, cfg.d)
        p, degenerate = choice.p, choice.degenerate
    return {
        "n": cfg.n, "d": cfg.d, "p": p, "degenerate": degenerate,
        "trials": est.trials, "successes": est.successes, "estimate": est.estimate,
        "ci_lo": est.ci_lo, "ci_hi": est.ci_hi, "seed": est.master_seed, "mode": mode,
    }


def conjecture_scan(
    n_values: Iterable[int], c_values: Iterable[float], trials: int, seed: int, workers: int = 1
) -> list[dict]:
    """Singularity estimate and exact zero-column probability at d = max(1, ceil(c ln n)).

    Purely descriptive; d is capped at n.
    """
    rows = []
    c_values = list(c_values)
    for n in n_values:
        for c in c_values:
            d = min(n, max(1, math.ceil(c * math.log(n))))
            cfg = ExperimentConfig(n, d, trials, seed)
            row = results_row(cfg, estimate_singularity(cfg, workers), "conjecture")
            row["c"] = c
            row["zero_column"] = zero_column_probability(n, d)
            rows.append(row)
    return rows


def exact_probability(n: int, d: int, event: Callable) -> Fraction:
    """P[event(Q)] by enumerating every outcome of Q_{n,d}."""
    hits = total = 0
    for Q in enumerate_matrices(n, d):
        total += 1
        hits += bool(event(Q))
    return Fraction(hits, total)


def singularity_views(A, k: int = 3) -> dict:
    """Three views of singularity: exact det, rank and kernel size modulo k CRT primes."""
    A = IntMatrix.coerce(A)
    primes = crt_primes(k)
    reduced = [reduce_mod_p(A, q) for q in primes]
    return {
        "det_zero": det_integer_exact(A) == 0,
        "rank_deficient": [rank_mod_p(M) < A.n_rows for M in reduced],
        "kernel_nontrivial": [kernel_size(M) > 1 for M in reduced],
    }

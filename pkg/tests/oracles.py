"""Independent reference implementations used only by the tests.

None of these share code with the library paths they check.
"""

import itertools
import math
from fractions import Fraction


def det_cofactor(rows):
    """Laplace expansion along the first row; exact on Python ints."""
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        if rows[0][j] == 0:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * det_cofactor(minor)
    return total


def det_fraction(rows):
    """Gaussian elimination over the rationals."""
    a = [[Fraction(x) for x in r] for r in rows]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return int(det)


def kernel_count(rows, p):
    """Number of v in Z_p^n with M v = 0, by exhaustion."""
    n = len(rows[0])
    return sum(
        all(sum(x * y for x, y in zip(r, v)) % p == 0 for r in rows)
        for v in itertools.product(range(p), repeat=n)
    )


def all_q_matrices(n, d):
    """Every outcome of Q_{n,d} as a list of 0/1 row lists."""
    rows = []
    for c in itertools.combinations(range(n), d):
        rows.append([1 if j in c else 0 for j in range(n)])
    return [list(m) for m in itertools.product(rows, repeat=n)]


def exact_over_q(n, d, event):
    outcomes = all_q_matrices(n, d)
    return Fraction(sum(bool(event(m)) for m in outcomes), len(outcomes))


def atom_law_by_subsets(v, d, p):
    """Law of sum over a uniform d-subset, by direct enumeration."""
    n = len(v)
    counts = [0] * p
    for c in itertools.combinations(range(n), d):
        counts[sum(v[i] for i in c) % p] += 1
    total = math.comb(n, d)
    return {b: Fraction(counts[b], total) for b in range(p)}

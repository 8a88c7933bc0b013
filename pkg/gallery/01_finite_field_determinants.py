"""
Determinants over Z_p and over the integers
===========================================

Exact determinants come from elimination modulo several word-sized primes
glued back together by the Chinese Remainder Theorem.
"""

import numpy as np

from combmat.fflinalg import (
    det_integer_exact,
    det_mod_p,
    hadamard_bound,
    kernel_size,
    rank_mod_p,
    reduce_mod_p,
)

# %%
# Reduction keeps least nonnegative residues
A = [[5, -1], [0, 7]]
print(reduce_mod_p(A, 3))

# %%
# The integer determinant reduces to the modular one
rng = np.random.default_rng(0)
A = rng.integers(-10**6, 10**6, size=(6, 6)).tolist()
det = det_integer_exact(A)
print("det =", det)
print("Hadamard bound =", hadamard_bound(A))
for p in (2, 3, 101, 2**31 - 1):
    print(p, det % p, det_mod_p(reduce_mod_p(A, p)))

# %%
# Rank deficiency over Z_p shows up as a kernel of size p^(n - rank)
M = reduce_mod_p([[1, 1, 1], [2, 2, 2], [1, 1, 1]], 3)
print("rank", rank_mod_p(M), "kernel", kernel_size(M))

"""
Sampling Q_{n,d} and the permutation couplings
==============================================

Each row of Q_{n,d} is a uniform d-subset of 1..n. The couplings build the
same law from a random permutation and d independent bits.
"""

from collections import Counter

from combmat.fflinalg import format_matrix
from combmat.sampler import (
    RngStream,
    coupled_support_bernoulli,
    coupling_law,
    random_permutation,
    sample_matrix,
)

# %%
# One draw; the same (seed, stream) pair always reproduces it
Q = sample_matrix(8, 3, RngStream(master_seed=1, stream_index=0))
print(format_matrix(Q.to_int_matrix()))
print("row sums", Q.row_sums())
assert Q == sample_matrix(8, 3, RngStream(1, 0))

# %%
# A single coupled support
rng = RngStream(2)
sigma = random_permutation(6, rng)
print(sigma, "->", coupled_support_bernoulli((1, 0, 1), sigma, 3))

# %%
# Over all (gamma, sigma) every support appears equally often
law = coupling_law(4, 2)
print(sorted(law.items()))
print(Counter(law.values()))

"""
Atom probabilities of a random row
==================================

P[q . v = b] for a uniform weight-d row q, computed exactly three ways.
"""

from combmat.anticoncentration import (
    atom_distribution_bruteforce,
    atom_distribution_dp,
    atom_prob_indicator_closedform,
    fourier_profile,
    is_almost_constant,
    uniformity_deviation,
    verify_atom_bound,
)

v, d, p = [1, 2, 0, 0], 2, 3

# %%
# The DP and the brute force agree exactly
print(atom_distribution_dp(v, d, p).probs)
print(atom_distribution_bruteforce(v, d, p).probs)

# %%
# At indicator vectors there is a closed form
n, s = 10, 4
ind = [1] * s + [0] * (n - s)
for b in range(p):
    print(b, atom_prob_indicator_closedform(s, b, n, 3, p), atom_distribution_dp(ind, 3, p)[b])

# %%
# Largest atom against 1 - d/(2n)
print(verify_atom_bound([1, 0, 0, 0, 0, 0], 3, 2))

# %%
# Character sums: near-uniform laws have small Fourier magnitudes
w = [i % 5 for i in range(30)]
print(fourier_profile(w, 10, 5).magnitudes)
print("deviation", uniformity_deviation(w, 10, 5))
print("almost constant?", is_almost_constant(w, 10, 5))

# %%
# A long exact computation; C(600, 300) has about 180 digits
big = atom_distribution_dp([1] * 7 + [0] * 593, 300, 7)
print({b: float(x) for b, x in big.probs.items()})

"""
Kernel sizes and zero columns
=============================

The mean kernel size over Z_p bounds P[K >= p] by Markov's inequality.
Below d ~ ln n a zero column makes Q singular most of the time.
"""

import math

from combmat.experiments import (
    ExperimentConfig,
    conjecture_scan,
    estimate_zero_column,
    kernel_first_moment,
    zero_column_probability,
)

# %%
km = kernel_first_moment(ExperimentConfig(20, 10, 1000, 0, prime=3))
print("mean K", float(km.mean), "CI", km.mean_ci)
print("P[K >= p]", km.tail.estimate, "<=", km.markov_bound, km.markov_holds)
print(km.counts)

# %%
# Exact inclusion-exclusion against simulation
d = math.ceil(0.5 * math.log(64))
exact = zero_column_probability(64, d)
print(float(exact), estimate_zero_column(ExperimentConfig(64, d, 2000, 0)))

# %%
# A small scan across c in d = ceil(c ln n)
for row in conjecture_scan([16, 32], [0.5, 1, 2], trials=100, seed=0):
    print(row["n"], row["c"], row["d"], row["estimate"], float(row["zero_column"]))

"""
Monte Carlo singularity estimates
=================================

Trial t uses random stream t, so estimates are reproducible and do not
depend on how trials are spread over workers.
"""

from fractions import Fraction

from combmat.experiments import (
    ExperimentConfig,
    choose_prime,
    estimate_perturbed_singularity,
    estimate_singularity,
    exact_probability,
)
from combmat.fflinalg import det_integer_exact

# %%
# Exact value by enumeration, then the estimate
exact = exact_probability(3, 2, lambda Q: det_integer_exact(Q.bits) == 0)
est = estimate_singularity(ExperimentConfig(3, 2, trials=5000, master_seed=0))
print(exact, est)
assert exact == Fraction(7, 9)

# %%
# The estimate falls as d grows
for d in (2, 4, 8, 12):
    e = estimate_singularity(ExperimentConfig(24, d, 300, 0))
    print(d, e.estimate, (round(e.ci_lo, 3), round(e.ci_hi, 3)))

# %%
# Perturbation by a fixed integer matrix
e = estimate_perturbed_singularity(ExperimentConfig(2, 1, 2000, 1, A=[[1, 0], [0, 1]]))
print("A = I:", e.estimate)

# %%
# The working prime is almost always degenerate at desk scale
print(choose_prime(100, 50))
print(choose_prime(10**8, 8 * 10**7))

"""
The binomial cell inequality
============================

For an indicator vector with support size s, the atom at b splits into
cells t = ip + b. Each cell's neighbours a_i dominate (d/2n) c_i.
"""

from collections import Counter

from combmat.anticoncentration import appendix_inequality_check, appendix_sweep

# %%
for cell in appendix_inequality_check(n=4, d=2, p=2, s=2, b=0):
    print(cell, cell.holds)

# %%
# Exhaustive sweep; the stronger d/n form is only reported
tally = Counter()
for cell in appendix_sweep(24):
    tally["cells"] += 1
    tally["fail"] += not cell.holds
    tally["fail_strong"] += not cell.holds_strong
print(dict(tally))

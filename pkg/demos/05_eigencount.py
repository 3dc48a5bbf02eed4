"""How many eigenvalues of a truncated Fermi state hold 1 - eps of the weight."""
import numpy as np

from gibbslz import ModelParams
from gibbslz.estimators import eigencount, eigencount_oracle

# three independent modes: eigenvalues are products of p or 1 - p
probs = [0.1, 0.3, 0.5]
for eps in (0.5, 0.2, 0.05, 0.001):
    print(f"eps={eps:<6} count {eigencount(probs, eps)} of {2 ** len(probs)}")

p = ModelParams("fermi", beta=1.0, mu=0.0, L=256)
print("\nbudget  eps=0.5   eps=0.1   eps=0.01   (log M / L)")
for budget in (4, 8, 12, 16, 20):
    row = [eigencount_oracle(p, budget, eps) for eps in (0.5, 0.1, 0.01)]
    print(f"{budget:6d}  " + "  ".join(f"{v:.5f}" for v in row))

# both ways of ordering the spectrum give the same count
assert eigencount_oracle(p, 16, 0.1, "weights") == eigencount_oracle(p, 16, 0.1, "log")

"""Match-length estimates of the entropy converging, slowly, with window size."""
import numpy as np

from gibbslz import ModelParams
from gibbslz.entropy import vn_entropy_box
from gibbslz.estimators import grassberger_estimate, reciprocal_estimate
from gibbslz.matchlen import compute_match_lengths

p = ModelParams("fermi", beta=1.0, mu=0.0)
target = vn_entropy_box(p, 1.0).value
print(f"target (box entropy) {target:.5f}")

# R_n is the length of the shortest pattern starting at n that does not occur
# again at any other site of the window. It grows like log L / h, so it is
# short where the local entropy h is high.
for L in (2**10, 2**12, 2**14, 2**16):
    q = p.replace(L=L)
    g, r = [], []
    for seed in range(5):
        field, _ = compute_match_lengths(q, seed)
        g.append(grassberger_estimate(field, L, 1.0, 1))
        r.append(1 / reciprocal_estimate(field, L, 1))
    g = np.median(g)
    print(f"L=2^{int(np.log2(L)):2d}  grassberger {g:.4f} ({abs(g - target) / target:.1%})"
          f"  1/reciprocal {np.median(r):.4f}")

# a look at one field: long matches sit in the sparse, low entropy tail
field, arr = compute_match_lengths(p.replace(L=4096), 0)
# past the occupied region every pattern is all zeros and repeats forever;
# those sites carry no finite R and are left out of the sums
for part, (R, inf) in enumerate(zip(np.array_split(field.lengths, 4),
                                    np.array_split(field.unbounded, 4))):
    med = np.median(R[~inf]) if (~inf).any() else float("nan")
    print(f"quarter {part}: median finite R {med:5.1f}, unbounded sites {inf.sum()}")

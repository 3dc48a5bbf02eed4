"""Match lengths on a square lattice, via hashed cube comparison."""
import numpy as np

from gibbslz import ModelParams
from gibbslz.entropy import vn_entropy_box
from gibbslz.estimators import grassberger_estimate
from gibbslz.matchlen import compute_match_lengths

p = ModelParams("fermi", beta=1.0, mu=0.0, dim=2)
target = vn_entropy_box(p, 1.0).value
for L in (32, 64, 128):
    q = p.replace(L=L)
    vals = []
    for s in range(5):
        field, arr = compute_match_lengths(q, s)
        vals.append(grassberger_estimate(field, L, 1.0, 2))
    med = np.median(vals)
    print(f"L={L:4d}  estimate {med:.4f}  target {target:.4f}  rel {abs(med - target) / target:.3f}")

print("occupied sites in the corner of the last sample:")
print(arr.values[:8, :16])

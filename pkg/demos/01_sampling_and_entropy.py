"""Sampling a free Bose gas site by site and comparing with its entropy integrals.

Run with ``python demos/01_sampling_and_entropy.py``.
"""
import numpy as np

from gibbslz import ModelParams, sample_array, window_box
from gibbslz.entropy import riemann_entropy, vn_entropy_box, vn_entropy_full
from gibbslz.source import entropy_from_exponent, exponent

# A one-dimensional Bose gas at inverse temperature 1 with chemical potential 1.
# Each lattice site n is an independent geometric variable whose parameter
# depends on n/L, so the source is slowly varying rather than stationary.
p = ModelParams("bose", beta=1.0, mu=1.0, L=1024)
arr = sample_array(p, window_box(p), seed=0)
print("first 40 occupations:", arr.values[:40])
print("total particles in the window:", arr.values.sum())

# occupation falls off as the dispersion grows
blocks = arr.values.reshape(8, -1).mean(axis=1)
print("mean occupation per eighth of the window:", np.round(blocks, 3))

# the same seed always gives the same array, and a sub-box reads the same sites
again = sample_array(p, window_box(p), seed=0)
assert (again.values == arr.values).all()

# entropy per unit volume: over the unit box, over the whole line, and the
# lattice sum that the box integral is the limit of
box = vn_entropy_box(p, 1.0).value
full = vn_entropy_full(p).value
for L in (256, 1024, 4096):
    q = p.replace(L=L)
    r = riemann_entropy(q, window_box(q)).value
    print(f"L={L:5d}  riemann {r:.6f}  box {box:.6f}  gap {r - box:+.2e}")
print(f"full line {full:.6f}")

# the lattice sum is just the per-site entropies added up
n = np.arange(1, p.L + 1)[:, None]
h = entropy_from_exponent(p.statistics, exponent(p, n))
print("direct sum / L:", h.sum() / p.L)

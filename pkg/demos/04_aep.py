"""The per-volume log-probability of a sample concentrates on the entropy."""
import numpy as np

from gibbslz import ModelParams, aep_region, aep_statistic, sample_array
from gibbslz.entropy import riemann_entropy

p = ModelParams("bose", beta=1.0, mu=1.0)
for L in (256, 1024, 4096):
    q = p.replace(L=L)
    region = aep_region(q)   # centred cube outside which sites are almost surely empty
    vals = np.array([aep_statistic(q, sample_array(q, region, s), region=region)
                     for s in range(200)])
    expect = riemann_entropy(q, region).value
    print(f"L={L:5d}  region {region.shape}  mean {vals.mean():.5f}  expected {expect:.5f}"
          f"  sd {vals.std(ddof=1):.5f}")

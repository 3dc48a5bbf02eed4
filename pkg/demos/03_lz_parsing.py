"""Incremental parsing of an occupation string and the word-count estimate."""
import math

from gibbslz import ModelParams, sample_array, window_box
from gibbslz.entropy import vn_entropy_box
from gibbslz.lzparse import decode, encode, lz_entropy_estimate, lz_parse

seq = (0, 1, 0, 0, 1, 1)
parse = lz_parse(seq)
print("words:", [seq[s - 1:s - 1 + n] for s, n in zip(parse.starts, parse.lengths)])
print("estimate c log L / L =", lz_entropy_estimate(parse, 6), "=", 4 * math.log(6) / 6)

pairs, rem = encode(parse)
print("(header, last symbol) pairs:", pairs)
assert decode(pairs, rem) == list(seq)

# On real samples the count c grows like L h / log L only slowly, and the
# estimate stays well above the target for every feasible L.
p = ModelParams("bose", beta=1.0, mu=1.0)
target = vn_entropy_box(p, 1.0).value
for k in (12, 14, 16, 18):
    q = p.replace(L=2**k)
    arr = sample_array(q, window_box(q), seed=1)
    est = lz_entropy_estimate(lz_parse(arr.values), q.L)
    print(f"L=2^{k}  words {lz_parse(arr.values).word_count:6d}  estimate {est:.4f}"
          f"  target {target:.4f}")

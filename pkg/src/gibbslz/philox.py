"""Vectorised Philox4x64-10 counter-based generator.

Each lattice site gets its own counter, so a draw depends only on
``(seed, site)`` and never on how many other sites were sampled before it.
The block function is bit-compatible with :class:`numpy.random.Philox`
(numpy pre-increments its counter, so ``Philox(counter=c)`` emits
``philox4x64(c + 1, key)``).
"""

import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def _mulhilo(a, b):
    """Full 64x64 -> 128 bit product of uint64 arrays, as (hi, lo)."""
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    lo = a * b
    return hi, lo


def philox4x64(counter, key, rounds=10):
    """Apply the Philox4x64 block function.

    ``counter`` is a ``(..., 4)`` uint64 array, ``key`` a pair of ints.
    Returns a ``(..., 4)`` uint64 array of random words.
    """
    ctr = np.asarray(counter, dtype=np.uint64)
    c0, c1, c2, c3 = (ctr[..., i].copy() for i in range(4))
    k0 = np.uint64(int(key[0]) & 0xFFFFFFFFFFFFFFFF)
    k1 = np.uint64(int(key[1]) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3], axis=-1)


def site_counters(coords, stream=0):
    """Pack integer site coordinates (shape ``(N, d)``) into Philox counters.

    Coordinates are stored two's-complement in the first three words; a
    fourth word carries the dimension and stream tag so that e.g. site
    ``(3,)`` in d=1 and ``(3, 0)`` in d=2 draw different numbers.
    Dimensions above three are folded into word 2 by mixing.
    """
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim == 1:
        coords = coords[:, None]
    n, d = coords.shape
    ctr = np.zeros((n, 4), dtype=np.uint64)
    u = coords.astype(np.uint64)
    for i in range(min(d, 3)):
        ctr[:, i] = u[:, i]
    with np.errstate(over="ignore"):
        for i in range(3, d):
            ctr[:, 2] = ctr[:, 2] * _M1 + u[:, i] + _W1
    ctr[:, 3] = np.uint64((int(stream) << 8) | d)
    return ctr


def site_uniforms(seed, coords, stream=0):
    """Uniform doubles in [0, 1), one per row of ``coords``, keyed on the seed."""
    words = philox4x64(site_counters(coords, stream), (seed, 0x5EED))[:, 0]
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

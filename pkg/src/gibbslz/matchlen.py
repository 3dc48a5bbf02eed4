"""Match lengths of occupation arrays.

For an anchor ``u`` in the window ``B(1, W)``, the match length ``R_u`` is the
side of the smallest cube with bottom corner ``u`` whose contents differ from
the cube of the same side at every other anchor of the window. Cubes may run
past the window into a sampled margin of width ``m`` on the upper side of
every axis, so only sides ``s <= m + 1`` can be decided; an anchor still
tied at ``s = m + 1`` is *saturated*.

Three interchangeable routines compute the same field:

* :func:`match_lengths_brute` -- enumerate every side, compare all cubes.
* :func:`match_lengths_1d` -- suffix array with an LCP query (d = 1).
* :func:`match_lengths_hashed` -- rolling polynomial hashes of all cubes of a
  given side, with every hash-based verdict confirmed on the raw values.

:func:`compute_match_lengths` samples a model, grows the margin until every
anchor is decided, and marks anchors whose whole upper orthant is empty as
*unbounded* (``R_u = inf``): two such anchors stay tied for every side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .source import (
    Box,
    CoverageError,
    OccupationArray,
    Statistics,
    exponent,
    nonzero_prob_from_exponent,
    sample_array,
    window_box,
)

NO_RETURN = math.inf


class SaturationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MatchLengthField:
    window: Box
    lengths: np.ndarray
    saturated: np.ndarray
    margin_used: int
    unbounded: np.ndarray = None

    def __post_init__(self):
        if self.unbounded is None:
            object.__setattr__(self, "unbounded", np.zeros_like(self.saturated))

    @property
    def saturation_count(self):
        return int(self.saturated.sum())

    @property
    def finite(self):
        return ~(self.saturated | self.unbounded)

    def same_lengths(self, other):
        """Equal windows, flags, and lengths wherever the length is finite.

        An unbounded anchor stores ``margin + 1`` as a placeholder, which is
        not compared.
        """
        keep = ~self.unbounded
        return (self.window == other.window
                and np.array_equal(self.saturated, other.saturated)
                and np.array_equal(self.unbounded, other.unbounded)
                and np.array_equal(self.lengths[keep], other.lengths[keep]))

    def to_csv(self):
        """One row per site: coordinates, R (``inf`` when unbounded), saturated flag."""
        d = self.window.dim
        head = ",".join([f"n{i}" for i in range(d)] + ["R", "saturated"])
        rows = [head]
        coords = self.window.coords()
        R = self.lengths.ravel()
        sat = self.saturated.ravel()
        unb = self.unbounded.ravel()
        for c, r, s, ub in zip(coords.tolist(), R.tolist(), sat.tolist(), unb.tolist()):
            rows.append(",".join(map(str, c)) + f",{'inf' if ub else r},{int(s)}")
        return "\n".join(rows) + "\n"


def _margin(array, window):
    if array.dim != window.dim:
        raise CoverageError(f"array is {array.dim}-dimensional, window is {window.dim}-dimensional")
    box = array.box
    missing = box.first_missing(window)
    if missing is not None:
        raise CoverageError(f"window site {missing} is outside the sampled box {box}")
    return min(bh - wh for bh, wh in zip(box.hi, window.hi))


def _buffer(array, window, margin):
    region = Box(window.lo, tuple(s + margin for s in window.shape))
    return array.values[array.box.slices(region)]


def match_lengths_brute(array, window):
    """Match lengths by direct enumeration of every cube side."""
    m = _margin(array, window)
    buf = _buffer(array, window, m)
    d = window.dim
    n_anchor = window.size
    lengths = np.zeros(n_anchor, dtype=np.int64)
    open_ = np.ones(n_anchor, dtype=bool)
    for s in range(1, m + 2):
        cubes = sliding_window_view(buf, (s,) * d)
        cubes = cubes[tuple(slice(0, w) for w in window.shape)].reshape(n_anchor, -1)
        _, inverse, counts = np.unique(cubes, axis=0, return_inverse=True, return_counts=True)
        unique = counts[inverse.ravel()] == 1
        lengths[open_ & unique] = s
        open_ &= ~unique
        if not open_.any():
            break
    lengths[open_] = m + 1
    return MatchLengthField(window, lengths.reshape(window.shape),
                            open_.reshape(window.shape), m)


# -- 1D: suffix array ----------------------------------------------------------

def suffix_ranks(seq):
    """Prefix-doubling suffix sort.

    Returns ``(sa, levels)`` where ``levels[k][i]`` ranks the length-``2^k``
    block starting at ``i`` (blocks running off the end are padded with a
    symbol smaller than any letter).
    """
    seq = np.asarray(seq)
    n = len(seq)
    _, rank = np.unique(seq, return_inverse=True)
    rank = rank.astype(np.int32).ravel()
    levels = [rank]
    h = 1
    while n and rank.max() < n - 1:
        nxt = np.full(n, -1, dtype=np.int32)
        if h < n:
            nxt[:n - h] = rank[h:]
        order = np.lexsort((nxt, rank))
        change = (np.diff(rank[order]) != 0) | (np.diff(nxt[order]) != 0)
        new = np.empty(n, dtype=np.int32)
        new[order] = np.concatenate(([0], np.cumsum(change, dtype=np.int32)))
        rank = new
        levels.append(rank)
        h *= 2
    sa = np.argsort(rank, kind="stable")
    return sa, levels


def lcp_pairs(levels, i, j):
    """Longest common prefix of the suffixes at positions ``i`` and ``j`` (arrays)."""
    n = len(levels[0])
    i = np.array(i, dtype=np.int64)
    j = np.array(j, dtype=np.int64)
    lcp = np.zeros(len(i), dtype=np.int64)
    for k in range(len(levels) - 1, -1, -1):
        step = 1 << k
        ok = (i < n) & (j < n)
        eq = np.zeros(len(i), dtype=bool)
        eq[ok] = levels[k][i[ok]] == levels[k][j[ok]]
        i += eq * step
        j += eq * step
        lcp += eq * step
    return lcp


def match_lengths_1d(array, window):
    """Match lengths in one dimension from the suffix array of the buffer.

    ``R_u = 1 + max_v LCP(u, v)`` over window anchors ``v != u``; the maximum
    is attained at the nearest window suffixes in suffix-array order.
    """
    if window.dim != 1:
        raise ValueError("match_lengths_1d needs a one-dimensional window")
    m = _margin(array, window)
    buf = _buffer(array, window, m)
    W = window.size
    sa, levels = suffix_ranks(buf)
    in_window = sa[sa < W]
    best = np.zeros(W, dtype=np.int64)
    if W > 1:
        pair = lcp_pairs(levels, in_window[:-1], in_window[1:])
        np.maximum.at(best, in_window[:-1], pair)
        np.maximum.at(best, in_window[1:], pair)
    saturated = best >= m + 1
    lengths = np.where(saturated, m + 1, best + 1)
    return MatchLengthField(window, lengths, saturated, m)


# -- d dimensions: rolling hashes ---------------------------------------------

_PRIMES = (2147483647, 2147483629)
_BASES = ((1000003, 911382323, 972663749, 35689),
          (998244353 % 2147483629, 127773, 1327217885, 48271))


def _axis_powers(base, p, n):
    pw = np.empty(n, dtype=np.int64)
    inv = np.empty(n, dtype=np.int64)
    pw[0] = inv[0] = 1
    b_inv = pow(base, p - 2, p)
    for t in range(1, n):
        pw[t] = pw[t - 1] * base % p
        inv[t] = inv[t - 1] * b_inv % p
    return pw, inv


class _CubeHasher:
    """Polynomial hashes of all cubes of side ``s`` in a buffer, axis by axis."""

    def __init__(self, buf):
        self.buf = buf
        self.tables = []
        for p, bases in zip(_PRIMES, _BASES):
            tabs = [_axis_powers(bases[a % len(bases)] + a // len(bases), p, n)
                    for a, n in enumerate(buf.shape)]
            self.tables.append((p, np.mod(buf, p).astype(np.int64), tabs))

    def hashes(self, s, shape):
        keys = []
        for p, vals, tabs in self.tables:
            h = vals
            for axis, (pw, inv) in enumerate(tabs):
                n = h.shape[axis]
                view = [None] * h.ndim
                view[axis] = slice(None)
                weighted = h * pw[:n][tuple(view)] % p
                cs = np.cumsum(weighted, axis=axis)
                pad = [(0, 0)] * h.ndim
                pad[axis] = (1, 0)
                cs = np.pad(cs % p, pad)
                hi = [slice(None)] * h.ndim
                lo = [slice(None)] * h.ndim
                hi[axis] = slice(s, None)
                lo[axis] = slice(0, n - s + 1)
                win = (cs[tuple(hi)] - cs[tuple(lo)]) % p
                h = win * inv[:n - s + 1][tuple(view)] % p
            keys.append(h[tuple(slice(0, w) for w in shape)].ravel())
        return (keys[0] << 31) | keys[1]


def _cube(buf, corner, s):
    return buf[tuple(slice(c, c + s) for c in corner)]


def _partners(keys):
    """For each entry, another index with the same key (or -1) and the uniqueness mask."""
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    same_next = np.zeros(len(keys), dtype=bool)
    same_next[:-1] = sk[1:] == sk[:-1]
    same_prev = np.zeros(len(keys), dtype=bool)
    same_prev[1:] = same_next[:-1]
    partner_sorted = np.full(len(keys), -1, dtype=np.int64)
    nxt = np.roll(order, -1)
    prv = np.roll(order, 1)
    partner_sorted[same_prev] = prv[same_prev]
    partner_sorted[same_next] = nxt[same_next]
    partner = np.empty_like(partner_sorted)
    partner[order] = partner_sorted
    return partner, partner < 0


def _brute_single(buf, window_shape, corner, smax):
    """Exact match length of one anchor by direct comparison against every anchor."""
    d = len(window_shape)
    idx = np.ravel_multi_index(corner, window_shape)
    for s in range(1, smax + 1):
        cubes = sliding_window_view(buf, (s,) * d)
        cubes = cubes[tuple(slice(0, w) for w in window_shape)].reshape(-1, s**d)
        eq = np.all(cubes == cubes[idx], axis=1)
        if eq.sum() == 1:
            return s, False
    return smax, True


def match_lengths_hashed(array, window):
    """Match lengths for any d from rolling hashes of all cubes of each side.

    Distinct hashes prove distinct cubes. A hash tie is only trusted after the
    cube at side ``R_u - 1`` (or ``m + 1`` when saturated) is compared value by
    value with the tied anchor; since ties persist to smaller sides, that one
    check makes the result exact. Failed checks fall back to direct search.
    """
    m = _margin(array, window)
    buf = _buffer(array, window, m)
    shape = window.shape
    n_anchor = window.size
    hasher = _CubeHasher(buf)
    lengths = np.zeros(n_anchor, dtype=np.int64)
    partner_at_tie = np.full(n_anchor, -1, dtype=np.int64)
    open_ = np.ones(n_anchor, dtype=bool)
    s = 0
    for s in range(1, m + 2):
        partner, unique = _partners(hasher.hashes(s, shape))
        done = open_ & unique
        lengths[done] = s
        open_ &= ~unique
        partner_at_tie[open_] = partner[open_]
        if not open_.any():
            break
    saturated = open_.copy()
    lengths[saturated] = m + 1

    corners = np.stack(np.unravel_index(np.arange(n_anchor), shape), axis=-1)
    for u in np.flatnonzero(lengths > 1):
        side = lengths[u] if saturated[u] else lengths[u] - 1
        v = partner_at_tie[u]
        if np.array_equal(_cube(buf, corners[u], side), _cube(buf, corners[v], side)):
            continue
        r, sat = _brute_single(buf, shape, tuple(corners[u]), m + 1)
        lengths[u], saturated[u] = r, sat
    return MatchLengthField(window, lengths.reshape(shape), saturated.reshape(shape), m)


# -- unbounded anchors and margin control --------------------------------------

def empty_orthant(values):
    """True where every entry ``>=`` the site (componentwise) inside ``values`` is zero."""
    occupied = values != 0
    for axis in range(values.ndim):
        occupied = np.flip(np.logical_or.accumulate(np.flip(occupied, axis), axis=axis), axis)
    return ~occupied


def exterior_occupation_bound(params, edge, max_terms=10_000_000):
    """Bound on P(some site n >= 1 with max_i n_i > edge is occupied).

    Sums shell sizes times the occupation probability at the shell's smallest
    Euclidean norm; this assumes theta is non-decreasing beyond ``edge``.
    """
    d = params.dim
    total = 0.0
    j = edge + 1
    block = 4096
    while j < edge + max_terms:
        shells = np.arange(j, j + block, dtype=float)
        p = nonzero_prob_from_exponent(params.statistics,
                                       exponent(params, shells[:, None]))
        terms = (shells**d - (shells - 1) ** d) * p
        total += float(terms.sum())
        if terms[-1] < 1e-300 or (terms[-1] <= 1e-20 * total and terms[-1] <= terms[0]):
            return total
        j += block
    return math.inf


def classify_unbounded(field, array, params, tail_tol=1e-12):
    """Move saturated anchors that tie at every side to the unbounded set.

    With an exterior whose total occupation probability is below
    ``tail_tol`` taken as empty, an anchor's whole upper orthant is known
    once its occupied sites all sit inside its side ``m + 1`` cube. Saturated
    anchors whose orthant contents agree (after translation) with another
    anchor's are then tied forever. In d = 1 only empty orthants can tie.
    """
    if not field.saturated.any():
        return field
    m = field.margin_used
    edge = field.window.hi[0] - 1 + m
    if exterior_occupation_bound(params, edge) >= tail_tol:
        return field
    shape = field.window.shape
    buf = _buffer(array, field.window, m)
    empty = empty_orthant(buf)[tuple(slice(0, w) for w in shape)].ravel()
    sat = field.saturated.ravel()
    unbounded = np.zeros(len(sat), dtype=bool)
    if np.count_nonzero(sat & empty) >= 2:
        unbounded |= sat & empty
    groups = {}
    for u in np.flatnonzero(sat & ~empty):
        corner = np.unravel_index(u, shape)
        sub = buf[tuple(slice(c, None) for c in corner)]
        nz = np.argwhere(sub)
        if nz.max() > m:
            continue
        groups.setdefault((nz.tobytes(), sub[tuple(nz.T)].tobytes()), []).append(u)
    for members in groups.values():
        if len(members) >= 2:
            unbounded[members] = True
    unbounded = unbounded.reshape(shape)
    return MatchLengthField(field.window, field.lengths, field.saturated & ~unbounded,
                            m, field.unbounded | unbounded)


def lemma_constant(params, zeta=None):
    """Uniform bound constant ``c = ceil(-3 / log p_max)`` on ``max_u R_u / (log L)^{1/d}``.

    ``p_max`` bounds the largest single-value probability over the window.
    """
    zeta = params.zeta if zeta is None else zeta
    a_star = params.beta * (params.dispersion.sup(zeta) + params.mu)
    if params.statistics is Statistics.BOSE:
        log_pmax = math.log1p(-math.exp(-a_star))
    else:
        log_pmax = max(-math.log1p(math.exp(-a_star)),
                       -math.log1p(math.exp(params.beta * params.mu)))
    if log_pmax == 0.0:
        return math.inf
    return math.ceil(-3.0 / log_pmax)


def match_lengths(array, window, method="auto"):
    if method == "auto":
        method = "1d" if window.dim == 1 else "hashed"
    fn = {"1d": match_lengths_1d, "hashed": match_lengths_hashed,
          "brute": match_lengths_brute}[method]
    return fn(array, window)


def compute_match_lengths(params, seed, zeta=None, method="auto", margin=None,
                          max_doublings=6, tail_tol=1e-12):
    """Sample the model around its window and compute a fully decided field.

    The initial margin is ``4 ceil(c log L)`` (``c`` from :func:`lemma_constant`)
    capped at the window side; it doubles while any anchor stays saturated.
    Returns ``(field, array)``; the field may still report saturation if
    ``max_doublings`` is exhausted.
    """
    window = window_box(params, zeta)
    W = window.shape[0]
    if margin is None:
        c = lemma_constant(params, zeta)
        margin = W if math.isinf(c) else int(min(4 * math.ceil(c * math.log(params.L)), W))
    margin = max(int(margin), 1)
    for attempt in range(max_doublings + 1):
        region = Box(window.lo, tuple(s + margin for s in window.shape))
        array = sample_array(params, region, seed)
        field = classify_unbounded(match_lengths(array, window, method), array, params, tail_tol)
        if field.saturation_count == 0 or attempt == max_doublings:
            return field, array
        margin *= 2
    return field, array


def uniform_bound_report(field, params, zeta=None):
    """Compare match lengths with ``c (log L)^{1/d}``.

    Unbounded anchors (R = inf) exceed any finite bound and count as
    violations; ``finite_violations`` counts only the finite excesses.
    """
    c = lemma_constant(params, zeta)
    bound = c * math.log(params.L) ** (1.0 / params.dim)
    finite = field.lengths[field.finite]
    unbounded = int(field.unbounded.sum())
    max_finite = int(finite.max()) if finite.size else 0
    over = int((finite > bound).sum())
    return {"max_R": math.inf if unbounded else max_finite, "max_finite_R": max_finite,
            "bound": bound, "c": c, "violations": over + unbounded,
            "finite_violations": over, "unbounded": unbounded,
            "saturated": field.saturation_count}


# -- return times and truncation ------------------------------------------------

def return_time(array, n, i, reversed=False):
    """Distance to the next (or previous) occurrence of the length-``n`` block at site ``i``.

    Scans only the sampled buffer; returns :data:`NO_RETURN` when no
    recurrence is found there (which includes scans cut short by the buffer end).
    """
    if array.dim != 1:
        raise ValueError("return times are defined for one-dimensional arrays")
    vals = array.values
    start = i - array.origin[0]
    if start < 0 or start + n > len(vals):
        raise CoverageError(f"block at {i} of length {n} is outside the sampled buffer")
    blocks = sliding_window_view(vals, n)
    hits = np.flatnonzero(np.all(blocks == vals[start:start + n], axis=1))
    if reversed:
        earlier = hits[hits < start]
        return int(start - earlier[-1]) if earlier.size else NO_RETURN
    later = hits[hits > start]
    return int(later[0] - start) if later.size else NO_RETURN


def truncate(array, m):
    """Site-wise ``min(k, m)``."""
    if m < 1:
        raise ValueError("truncation level must be positive")
    return OccupationArray(array.origin, np.minimum(array.values, m), array.statistics,
                           array.seed, array.params_digest, array.L, array.zeta)

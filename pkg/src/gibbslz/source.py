"""Ideal Bose/Fermi Gibbs source: the product law over occupation arrays.

Mode ``n`` in Z^d has energy ``theta(|n|/L)`` and, in the grand-canonical
ensemble at inverse temperature ``beta`` and chemical potential ``mu``, an
occupation number that is geometric (bosons) or two-point (fermions) with
parameter ``q_n = exp(-beta*(theta(|n|/L) + mu))``. Sites are independent.

Everything is written in terms of the exponent ``a = beta*(theta + mu)``
so that tiny and huge ``q`` stay accurate.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .philox import site_uniforms


class InvalidModelError(ValueError):
    pass


class CoverageError(ValueError):
    pass


class Statistics(str, Enum):
    BOSE = "bose"
    FERMI = "fermi"


@dataclass(frozen=True)
class Dispersion:
    """One-particle energy profile ``theta: [0, inf) -> [0, inf)``.

    ``kind="quadratic"`` is the periodic-box Laplacian, ``theta(t) = 4 pi^2 t^2``.
    ``kind="tabulated"`` interpolates ``table`` (sorted ``(t, theta)`` pairs
    starting at ``t = 0``) linearly, extrapolating the last segment.
    """

    kind: str = "quadratic"
    table: tuple = ()

    def __post_init__(self):
        if self.kind == "quadratic":
            if self.table:
                raise InvalidModelError("quadratic dispersion takes no table")
            return
        if self.kind != "tabulated":
            raise InvalidModelError(f"unknown dispersion kind {self.kind!r}")
        table = tuple((float(t), float(v)) for t, v in self.table)
        object.__setattr__(self, "table", table)
        if len(table) < 2:
            raise InvalidModelError("tabulated dispersion needs at least two points")
        ts = np.array([t for t, _ in table])
        vs = np.array([v for _, v in table])
        if ts[0] != 0.0 or np.any(np.diff(ts) <= 0):
            raise InvalidModelError("table abscissae must increase strictly from 0")
        if not np.all(np.isfinite(vs)) or np.any(vs < 0):
            raise InvalidModelError("table values must be finite and nonnegative")
        if np.any(vs[1:] <= 0):
            raise InvalidModelError("theta(x) must be positive for x > 0")
        if vs[-1] < vs[-2]:
            raise InvalidModelError("last table segment must be non-decreasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "quadratic":
            return 4.0 * math.pi**2 * t * t
        ts = np.array([p[0] for p in self.table])
        vs = np.array([p[1] for p in self.table])
        out = np.interp(t, ts, vs)
        slope = (vs[-1] - vs[-2]) / (ts[-1] - ts[-2])
        beyond = t > ts[-1]
        return np.where(beyond, vs[-1] + slope * (t - ts[-1]), out)

    def sup(self, upper):
        """sup of theta over [0, upper]."""
        if self.kind == "quadratic":
            return 4.0 * math.pi**2 * upper * upper
        ts = [p[0] for p in self.table if p[0] < upper]
        return float(np.max(self(np.array(ts + [upper]))))


QUADRATIC = Dispersion()


@dataclass(frozen=True)
class ModelParams:
    statistics: Statistics
    beta: float
    mu: float
    dim: int = 1
    dispersion: Dispersion = field(default=QUADRATIC)
    L: int = 1024
    zeta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics(self.statistics))
        errors = validation_errors(self)
        if errors:
            raise InvalidModelError("; ".join(errors))

    @property
    def digest(self):
        text = repr((self.statistics.value, float(self.beta), float(self.mu), int(self.dim),
                     self.dispersion.kind, self.dispersion.table, int(self.L), float(self.zeta)))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def replace(self, **changes):
        fields = dict(statistics=self.statistics, beta=self.beta, mu=self.mu, dim=self.dim,
                      dispersion=self.dispersion, L=self.L, zeta=self.zeta)
        fields.update(changes)
        return ModelParams(**fields)


def validation_errors(params):
    """All constraint violations of a parameter set, as messages."""
    errors = []
    if not params.beta > 0:
        errors.append(f"beta must be positive (got {params.beta})")
    if params.statistics is Statistics.BOSE and not params.mu > 0:
        errors.append(f"bosons require mu > 0 (got mu={params.mu})")
    if not (isinstance(params.dim, (int, np.integer)) and params.dim >= 1):
        errors.append(f"dim must be a positive integer (got {params.dim})")
    if not (isinstance(params.L, (int, np.integer)) and params.L >= 2):
        errors.append(f"L must be an integer >= 2 (got {params.L})")
    if not params.zeta > 0:
        errors.append(f"zeta must be positive (got {params.zeta})")
    return errors


@dataclass(frozen=True)
class Box:
    """Integer box ``lo <= n < lo + shape`` in Z^d."""

    lo: tuple
    shape: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(x) for x in self.lo))
        object.__setattr__(self, "shape", tuple(int(x) for x in self.shape))
        if len(self.lo) != len(self.shape):
            raise ValueError("lo and shape must have the same length")
        if any(s < 0 for s in self.shape):
            raise ValueError("negative box extent")

    @classmethod
    def cube(cls, corner, side, dim):
        return cls((corner,) * dim, (side,) * dim)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def hi(self):
        return tuple(a + s for a, s in zip(self.lo, self.shape))

    @property
    def size(self):
        return int(np.prod(self.shape)) if self.shape else 0

    def contains(self, other):
        return all(a <= b and b + t <= a + s
                   for a, s, b, t in zip(self.lo, self.shape, other.lo, other.shape))

    def coords(self):
        """Row-major ``(size, d)`` array of the sites in the box."""
        axes = [np.arange(a, a + s, dtype=np.int64) for a, s in zip(self.lo, self.shape)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def slices(self, inner):
        """Index slices selecting ``inner`` inside an array laid out over ``self``."""
        return tuple(slice(b - a, b - a + t) for a, b, t in zip(self.lo, inner.lo, inner.shape))

    def first_missing(self, inner):
        """First site of ``inner`` (row-major) not in ``self``, or None."""
        if self.contains(inner) or inner.size == 0:
            return None
        for site in itertools.product(*(range(b, b + t) for b, t in zip(inner.lo, inner.shape))):
            if not all(a <= x < a + s for a, s, x in zip(self.lo, self.shape, site)):
                return site
        return None


def window_box(params, zeta=None):
    """Observation window B(1, ceil(zeta L)) of the model."""
    zeta = params.zeta if zeta is None else zeta
    return Box.cube(1, math.ceil(zeta * params.L - 1e-9), params.dim)


# -- per-site laws -----------------------------------------------------------

def exponent(params, coords):
    """``beta*(theta(|n|/L) + mu)`` for an ``(N, d)`` array of sites (or a single site)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    radius = np.sqrt(np.sum(coords * coords, axis=-1)) / params.L
    return params.beta * (params.dispersion(radius) + params.mu)


def _check_bose(stats, a):
    if stats is Statistics.BOSE and np.any(np.asarray(a) <= 0):
        raise InvalidModelError("degenerate geometric law: beta*(theta + mu) <= 0")


def entropy_from_exponent(stats, a):
    """Shannon entropy (nats) of the per-site law with exponent ``a``."""
    a = np.asarray(a, dtype=float)
    _check_bose(stats, a)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if stats is Statistics.BOSE:
            h = -np.log1p(-np.exp(-a)) + a / np.expm1(a)
            # a/expm1(a) -> 0 cleanly, but inf/inf can appear for a = inf
            h = np.where(np.isinf(a), 0.0, h)
        else:
            b = np.abs(a)  # binary entropy is symmetric in the exponent
            h = np.log1p(np.exp(-b)) + b / (np.exp(b) + 1.0)
            h = np.where(np.isinf(b), 0.0, h)
    return h


def mean_from_exponent(stats, a):
    a = np.asarray(a, dtype=float)
    _check_bose(stats, a)
    with np.errstate(over="ignore"):
        if stats is Statistics.BOSE:
            return 1.0 / np.expm1(a)
        return 1.0 / (np.exp(a) + 1.0)


def log_partition_from_exponent(stats, a):
    """Per-site log normaliser: ``-log(1-q)`` (Bose) or ``log(1+q)`` (Fermi)."""
    a = np.asarray(a, dtype=float)
    _check_bose(stats, a)
    with np.errstate(over="ignore"):
        if stats is Statistics.BOSE:
            return -np.log1p(-np.exp(-a))
        return np.logaddexp(0.0, -a)


def nonzero_prob_from_exponent(stats, a):
    """Probability that the site is occupied at all."""
    a = np.asarray(a, dtype=float)
    if stats is Statistics.BOSE:
        return np.exp(-a)
    with np.errstate(over="ignore"):
        return 1.0 / (np.exp(a) + 1.0)


def site_parameter(params, n):
    """``q = exp(-beta*(theta(|n|/L) + mu))``. For fermions with mu < 0 this may exceed 1."""
    a = exponent(params, n)
    _check_bose(params.statistics, a)
    return float(np.exp(-a[0]))


def site_entropy(params, n):
    return float(entropy_from_exponent(params.statistics, exponent(params, n))[0])


def site_mean(params, n):
    return float(mean_from_exponent(params.statistics, exponent(params, n))[0])


# -- arrays ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OccupationArray:
    """Occupation numbers sampled over a box, with their provenance."""

    origin: tuple
    values: np.ndarray
    statistics: Statistics
    seed: int
    params_digest: str
    L: int
    zeta: float

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def dim(self):
        return self.values.ndim

    @property
    def extent(self):
        return self.values.shape

    @property
    def box(self):
        return Box(self.origin, self.extent)

    def restrict(self, region):
        """Values over ``region``; raises CoverageError if not covered."""
        missing = self.box.first_missing(region)
        if missing is not None:
            raise CoverageError(f"site {missing} is outside the sampled box {self.box}")
        return self.values[self.box.slices(region)]

    def __eq__(self, other):
        if not isinstance(other, OccupationArray):
            return NotImplemented
        return (self.origin == other.origin and self.statistics == other.statistics
                and self.seed == other.seed and self.params_digest == other.params_digest
                and np.array_equal(self.values, other.values))

    def to_text(self):
        """Header ``d L zeta statistics seed origin... extent...`` then rows of integers."""
        head = [self.dim, self.L, repr(float(self.zeta)), self.statistics.value, self.seed,
                *self.origin, *self.extent]
        lines = [" ".join(str(x) for x in head)]
        rows = self.values.reshape(-1, self.extent[-1])
        lines.extend(" ".join(map(str, row)) for row in rows.tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, params_digest=""):
        lines = text.strip().splitlines()
        head = lines[0].split()
        d = int(head[0])
        origin = tuple(int(x) for x in head[5:5 + d])
        extent = tuple(int(x) for x in head[5 + d:5 + 2 * d])
        values = np.array([[int(x) for x in ln.split()] for ln in lines[1:]], dtype=np.int64)
        return cls(origin, values.reshape(extent), Statistics(head[3]), int(head[4]),
                   params_digest, int(head[1]), float(head[2]))


def sample_array(params, region, seed):
    """Draw every site of ``region`` independently from its per-site law.

    Uniforms come from a Philox counter keyed on ``(seed, site)``, so any two
    regions agree on the sites they share. Bosons use geometric inversion
    ``floor(log(1-U)/log q)``; fermions are occupied iff ``U < q/(1+q)``.
    """
    if region.size == 0:
        raise ValueError("empty sampling region")
    if region.dim != params.dim:
        raise ValueError(f"region has dimension {region.dim}, model has {params.dim}")
    coords = region.coords()
    a = exponent(params, coords)
    _check_bose(params.statistics, a)
    u = site_uniforms(seed, coords)
    if params.statistics is Statistics.BOSE:
        # log q = -a exactly, no round trip through q
        k = np.floor(-np.log1p(-u) / a)
        values = np.minimum(k, np.iinfo(np.int64).max // 2).astype(np.int64)
    else:
        values = (u < nonzero_prob_from_exponent(params.statistics, a)).astype(np.int64)
    return OccupationArray(region.lo, values.reshape(region.shape), params.statistics,
                           int(seed), params.digest, params.L, params.zeta)


def log_weight(params, array, region):
    """log of the (unnormalised) eigenvalue: ``-beta * sum k_n (mu + theta(|n|/L))`` over region."""
    k = array.restrict(region).ravel()
    if not np.any(k):
        return 0.0
    a = exponent(params, region.coords())
    return float(-np.dot(k.astype(float), a))


def aep_region(params, tail_tol=1e-12):
    """Smallest centred cube ``[-R, R]^d`` outside which every site has entropy < tail_tol.

    Sup-norm shells are scanned outward; the first shell whose sites all fall
    below ``tail_tol`` ends the scan.
    """
    d = params.dim
    limit = 100 * params.L + 1000
    if d == 1:
        # shell j is {-j, j}; both sites have the same norm
        for start in range(1, limit, 4096):
            j = np.arange(start, start + 4096)
            h = entropy_from_exponent(params.statistics, exponent(params, j[:, None]))
            below = np.flatnonzero(h < tail_tol)
            if below.size:
                radius = int(j[below[0]]) - 1
                return Box.cube(-radius, 2 * radius + 1, 1)
    else:
        for j in range(1, limit):
            shell = Box.cube(-j, 2 * j + 1, d).coords()
            shell = shell[np.max(np.abs(shell), axis=1) == j]
            h = entropy_from_exponent(params.statistics, exponent(params, shell))
            if np.max(h) < tail_tol:
                return Box.cube(-(j - 1), 2 * j - 1, d)
    raise InvalidModelError("per-site entropy does not decay; cannot truncate")


def aep_statistic(params, array, tail_tol=1e-12, region=None):
    """Per-volume negative log-probability of the realised array.

    ``(1/L^d) * (-log lambda + log Xi)`` over the truncated site set of
    :func:`aep_region`; its expectation is the Riemann entropy of that set.
    """
    if region is None:
        region = aep_region(params, tail_tol)
    k = array.restrict(region).ravel().astype(float)
    a = exponent(params, region.coords())
    logz = log_partition_from_exponent(params.statistics, a)
    return float((np.dot(k, a) + logz.sum()) / params.L**params.dim)

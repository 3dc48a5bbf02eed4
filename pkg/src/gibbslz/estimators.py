"""Entropy estimators built from sampled arrays, and convergence runs."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from enum import Enum

import numpy as np

from . import entropy as ent
from .lzparse import lz_entropy_estimate, lz_parse
from .matchlen import SaturationError, compute_match_lengths
from .source import (
    Statistics,
    aep_region,
    aep_statistic,
    entropy_from_exponent,
    exponent,
    nonzero_prob_from_exponent,
    sample_array,
    window_box,
)

MAX_MODE_BUDGET = 22


class Estimator(str, Enum):
    GRASSBERGER = "Grassberger"
    GROWING_ZETA = "GrassbergerGrowingZeta"
    LZ = "LZ"
    RECIPROCAL = "Reciprocal"
    AEP = "AEP"
    EIGENCOUNT = "EigenCount"


@dataclass(frozen=True)
class EstimateReport:
    estimator: Estimator
    statistics: str
    d: int
    beta: float
    mu: float
    zeta: float
    L: int
    seed: int
    value: float
    target: float
    rel_error: float
    saturation_count: int = 0
    wall_time: float | None = None
    target_kind: str = ""
    status: str = "ok"


CSV_COLUMNS = [f.name for f in fields(EstimateReport)]


def format_value(x):
    """Canonical text for a report field, shared by the CSV and the summary."""
    if x is None:
        return ""
    if isinstance(x, Enum):
        return x.value
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def reports_to_csv(reports, timing=False):
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        row = asdict(r)
        if not timing:
            row["wall_time"] = None
        lines.append(",".join(format_value(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def relative_error(value, target):
    if not target > 0 or not math.isfinite(value):
        return math.nan
    return abs(value - target) / target


def grassberger_estimate(field, L, zeta, d, literal=False):
    """Match-length entropy estimate summed over the window.

    Default: ``sum_u log(L^d) / (L R_u)^d``. ``literal=True`` gives
    ``sum_u log L / (zeta L R_u)^d``; the two coincide for d = 1, zeta = 1.
    Unbounded anchors contribute zero.
    """
    if field.saturation_count:
        raise SaturationError(f"{field.saturation_count} anchors are saturated; enlarge the margin")
    R = field.lengths[field.finite].astype(float)
    if literal:
        return math.fsum(math.log(L) / (zeta * L * R) ** d)
    return math.fsum(d * math.log(L) / (L * R) ** d)


def reciprocal_estimate(field, L, d):
    """``sum_u R_u / (L^d log L)`` over anchors with finite match length."""
    if field.saturation_count:
        raise SaturationError(f"{field.saturation_count} anchors are saturated; enlarge the margin")
    return float(field.lengths[field.finite].sum()) / (L**d * math.log(L))


# -- eigenvalue counting --------------------------------------------------------

def _occupation_probs(params, mode_budget):
    window = window_box(params, 1.0)
    coords = window.coords()
    a = exponent(params, coords)
    h = entropy_from_exponent(params.statistics, a)
    top = np.argsort(-h, kind="stable")[:mode_budget]
    return nonzero_prob_from_exponent(params.statistics, a[top])


def _count_from_sorted(desc, epsilon):
    tail = np.cumsum(desc[::-1])[::-1]  # tail[k] = mass of eigenvalues k, k+1, ...
    tail = np.append(tail, 0.0)
    return int(np.flatnonzero(tail <= epsilon)[0]) if desc.size else 0


def eigencount(probs, epsilon, order="weights"):
    """Number of largest eigenvalues needed to collect mass ``1 - epsilon``.

    ``probs`` are per-mode occupation probabilities of independent two-state
    modes. ``order="weights"`` builds the spectrum as a product and sorts the
    weights; ``order="log"`` sums log-weights, sorts those, and exponentiates.
    """
    probs = np.asarray(probs, dtype=float)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if probs.size > MAX_MODE_BUDGET:
        raise ValueError(f"mode budget {probs.size} exceeds {MAX_MODE_BUDGET}")
    if order == "weights":
        w = np.ones(1)
        for p in probs:
            w = np.concatenate([w * (1.0 - p), w * p])
        desc = np.sort(w)[::-1]
    elif order == "log":
        logw = np.zeros(1)
        for lp, lq in zip(np.log(probs), np.log1p(-probs)):
            logw = np.concatenate([logw + lq, logw + lp])
        desc = np.exp(np.sort(logw)[::-1])
    else:
        raise ValueError(f"unknown order {order!r}")
    return _count_from_sorted(desc, epsilon)


def eigencount_oracle(params, mode_budget, epsilon, order="weights"):
    """``(1/L^d) log M`` for the ``mode_budget`` highest-entropy modes in B(1, L)."""
    if params.statistics is not Statistics.FERMI:
        raise ValueError("eigenvalue counting is only available for fermions")
    if mode_budget > MAX_MODE_BUDGET:
        raise ValueError(f"mode budget {mode_budget} exceeds {MAX_MODE_BUDGET}")
    M = eigencount(_occupation_probs(params, mode_budget), epsilon, order)
    return math.log(M) / params.L**params.dim


# -- convergence runs ---------------------------------------------------------------

def growing_zeta(L):
    """Window factor ``sqrt(log L)``: grows without bound, ``zeta / log L -> 0``."""
    return math.sqrt(math.log(L))


class _Targets:
    """Memoised exact entropies per model."""

    def __init__(self, quad_tol):
        self.quad_tol = quad_tol
        self.cache = {}

    def box(self, params, zeta):
        key = ("box", params.replace(L=2, zeta=1.0).digest, float(zeta))
        if key not in self.cache:
            self.cache[key] = ent.vn_entropy_box(params, zeta, self.quad_tol).value
        return self.cache[key]

    def full(self, params):
        key = ("full", params.replace(L=2, zeta=1.0).digest)
        if key not in self.cache:
            self.cache[key] = ent.vn_entropy_full(params, self.quad_tol).value
        return self.cache[key]


def _report(estimator, params, seed, value, target, target_kind, saturation=0,
            wall=None, status="ok"):
    return EstimateReport(Estimator(estimator), params.statistics.value, params.dim,
                          float(params.beta), float(params.mu), float(params.zeta),
                          int(params.L), int(seed), float(value), float(target),
                          relative_error(value, target), int(saturation), wall,
                          target_kind, status)


def run_cell(params, seed, estimator_set, targets, tail_tol=1e-12, mode_budget=16,
             epsilon=0.1, literal=False, method="auto"):
    """All requested estimators for one (model, seed) cell."""
    out = []
    estimator_set = [Estimator(e) for e in estimator_set]
    ms_needed = {Estimator.GRASSBERGER, Estimator.RECIPROCAL} & set(estimator_set)
    field = None
    if ms_needed:
        t0 = time.perf_counter()
        field, _ = compute_match_lengths(params, seed, method=method, tail_tol=tail_tol)
        ms_time = time.perf_counter() - t0
    d, L, zeta = params.dim, params.L, params.zeta
    for est in estimator_set:
        t0 = time.perf_counter()
        try:
            if est is Estimator.GRASSBERGER:
                value = grassberger_estimate(field, L, zeta, d, literal)
                tgt, kind = targets.box(params, zeta), "Box"
                sat, extra = field.saturation_count, ms_time
            elif est is Estimator.RECIPROCAL:
                value = 1.0 / reciprocal_estimate(field, L, d)
                tgt, kind = targets.box(params, zeta), "Box"
                sat, extra = field.saturation_count, ms_time
            elif est is Estimator.GROWING_ZETA:
                p = params.replace(zeta=growing_zeta(L))
                f, _ = compute_match_lengths(p, seed, method=method, tail_tol=tail_tol)
                value = grassberger_estimate(f, L, p.zeta, d, literal)
                tgt, kind = targets.full(params), "FullSpace"
                sat, extra = f.saturation_count, 0.0
                params_used = p
            elif est is Estimator.LZ:
                if d != 1:
                    raise ValueError("LZ parsing is one-dimensional")
                arr = sample_array(params, window_box(params), seed)
                value = lz_entropy_estimate(lz_parse(arr.values), L, zeta)
                tgt, kind = targets.box(params, zeta), "Box"
                sat, extra = 0, 0.0
            elif est is Estimator.AEP:
                region = aep_region(params, tail_tol)
                arr = sample_array(params, region, seed)
                value = aep_statistic(params, arr, tail_tol, region)
                tgt, kind = targets.full(params), "FullSpace"
                sat, extra = 0, 0.0
            elif est is Estimator.EIGENCOUNT:
                value = eigencount_oracle(params, mode_budget, epsilon)
                tgt, kind = targets.full(params), "FullSpace"
                sat, extra = 0, 0.0
            wall = time.perf_counter() - t0 + extra
            used = params_used if est is Estimator.GROWING_ZETA else params
            out.append(_report(est, used, seed, value, tgt, kind, sat, wall))
        except Exception as exc:  # per-cell failure is recorded, the run goes on
            out.append(_report(est, params, seed, math.nan, math.nan, "", 0, None,
                               f"error: {type(exc).__name__}: {exc}".replace(",", ";")))
    return out


def _threads():
    try:
        return max(1, int(os.environ.get("GIBBSLZ_THREADS", "1")))
    except ValueError:
        return 1


def run_convergence(params_grid, seeds, estimator_set, tail_tol=1e-12, quad_tol=1e-9,
                    mode_budget=16, epsilon=0.1, literal=False, method="auto"):
    """Evaluate every estimator on every (model, seed) cell.

    Reports come back sorted by (estimator, L, seed) regardless of the
    number of worker threads (``GIBBSLZ_THREADS``).
    """
    targets = _Targets(quad_tol)
    cells = [(p, s) for p in params_grid for s in seeds]

    def work(cell):
        return run_cell(cell[0], cell[1], estimator_set, targets, tail_tol,
                        mode_budget, epsilon, literal, method)

    n = _threads()
    if n == 1:
        results = [work(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(work, cells))
    reports = [r for batch in results for r in batch]
    order = {e: i for i, e in enumerate(Estimator)}
    return sorted(reports, key=lambda r: (order[r.estimator], r.L, r.seed, r.statistics, r.d))


def median_rel_errors(reports, estimator):
    """``{L: relative error of the median value over seeds}`` for one estimator."""
    by_L = {}
    for r in reports:
        if r.estimator == Estimator(estimator) and r.status == "ok":
            by_L.setdefault(r.L, []).append((r.value, r.target))
    return {L: relative_error(float(np.median([v for v, _ in rows])), rows[0][1])
            for L, rows in sorted(by_L.items())}

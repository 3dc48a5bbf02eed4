"""Acceptance checks, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (collected into the pytest
terminal summary by ``conftest.py``) and then asserts the same condition.
Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""

import math
import time

import numpy as np
import pytest

from gibbslz.cli import main as cli_main
from gibbslz.entropy import integrand, riemann_entropy, vn_entropy_box, vn_entropy_full
from gibbslz.estimators import eigencount_oracle, grassberger_estimate, growing_zeta
from gibbslz.lzparse import decode, encode, lz_entropy_estimate, lz_parse
from gibbslz.matchlen import (
    compute_match_lengths,
    match_lengths_1d,
    match_lengths_brute,
    match_lengths_hashed,
    uniform_bound_report,
)
from gibbslz.source import (
    Box,
    ModelParams,
    OccupationArray,
    Statistics,
    aep_region,
    aep_statistic,
    entropy_from_exponent,
    sample_array,
    window_box,
)

RESULTS = {}

BOSE = ModelParams("bose", 1.0, 1.0)
FERMI = ModelParams("fermi", 1.0, 0.0)
BIG_GRID = (2**12, 2**14, 2**16, 2**18)
TREND_SEEDS = range(30)


def record(n, title, ok, detail):
    line = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def strictly_decreasing(xs):
    return all(a > b for a, b in zip(xs, xs[1:]))


def fmt(xs):
    return "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"


# shared sweep: match-length fields and LZ parses for the fixed-window benchmarks
_SWEEP = {}


def benchmark_sweep(params):
    key = params.statistics.value
    if key not in _SWEEP:
        t0 = time.perf_counter()
        gr, lz = {}, {}
        for L in BIG_GRID:
            p = params.replace(L=L)
            gr[L], lz[L] = [], []
            for s in TREND_SEEDS:
                f, arr = compute_match_lengths(p, s)
                gr[L].append(grassberger_estimate(f, L, 1.0, 1))
                lz[L].append(lz_entropy_estimate(lz_parse(arr.restrict(f.window)), L, 1.0))
        _SWEEP[key] = (gr, lz, time.perf_counter() - t0)
    return _SWEEP[key]


def median_errors(values, target):
    return [abs(float(np.median(values[L])) - target) / target for L in sorted(values)]


# -- 1 ----------------------------------------------------------------------------------

def direct_entropy(stats, q):
    if stats is Statistics.FERMI:
        p = np.array([1 / (1 + q), q / (1 + q)])
        return -math.fsum(p * np.log(p))
    terms, k = [], 0
    while True:
        p = (1 - q) * q**k
        if p < 1e-15 and k > 0:
            return math.fsum(terms)
        terms.append(-p * math.log(p))
        k += 1


def test_01_site_entropy_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for stats, hi in ((Statistics.FERMI, 1 - 1e-6), (Statistics.BOSE, 0.99)):
        qs = np.geomspace(1e-6, hi, 50)
        closed = entropy_from_exponent(stats, -np.log(qs))
        for q, h in zip(qs, closed):
            worst = max(worst, abs(h - direct_entropy(stats, q)))
    dt = time.perf_counter() - t0
    record(1, "per-site entropy vs direct summation", worst < 1e-10 and dt < 1.0,
           f"max abs diff {worst:.2e} (< 1e-10), {dt:.2f} s (< 1 s)")


# -- 2 ----------------------------------------------------------------------------------

def midpoint(params, lo, hi, step=1e-4):
    x = np.arange(lo + step / 2, hi, step)
    return math.fsum(integrand(params, x[:, None]) * step)


def test_02_quadrature_against_dense_midpoint():
    t0 = time.perf_counter()
    box = vn_entropy_box(BOSE, 1.0).value
    full = vn_entropy_full(BOSE).value
    r = 0.0
    while integrand(BOSE, [r]) >= 1e-14:
        r += 1e-3
    box_ref = midpoint(BOSE, 0.0, 1.0)
    full_ref = 2 * midpoint(BOSE, 0.0, r)
    e_box, e_full = abs(box - box_ref) / box_ref, abs(full - full_ref) / full_ref
    dt = time.perf_counter() - t0
    record(2, "quadrature vs midpoint oracle", max(e_box, e_full) < 1e-6 and dt < 10,
           f"box rel {e_box:.1e}, full rel {e_full:.1e} (< 1e-6), {dt:.2f} s (< 10 s)")


# -- 3 ----------------------------------------------------------------------------------

def test_03_riemann_sum_convergence():
    target = vn_entropy_box(BOSE, 1.0).value
    errs = []
    for L in (1024, 2048, 4096):
        p = BOSE.replace(L=L)
        errs.append(abs(riemann_entropy(p, window_box(p)).value - target) / target)
    record(3, "Riemann sum convergence", errs[-1] < 1e-3 and strictly_decreasing(errs),
           f"rel errors {fmt(errs)} at L=1024,2048,4096")


# -- 4 ----------------------------------------------------------------------------------

def test_04_match_length_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    mismatches, n1, n2 = 0, 0, 0
    for stats in ("bose", "fermi"):
        for _ in range(200):
            L = int(rng.integers(8, 513))
            beta = float(rng.uniform(0.02, 1.0))
            mu = float(rng.uniform(0.02, 1.0)) if stats == "bose" else float(rng.uniform(-3, 1))
            p = ModelParams(stats, beta, mu, L=L)
            margin = int(rng.integers(4, 65))
            arr = sample_array(p, Box((1,), (L + margin,)), int(rng.integers(2**62)))
            w = window_box(p)
            ok = match_lengths_1d(arr, w).same_lengths(match_lengths_brute(arr, w))
            mismatches += not ok
            n1 += 1
    for k in range(50):
        w = int(rng.integers(4, 33))
        margin = int(rng.integers(2, 17))
        if k < 6:
            vals = np.full((w + margin, w + margin), k % 3, dtype=np.int64)
            if k % 2:   # constant window, distinct margin
                vals[w:, :] = 10 + np.arange(margin * (w + margin)).reshape(margin, -1)
                vals[:, w:] = 10**6 + np.arange((w + margin) * margin).reshape(-1, margin)
            arr = OccupationArray((1, 1), vals, Statistics.FERMI, 0, "", w, 1.0)
        else:
            p = ModelParams("fermi", float(rng.uniform(0.01, 1)), float(rng.uniform(-2, 1)),
                            dim=2, L=w)
            arr = sample_array(p, Box((1, 1), (w + margin, w + margin)), int(rng.integers(2**62)))
        win = Box((1, 1), (w, w))
        ok = match_lengths_hashed(arr, win).same_lengths(match_lengths_brute(arr, win))
        mismatches += not ok
        n2 += 1
    dt = time.perf_counter() - t0
    record(4, "match-length routes agree with brute force", mismatches == 0 and dt < 60,
           f"{n1} 1D + {n2} 2D arrays, {mismatches} mismatches, {dt:.1f} s (< 60 s)")


# -- 5 ----------------------------------------------------------------------------------

def test_05_grassberger_fixed_window():
    ok, parts, total = True, [], 0.0
    for params in (BOSE, FERMI):
        gr, _, dt = benchmark_sweep(params)
        errs = median_errors(gr, vn_entropy_box(params, 1.0).value)
        ok &= strictly_decreasing(errs) and errs[-1] < 0.25
        parts.append(f"{params.statistics.value} {fmt(errs)}")
        total += dt
    record(5, "Grassberger, fixed window", ok and total < 600,
           f"median rel errors at L=2^12..2^18 over {len(TREND_SEEDS)} seeds: "
           f"{'; '.join(parts)} (last < 0.25), {total:.0f} s (< 600 s)")


# -- 6 ----------------------------------------------------------------------------------

def test_06_lz_word_count():
    ok, parts = True, []
    for params in (BOSE, FERMI):
        _, lz, _ = benchmark_sweep(params)
        errs = median_errors(lz, vn_entropy_box(params, 1.0).value)
        ok &= strictly_decreasing(errs) and errs[-1] < 0.25
        parts.append(f"{params.statistics.value} {fmt(errs)}")
    record(6, "LZ word-count estimate", ok,
           f"median rel errors at L=2^12..2^18: {'; '.join(parts)} (last must be < 0.25)")


# -- 7 ----------------------------------------------------------------------------------

def test_07_growing_window():
    full = vn_entropy_full(BOSE).value
    errs, meds = [], []
    for L in (2**14, 2**16, 2**18):
        p = BOSE.replace(L=L, zeta=growing_zeta(L))
        vals = [grassberger_estimate(compute_match_lengths(p, s)[0], L, p.zeta, 1)
                for s in range(5)]
        meds.append(float(np.median(vals)))
        errs.append(abs(meds[-1] - full) / full)
    record(7, "growing window vs full-space entropy", strictly_decreasing(errs),
           f"medians {fmt(meds)} vs full {full:.4g} (one-orthant share {full / 2:.4g}); rel errors {fmt(errs)} must decrease")


# -- 8 ----------------------------------------------------------------------------------

def aep_values(L, seeds):
    p = BOSE.replace(L=L)
    region = aep_region(p)
    vals = [aep_statistic(p, sample_array(p, region, s), region=region) for s in seeds]
    return np.array(vals), riemann_entropy(p, region).value


def test_08_aep_concentration():
    vals, expect = aep_values(4096, range(100))
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    z = abs(vals.mean() - expect) / se
    sd_small = aep_values(1024, range(100))[0].std(ddof=1)
    sd_big = aep_values(8192, range(100))[0].std(ddof=1)
    record(8, "AEP statistic", z < 3 and sd_big < sd_small,
           f"|mean - riemann| = {z:.2f} SE (< 3); sd {sd_small:.3g} at L=1024, "
           f"{sd_big:.3g} at L=8192")


# -- 9 ----------------------------------------------------------------------------------

def test_09_uniform_match_length_bound():
    violations, unbounded, worst = 0, 0, 0.0
    for L in (2**12, 2**14, 2**16):
        p = BOSE.replace(L=L)
        for s in range(20):
            f, _ = compute_match_lengths(p, s)
            rep = uniform_bound_report(f, p)
            violations += rep["violations"]
            unbounded += rep["unbounded"]
            worst = max(worst, rep["max_finite_R"] / rep["bound"])
    record(9, "max R_u <= c log L", violations == 0,
           f"{violations} violations over 60 fields; {unbounded} of them are anchors with "
           f"R = inf (empty upper orthant); largest finite R / bound = {worst:.1e}")


# -- 10 ---------------------------------------------------------------------------------

def test_10_eigenvalue_count_orders():
    disagreements, monotone = 0, True
    for L in (64, 256):
        p = FERMI.replace(L=L)
        for budget in (4, 8, 12, 16, 20):
            vals = []
            for eps in (0.5, 0.1, 0.01):
                w = eigencount_oracle(p, budget, eps, "weights")
                disagreements += w != eigencount_oracle(p, budget, eps, "log")
                vals.append(w)
            monotone &= vals[0] <= vals[1] <= vals[2]
    record(10, "eigenvalue count, two enumeration orders", disagreements == 0 and monotone,
           f"{disagreements} disagreements; M non-increasing in eps: {monotone}")


# -- 11 ---------------------------------------------------------------------------------

def test_11_lz_round_trip():
    rng = np.random.default_rng(11)
    failures = 0
    for k in range(100):
        if k % 2:
            seq = rng.integers(0, int(rng.integers(1, 6)), int(rng.integers(0, 3000))).tolist()
        else:
            p = BOSE.replace(L=int(rng.integers(16, 4096)))
            seq = sample_array(p, window_box(p), k).values.tolist()
        failures += decode(*encode(lz_parse(seq))) != seq
    record(11, "LZ decoder round trip", failures == 0, f"{failures} of 100 sequences differ")


# -- 12 ---------------------------------------------------------------------------------

def test_12_determinism(tmp_path):
    bose = ["--set", "model.statistics=bose", "--set", "model.beta=1", "--set", "model.mu=1"]
    fermi = ["--set", "model.statistics=fermi", "--set", "model.beta=1", "--set", "model.mu=0"]
    runs = {
        "sample": (bose, "samples.csv"), "entropy": (bose, "entropy.csv"),
        "matchlen": (bose, "report.csv"), "lz": (bose, "report.csv"),
        "aep": (bose, "report.csv"), "eigencount": (fermi, "report.csv"),
        "sweep": (bose, "report.csv"),
    }
    differ = []
    for exp, (model, name) in runs.items():
        outs = []
        for k in range(2):
            out = tmp_path / f"{exp}{k}"
            code = cli_main([exp, *model, "--set", "grid.L=512,2048", "--set", "seeds.count=3",
                             "--seed", "17", "--output", str(out)])
            assert code == 0
            outs.append((out / name).read_bytes())
        if outs[0] != outs[1]:
            differ.append(exp)
    record(12, "byte-identical reruns", not differ,
           f"{len(runs) - len(differ)} of {len(runs)} experiments identical {differ or ''}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))

"""Run sampling and entropy-estimation experiments from a config file.

    gibbslz <experiment> [--config FILE] [--set key=value ...] [--seed N] [--output DIR]

``<experiment>`` is one of sample, entropy, matchlen, lz, aep, eigencount,
sweep and overrides the config's ``experiment`` key. Exit status is 0 on
success, 2 when some cells failed (their rows carry an error status), 1 on
configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import tempfile

import numpy as np

from . import entropy as ent
from .config import EXPERIMENTS, ConfigError, parse_config, serialize
from .estimators import (
    Estimator,
    format_value,
    median_rel_errors,
    reports_to_csv,
    run_convergence,
)
from .lzparse import lz_parse
from .matchlen import compute_match_lengths
from .source import sample_array, window_box


def write_atomic(path, text):
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    folder = os.path.dirname(path) or "."
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _estimators(config):
    names = list(config.estimators)
    if config.zeta_rule == "sqrt-log":
        names = ["GrassbergerGrowingZeta" if n == "Grassberger" else n for n in names]
    return names


def _tag(params, seed):
    return f"{params.statistics.value}_d{params.dim}_L{params.L}_seed{seed}"


# -- experiments -------------------------------------------------------------------

def _sample_rows(config, out):
    head = "statistics,d,L,zeta,seed,sites,total_occupation,nonzero_sites,max_occupation,sha256"
    rows = [head]
    for params in config.params_grid():
        for seed in config.seeds:
            arr = sample_array(params, window_box(params), seed)
            text = arr.to_text()
            write_atomic(os.path.join(out, "arrays", _tag(params, seed) + ".txt"), text)
            v = arr.values
            rows.append(",".join([params.statistics.value, str(params.dim), str(params.L),
                                  format_value(float(params.zeta)), str(seed), str(v.size),
                                  str(int(v.sum())), str(int(np.count_nonzero(v))),
                                  str(int(v.max()) if v.size else 0),
                                  hashlib.sha256(text.encode()).hexdigest()]))
    return "\n".join(rows) + "\n", []


ENTROPY_COLUMNS = "kind,statistics,d,beta,mu,zeta,L,value,est_abs_error,status"


def _entropy_rows(config):
    rows, failures = [ENTROPY_COLUMNS], []
    p0 = config.model(config.L_grid[0])

    def row(kind, zeta, L, value, err, status="ok"):
        return ",".join([kind, p0.statistics.value, str(p0.dim), format_value(float(p0.beta)),
                         format_value(float(p0.mu)), format_value(zeta), format_value(L),
                         format_value(value), format_value(err), status])

    for kind, fn in (("FullSpace", lambda: ent.vn_entropy_full(p0, config.quad_tol)),
                     ("Box", lambda: ent.vn_entropy_box(p0, config.zeta, config.quad_tol))):
        try:
            v = fn()
            rows.append(row(kind, None if kind == "FullSpace" else float(config.zeta), None,
                            v.value, v.est_abs_error))
        except Exception as exc:
            failures.append(f"{kind}: {exc}")
            rows.append(row(kind, None, None, math.nan, None, f"error: {type(exc).__name__}"))
    for params in config.params_grid():
        v = ent.riemann_entropy(params, window_box(params))
        rows.append(row("RiemannSum", float(params.zeta), params.L, v.value, 0.0))
    return "\n".join(rows) + "\n", failures


def _dump_extras(config, out):
    """Arrays, match-length fields and parses, recomputed per cell (all deterministic)."""
    for params in config.params_grid():
        for seed in config.seeds:
            tag = _tag(params, seed)
            if config.dump_arrays:
                arr = sample_array(params, window_box(params), seed)
                write_atomic(os.path.join(out, "arrays", tag + ".txt"), arr.to_text())
            if config.dump_fields and {"Grassberger", "Reciprocal"} & set(config.estimators):
                field, _ = compute_match_lengths(params, seed, method=config.method,
                                                 tail_tol=config.tail_tol)
                write_atomic(os.path.join(out, "fields", tag + ".csv"), field.to_csv())
            if config.dump_parses and "LZ" in config.estimators and params.dim == 1:
                arr = sample_array(params, window_box(params), seed)
                write_atomic(os.path.join(out, "parses", tag + ".csv"),
                             lz_parse(arr.values).to_csv())


# -- summary -----------------------------------------------------------------------

def _bar(x, width=40, scale=1.0):
    if not math.isfinite(x):
        return "?"
    return "#" * max(0, min(width, int(round(width * x / scale))))


def summary_text(config, reports):
    lines = [f"gibbslz {config.experiment}: {config.statistics.value} d={config.dim} "
             f"beta={config.beta!r} mu={config.mu!r} zeta={config.zeta!r} ({config.zeta_rule})",
             f"seeds: {', '.join(map(str, config.seeds))}", ""]
    present = [e for e in Estimator if any(r.estimator is e for r in reports)]
    for est in present:
        rows = [r for r in reports if r.estimator is est]
        kinds = sorted({r.target_kind for r in rows if r.target_kind})
        lines.append(f"{est.value} (target: {', '.join(kinds) or 'n/a'})")
        lines.append(f"  {'L':>8}  {'seed':>6}  {'value':<24}  {'rel_error':<24}  status")
        for r in rows:
            lines.append(f"  {r.L:>8}  {r.seed:>6}  {format_value(r.value):<24}  "
                         f"{format_value(r.rel_error):<24}  {r.status}")
        med = median_rel_errors(rows, est)
        finite = [v for v in med.values() if math.isfinite(v)]
        scale = max(finite) if finite and max(finite) > 0 else 1.0
        lines.append("  convergence: L vs rel_error of the median value")
        for L, v in med.items():
            lines.append(f"  {L:>8}  {format_value(v):<24}  |{_bar(v, scale=scale)}")
        lines.append("")
    return "\n".join(lines)


# -- driver ------------------------------------------------------------------------

def run(config):
    """Execute ``config``; returns the exit status. Output goes to ``config.output_dir``."""
    out = config.output_dir
    try:
        os.makedirs(out, exist_ok=True)
        write_atomic(os.path.join(out, "config.txt"), serialize(config))
        if config.experiment == "sample":
            text, failures = _sample_rows(config, out)
            write_atomic(os.path.join(out, "samples.csv"), text)
            write_atomic(os.path.join(out, "summary.txt"), text)
            return 2 if failures else 0
        if config.experiment == "entropy":
            text, failures = _entropy_rows(config)
            write_atomic(os.path.join(out, "entropy.csv"), text)
            write_atomic(os.path.join(out, "summary.txt"), text)
            for f in failures:
                print(f"error: {f}", file=sys.stderr)
            return 2 if failures else 0
        reports = run_convergence(config.params_grid(), config.seeds, _estimators(config),
                                  config.tail_tol, config.quad_tol, config.mode_budget,
                                  config.epsilon, config.literal, config.method)
        write_atomic(os.path.join(out, "report.csv"), reports_to_csv(reports, config.timing))
        _dump_extras(config, out)
        write_atomic(os.path.join(out, "summary.txt"), summary_text(config, reports))
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    failed = [r for r in reports if r.status != "ok"]
    for r in failed:
        print(f"cell failed: {r.estimator.value} L={r.L} seed={r.seed}: {r.status}",
              file=sys.stderr)
    return 2 if failed else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="gibbslz", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a configuration key (repeatable)")
    ap.add_argument("--seed", type=int, help="base seed (sets seeds.base)")
    ap.add_argument("--output", help="output directory (sets output.dir)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    text, base_dir = "", "."
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return 1
        base_dir = os.path.dirname(os.path.abspath(args.config))
    overrides = [f"experiment={args.experiment}", *args.set]
    if args.seed is not None:
        overrides.append(f"seeds.base={args.seed}")
    if args.output is not None:
        overrides.append(f"output.dir={args.output}")
    try:
        config = parse_config(text, overrides, base_dir)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

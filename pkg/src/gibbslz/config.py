"""Run configuration: line-oriented ``key = value`` text with dotted sections.

Example::

    experiment = sweep
    model.statistics = bose
    model.beta = 1.0
    model.mu = 1.0
    grid.L = 2^12, 2^14
    seeds.count = 5
    estimators = Grassberger, Reciprocal

``#`` starts a comment. Every key except ``model.statistics``,
``model.beta`` and ``model.mu`` has a default (see ``SCHEMA``). Seeds are
either ``seeds.base`` + ``seeds.count`` (consecutive integers) or an explicit
``seeds.list``; a cell's array is a pure function of its seed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from types import SimpleNamespace

from .estimators import MAX_MODE_BUDGET, Estimator
from .source import Dispersion, InvalidModelError, ModelParams, Statistics, validation_errors

EXPERIMENTS = ("sample", "entropy", "matchlen", "lz", "aep", "eigencount", "sweep")
ZETA_RULES = ("fixed", "sqrt-log")

# default estimators per experiment (sweep adds LZ in one dimension)
DEFAULT_ESTIMATORS = {
    "sample": (),
    "entropy": (),
    "matchlen": ("Grassberger", "Reciprocal"),
    "lz": ("LZ",),
    "aep": ("AEP",),
    "eigencount": ("EigenCount",),
    "sweep": ("Grassberger", "Reciprocal", "AEP"),
}

ALLOWED_ESTIMATORS = {
    "sample": (),
    "entropy": (),
    "matchlen": ("Grassberger", "Reciprocal", "GrassbergerGrowingZeta"),
    "lz": ("LZ",),
    "aep": ("AEP",),
    "eigencount": ("EigenCount",),
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def _int(text):
    text = text.strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return int(base) ** int(exp)
    return int(text)


def _float(text):
    return float(text)


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _list(conv):
    def parse(text):
        items = [x.strip() for x in text.split(",") if x.strip()]
        return tuple(conv(x) for x in items)
    return parse


def _choice(options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {t!r}")
        return t
    return parse


def _table(text):
    pairs = []
    for item in text.split(","):
        if item.strip():
            t, v = item.split(":")
            pairs.append((float(t), float(v)))
    return tuple(pairs)


# key -> (parser, default); None default means required
SCHEMA = {
    "experiment": (_choice(EXPERIMENTS), "sweep"),
    "model.statistics": (_choice(tuple(s.value for s in Statistics)), None),
    "model.beta": (_float, None),
    "model.mu": (_float, None),
    "model.dim": (_int, 1),
    "model.dispersion": (_choice(("quadratic", "tabulated")), "quadratic"),
    "model.dispersion_table": (_table, ()),
    "model.dispersion_file": (str.strip, ""),
    "grid.L": (_list(_int), (1024,)),
    "grid.zeta": (_float, 1.0),
    "grid.zeta_rule": (_choice(ZETA_RULES), "fixed"),
    "seeds.base": (_int, 0),
    "seeds.count": (_int, 1),
    "seeds.list": (_list(_int), ()),
    "estimators": (_list(str), None),       # None: experiment default
    "tolerances.tail_tol": (_float, 1e-12),
    "tolerances.quad_tol": (_float, 1e-9),
    "eigencount.mode_budget": (_int, 16),
    "eigencount.epsilon": (_float, 0.1),
    "matchlen.method": (_choice(("auto", "1d", "hashed", "brute")), "auto"),
    "estimators.literal": (_bool, False),
    "output.dir": (str.strip, "out"),
    "output.dump_arrays": (_bool, False),
    "output.dump_fields": (_bool, False),
    "output.dump_parses": (_bool, False),
    "output.timing": (_bool, False),
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    statistics: Statistics
    beta: float
    mu: float
    dim: int
    dispersion: Dispersion
    L_grid: tuple
    zeta: float
    zeta_rule: str
    seeds: tuple
    estimators: tuple
    tail_tol: float
    quad_tol: float
    mode_budget: int
    epsilon: float
    method: str
    literal: bool
    output_dir: str
    dump_arrays: bool
    dump_fields: bool
    dump_parses: bool
    timing: bool

    def model(self, L):
        return ModelParams(self.statistics, self.beta, self.mu, self.dim,
                           self.dispersion, int(L), self.zeta)

    def params_grid(self):
        return [self.model(L) for L in self.L_grid]


def _read_lines(text, overrides):
    """``[(location, key, raw_value)]`` plus syntax errors."""
    entries, errors = [], []
    sources = [(f"line {i}", line) for i, line in enumerate(text.splitlines(), start=1)]
    sources += [(f"--set {o}", o) for o in overrides]
    for where, line in sources:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{where}: expected key = value")
            continue
        key, raw = (x.strip() for x in line.split("=", 1))
        entries.append((where, key, raw))
    return entries, errors


def parse_config(text, overrides=(), base_dir="."):
    """Parse and validate; raises :class:`ConfigError` listing every problem.

    ``overrides`` are extra ``key=value`` strings applied after the text
    (command-line ``--set``). Relative ``model.dispersion_file`` paths are
    resolved against ``base_dir``.
    """
    entries, errors = _read_lines(text, overrides)
    values, where = {}, {}
    for loc, key, raw in entries:
        if key not in SCHEMA:
            errors.append(f"{loc}: unknown key {key!r}")
            continue
        if key in where and not loc.startswith("--set") and not where[key].startswith("--set"):
            errors.append(f"{loc}: duplicate key {key!r} (first set at {where[key]})")
            continue
        try:
            values[key] = SCHEMA[key][0](raw)
        except (ValueError, TypeError) as exc:
            errors.append(f"{loc}: {key}: cannot parse {raw!r}: {exc}")
            continue
        where[key] = loc

    def loc(key):
        return where.get(key, f"{key} (default)")

    for key, (_, default) in SCHEMA.items():
        if default is None and key not in values and key != "estimators":
            errors.append(f"missing required key {key!r}")
    get = {k: values.get(k, d) for k, (_, d) in SCHEMA.items()}

    # dispersion
    dispersion = None
    table = get["model.dispersion_table"]
    path = get["model.dispersion_file"]
    if path:
        full = path if os.path.isabs(path) else os.path.join(base_dir, path)
        if table:
            errors.append(f"{loc('model.dispersion_file')}: give either a table or a file, not both")
        elif not os.path.isfile(full):
            errors.append(f"{loc('model.dispersion_file')}: file not found: {path}")
        else:
            try:
                with open(full) as fh:
                    table = tuple(tuple(float(x) for x in row.split()[:2])
                                  for row in fh if row.strip() and not row.startswith("#"))
            except (OSError, ValueError) as exc:
                errors.append(f"{loc('model.dispersion_file')}: unreadable table: {exc}")
    try:
        if get["model.dispersion"] == "quadratic":
            if table:
                raise InvalidModelError("a table was given for quadratic dispersion")
            dispersion = Dispersion()
        else:
            dispersion = Dispersion("tabulated", table)
    except InvalidModelError as exc:
        errors.append(f"{loc('model.dispersion')}: {exc}")

    # model constraints, reported against the offending line
    grid = get["grid.L"]
    if not grid:
        errors.append(f"{loc('grid.L')}: grid.L must list at least one value")
    if get["model.statistics"] is not None and None not in (get["model.beta"], get["model.mu"]):
        stats = Statistics(get["model.statistics"])
        probe = SimpleNamespace(statistics=stats, beta=get["model.beta"], mu=get["model.mu"],
                                dim=get["model.dim"], L=min(grid) if grid else 2,
                                zeta=get["grid.zeta"])
        owner = {"beta": "model.beta", "bosons": "model.mu", "dim": "model.dim",
                 "L ": "grid.L", "zeta": "grid.zeta"}
        for msg in validation_errors(probe):
            key = next(v for k, v in owner.items() if msg.startswith(k))
            errors.append(f"{loc(key)}: {key}: {msg}")
    else:
        stats = None

    # seeds
    if "seeds.list" in values and ("seeds.base" in values or "seeds.count" in values):
        errors.append(f"{loc('seeds.list')}: seeds.list excludes seeds.base/seeds.count")
    if get["seeds.list"]:
        seeds = get["seeds.list"]
    else:
        if get["seeds.count"] < 1:
            errors.append(f"{loc('seeds.count')}: seeds.count must be at least 1")
        seeds = tuple(range(get["seeds.base"], get["seeds.base"] + max(get["seeds.count"], 0)))
    if any(s < 0 for s in seeds):
        errors.append(f"{loc('seeds.base')}: seeds must be nonnegative")
    if len(set(seeds)) != len(seeds):
        errors.append(f"{loc('seeds.list')}: seeds must be distinct")

    # estimators
    experiment = get["experiment"]
    names = values.get("estimators")
    if names is None:
        names = DEFAULT_ESTIMATORS[experiment]
        if experiment == "sweep" and get["model.dim"] == 1:
            names = names + ("LZ",)
    ests = []
    for n in names:
        try:
            ests.append(Estimator(n).value)
        except ValueError:
            errors.append(f"{loc('estimators')}: unknown estimator {n!r}")
    allowed = ALLOWED_ESTIMATORS.get(experiment)
    if allowed is not None:
        # a single-purpose experiment keeps only its own estimators
        ests = [e for e in ests if e in allowed] or list(DEFAULT_ESTIMATORS[experiment])
    if "LZ" in ests and get["model.dim"] != 1:
        errors.append(f"{loc('model.dim')}: LZ parsing needs model.dim = 1")
    if "EigenCount" in ests and stats is Statistics.BOSE:
        errors.append(f"{loc('model.statistics')}: EigenCount needs fermions")

    for key in ("tolerances.tail_tol", "tolerances.quad_tol"):
        if not get[key] > 0:
            errors.append(f"{loc(key)}: {key} must be positive")
    if not 0 < get["eigencount.epsilon"] < 1:
        errors.append(f"{loc('eigencount.epsilon')}: epsilon must lie in (0, 1)")
    if not 1 <= get["eigencount.mode_budget"] <= MAX_MODE_BUDGET:
        errors.append(f"{loc('eigencount.mode_budget')}: mode_budget must lie in 1..{MAX_MODE_BUDGET}")
    if not get["output.dir"]:
        errors.append(f"{loc('output.dir')}: output.dir must not be empty")

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        experiment=experiment, statistics=stats, beta=get["model.beta"], mu=get["model.mu"],
        dim=get["model.dim"], dispersion=dispersion, L_grid=tuple(grid),
        zeta=get["grid.zeta"], zeta_rule=get["grid.zeta_rule"], seeds=tuple(seeds),
        estimators=tuple(ests), tail_tol=get["tolerances.tail_tol"],
        quad_tol=get["tolerances.quad_tol"], mode_budget=get["eigencount.mode_budget"],
        epsilon=get["eigencount.epsilon"], method=get["matchlen.method"],
        literal=get["estimators.literal"], output_dir=get["output.dir"],
        dump_arrays=get["output.dump_arrays"], dump_fields=get["output.dump_fields"],
        dump_parses=get["output.dump_parses"], timing=get["output.timing"])


def serialize(config):
    """Canonical text form; ``parse_config(serialize(c)) == c``."""
    def b(x):
        return "true" if x else "false"

    lines = [
        f"experiment = {config.experiment}",
        f"model.statistics = {config.statistics.value}",
        f"model.beta = {config.beta!r}",
        f"model.mu = {config.mu!r}",
        f"model.dim = {config.dim}",
        f"model.dispersion = {config.dispersion.kind}",
    ]
    if config.dispersion.table:
        table = ", ".join(f"{t!r}:{v!r}" for t, v in config.dispersion.table)
        lines.append(f"model.dispersion_table = {table}")
    lines += [
        f"grid.L = {', '.join(str(L) for L in config.L_grid)}",
        f"grid.zeta = {config.zeta!r}",
        f"grid.zeta_rule = {config.zeta_rule}",
    ]
    s = config.seeds
    if s == tuple(range(s[0], s[0] + len(s))):
        lines += [f"seeds.base = {s[0]}", f"seeds.count = {len(s)}"]
    else:
        lines.append(f"seeds.list = {', '.join(map(str, s))}")
    lines += [
        f"estimators = {', '.join(config.estimators)}",
        f"estimators.literal = {b(config.literal)}",
        f"tolerances.tail_tol = {config.tail_tol!r}",
        f"tolerances.quad_tol = {config.quad_tol!r}",
        f"eigencount.mode_budget = {config.mode_budget}",
        f"eigencount.epsilon = {config.epsilon!r}",
        f"matchlen.method = {config.method}",
        f"output.dir = {config.output_dir}",
        f"output.dump_arrays = {b(config.dump_arrays)}",
        f"output.dump_fields = {b(config.dump_fields)}",
        f"output.dump_parses = {b(config.dump_parses)}",
        f"output.timing = {b(config.timing)}",
    ]
    return "\n".join(lines) + "\n"


CONFIG_FIELDS = [f.name for f in fields(RunConfig)]

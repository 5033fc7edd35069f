"""Seeded parameter sweeps and result emission.

A sweep config is a flat YAML mapping.  ``kind`` picks the experiment.  Every
other key is either a scalar or an axis written as a list or a generator:
``{geom: [start, stop, num]}``, ``{lin: [start, stop, num]}`` or
``{pow2: [lo, hi]}`` (integers ``2**lo .. 2**hi``).  Rows are the cartesian
product of the axes in the kind's fixed axis order.  Each row gets a seed
derived from ``(seed, row index)``, so output bytes depend only on the config.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .counting import classical_baseline, make_oracle, run_counting
from .dynamics import p_sol_landau_zener_ratio, p_sol_small_eps, solution_probability
from .grover import ScheduleParams
from .schedule import total_runtime

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "KINDS",
    "emit",
    "format_value",
    "load_config",
    "parse_config",
    "row_seed",
    "run_sweep",
]


class ConfigError(ValueError):
    """Invalid sweep configuration; the message names the field (and line)."""


def _runtime_row(p):
    return {"total_runtime": total_runtime(ScheduleParams(p["eta_star"], p["eps"]))}


def _psol_row(p):
    eta, eps = p["eta"], p["eps"]
    eta_star = eta if p["eta_star"] == "eta" else p["eta_star"]
    ode = solution_probability(eta, eta_star, eps, abs_tol=p["tol"], rel_tol=p["tol"])
    lz = p_sol_landau_zener_ratio(eta, eta_star, eps)
    small = p_sol_small_eps(eta, eps)
    return {
        "eta_star_used": eta_star,
        "p_sol_ode": ode,
        "p_sol_small_eps": small,
        "p_sol_landau_zener": lz,
        "dev_small_eps": ode - small,
        "dev_landau_zener": ode - lz,
    }


def _counting_row(p):
    oracle = make_oracle(p["backend"], p["n"], p["m"])
    run = run_counting(
        oracle,
        eps=p["eps"],
        target_p=p["target_p"],
        mode=p["mode"],
        seed=p["seed"],
        runs_per_trial=p["runs_per_trial"],
        precision=p["precision"],
    )
    est = run.estimate
    return {
        "m_hat": est.m_hat,
        "delta_m_hat": est.delta_m_hat,
        "m_star": est.m_star,
        "k": est.k,
        "p_hat": est.p_hat,
        "total_cost": est.total_cost,
        "draws": run.draws,
        "flags": "|".join(est.flags),
    }


def _classical_row(p):
    k = p["n"] if p["k"] == "n" else p["k"]
    est = classical_baseline(p["n"], p["m"], k, p["seed"])
    return {"k_used": est.k, "m_hat": est.m_hat, "predicted_error": est.predicted_error, "total_cost": float(est.k)}


@dataclass(frozen=True)
class Kind:
    axes: dict  # name -> (type, default or None if required)
    outputs: tuple
    func: object


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


KINDS = {
    "runtime": Kind(
        axes={"eta_star": (float, None), "eps": (float, 0.1)},
        outputs=("total_runtime",),
        func=_runtime_row,
    ),
    "psol": Kind(
        axes={"eta": (float, None), "eta_star": ("eta_or_float", "eta"), "eps": (float, 0.1), "tol": (float, 1e-10)},
        outputs=(
            "eta_star_used",
            "p_sol_ode",
            "p_sol_small_eps",
            "p_sol_landau_zener",
            "dev_small_eps",
            "dev_landau_zener",
        ),
        func=_psol_row,
    ),
    "counting": Kind(
        axes={
            "n": (int, None),
            "m": (int, None),
            "eps": (float, 0.1),
            "target_p": (float, 0.1),
            "mode": (("sqrt", "linear"), "sqrt"),
            "backend": (("analytic", "reduced", "full"), "analytic"),
            "precision": (float, 0.1),
            "runs_per_trial": (int, 200),
            "repeat": (int, 0),
        },
        outputs=("m_hat", "delta_m_hat", "m_star", "k", "p_hat", "total_cost", "draws", "flags"),
        func=_counting_row,
    ),
    "classical": Kind(
        axes={"n": (int, None), "m": (int, None), "k": ("n_or_int", "n"), "repeat": (int, 0)},
        outputs=("k_used", "m_hat", "predicted_error", "total_cost"),
        func=_classical_row,
    ),
}

_RESERVED = {"kind", "seed", "out", "format", "jobs"}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    axes: dict  # name -> list of values, in the kind's axis order
    seed: int = 0
    out: str | None = None
    format: str = "csv"
    jobs: int = 1
    source: dict = field(default_factory=dict, compare=False)

    @property
    def columns(self):
        return ["row", *self.axes, "seed", *KINDS[self.kind].outputs, "error"]

    def rows(self):
        names = list(self.axes)
        for values in itertools.product(*(self.axes[n] for n in names)):
            yield dict(zip(names, values))


def _expand(name, value, where):
    if isinstance(value, dict):
        if len(value) != 1:
            raise ConfigError(f"{where}field {name!r}: generator must have exactly one key")
        (gen, args), = value.items()
        if gen in ("geom", "lin"):
            if not (isinstance(args, list) and len(args) == 3 and all(_num(a) for a in args)):
                raise ConfigError(f"{where}field {name!r}: {gen} expects [start, stop, num]")
            start, stop, num = args
            if int(num) != num or num < 0:
                raise ConfigError(f"{where}field {name!r}: num must be a non-negative integer")
            if gen == "geom" and (start <= 0 or stop <= 0):
                raise ConfigError(f"{where}field {name!r}: geom bounds must be positive")
            fn = np.geomspace if gen == "geom" else np.linspace
            return [float(x) for x in fn(start, stop, int(num))]
        if gen == "pow2":
            if not (isinstance(args, list) and len(args) == 2 and all(isinstance(a, int) for a in args)):
                raise ConfigError(f"{where}field {name!r}: pow2 expects [lo, hi] integers")
            return [2**j for j in range(args[0], args[1] + 1)]
        raise ConfigError(f"{where}field {name!r}: unknown generator {gen!r}")
    if isinstance(value, list):
        return list(value)
    return [value]


def _coerce(name, kind, value, where):
    bad = ConfigError(f"{where}field {name!r}: invalid value {value!r}")
    if isinstance(kind, tuple):
        if value not in kind:
            raise ConfigError(f"{where}field {name!r}: expected one of {list(kind)}, got {value!r}")
        return value
    if kind == "eta_or_float":
        return "eta" if value == "eta" else _coerce(name, float, value, where)
    if kind == "n_or_int":
        return "n" if value == "n" else _coerce(name, int, value, where)
    if kind is int:
        if isinstance(value, bool) or not _num(value) or int(value) != value:
            raise bad
        return int(value)
    if not _num(value) or not math.isfinite(value):
        raise bad
    return float(value)


def _key_lines(text):
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def parse_config(text, overrides=(), name="<config>"):
    """Parse and validate a sweep config; ``overrides`` are ``key=value`` strings."""
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{name}: YAML syntax error: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: top level must be a mapping")
    lines = _key_lines(text)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r}: expected key=value")
        data[key.strip()] = yaml.safe_load(raw)
        lines[key.strip()] = None

    def where(key):
        line = lines.get(key)
        return f"{name}:{line}: " if line else f"{name}: "

    kind_name = data.get("kind")
    if kind_name not in KINDS:
        raise ConfigError(f"{where('kind')}field 'kind': expected one of {sorted(KINDS)}, got {kind_name!r}")
    kind = KINDS[kind_name]
    unknown = sorted(set(data) - set(kind.axes) - _RESERVED)
    if unknown:
        raise ConfigError(f"{where(unknown[0])}field {unknown[0]!r}: not a parameter of kind {kind_name!r}")

    axes = {}
    for axis, (typ, default) in kind.axes.items():
        if axis not in data:
            if default is None:
                raise ConfigError(f"{name}: field {axis!r}: required for kind {kind_name!r}")
            axes[axis] = [default]
            continue
        values = _expand(axis, data[axis], where(axis))
        axes[axis] = [_coerce(axis, typ, v, where(axis)) for v in values]
    if "repeat" in kind.axes and "repeat" in data and not isinstance(data["repeat"], (list, dict)):
        # scalar "repeat: R" means R independent repetitions
        reps = axes["repeat"][0]
        if reps < 1:
            raise ConfigError(f"{where('repeat')}field 'repeat': must be >= 1")
        axes["repeat"] = list(range(reps))
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"{where('seed')}field 'seed': expected a 64-bit non-negative integer")
    fmt = data.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"{where('format')}field 'format': expected csv or json")
    jobs = data.get("jobs", 1)
    if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
        raise ConfigError(f"{where('jobs')}field 'jobs': expected a positive integer")
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError(f"{where('out')}field 'out': expected a path string")
    return ExperimentConfig(kind=kind_name, axes=axes, seed=seed, out=out, format=fmt, jobs=jobs, source=data)


def load_config(path, overrides=()):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides, name=str(path))


def row_seed(root_seed, index):
    """64-bit seed for row ``index`` derived from the root seed."""
    lo, hi = np.random.SeedSequence([root_seed, index]).generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def _run_row(task):
    kind_name, index, params, seed = task
    kind = KINDS[kind_name]
    row = {"row": index, **params, "seed": seed}
    try:
        out = kind.func({**params, "seed": seed})
    except Exception as exc:  # recorded in-row; a sweep never aborts on one point
        out = {name: None for name in kind.outputs}
        row["error"] = f"{type(exc).__name__}: {exc}"
    else:
        row["error"] = ""
    row.update(out)
    return row


def run_sweep(config, jobs=None):
    """Evaluate every row of ``config``; output order is input order."""
    jobs = config.jobs if jobs is None else jobs
    tasks = [(config.kind, i, params, row_seed(config.seed, i)) for i, params in enumerate(config.rows())]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_row, tasks))
    else:
        rows = [_run_row(t) for t in tasks]
    return [{c: r.get(c) for c in config.columns} for r in rows]


def format_value(value):
    """Text form used in CSV cells: floats with 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


def emit(rows, columns, fmt="csv", path=None, config=None):
    """Write ``rows`` as CSV or JSON to ``path`` (or return the text if ``path`` is None)."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
        text = buf.getvalue()
    elif fmt == "json":
        doc = {"columns": list(columns), "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows]}
        if config is not None:
            doc["config"] = {
                "kind": config.kind,
                "seed": config.seed,
                "axes": {k: [_json_value(v) for v in vs] for k, vs in config.axes.items()},
            }
        text = json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    if path is None:
        return text
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text

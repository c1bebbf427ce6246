"""Run configuration: YAML parsing, strict validation, default materialization.

The grammar is nested key-value blocks (YAML, UTF-8).  Validation is strict:
unknown keys are rejected by name, every default is filled into the parsed
object so outputs can echo the exact effective configuration, and the
canonical JSON form of that object is what the result cache hashes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError
from .fourier import FourierSeries, constant_series, from_samples, load_series_table
from .operators import OperatorSpec

__all__ = ["RunConfig", "parse_config", "config_hash"]

TASK_KINDS = ("spectrum", "evans-eval", "roots", "converge", "oracle-compare", "validate")

_TASK_DEFAULTS = {
    "spectrum": {"J": 16, "sigma_count": 16, "sigma_values": None},
    "evans-eval": {"J": 16, "sigma": 0.0, "re_min": -4.0, "re_max": 1.0,
                   "im_min": -1.0, "im_max": 1.0, "n_re": 40, "n_im": 20},
    "roots": {"J": 16, "sigma": 0.0, "re_min": -4.0, "re_max": 1.0,
              "im_min": -1.0, "im_max": 1.0, "min_box": 1e-4},
    "converge": {"sigma": 0.0, "J_values": [8, 16, 32], "J_ref": 64,
                 "radius": 4.0, "probe_count": 16, "mode": "both", "probe_seed": 20240901},
    "oracle-compare": {"J": 32, "sigma": 0.0, "radius": 3.0, "tol": 1e-9, "min_box": 0.01},
    "validate": {"grid": 256},
}

_OUTPUT_DEFAULTS = {"directory": "out", "formats": ["csv", "json"]}


@dataclass(frozen=True)
class RunConfig:
    task: str
    operator: OperatorSpec
    params: dict
    output_dir: str
    formats: tuple
    canonical: dict = field(repr=False)

    @property
    def hash(self) -> str:
        return config_hash(self.canonical)


def config_hash(canonical: dict) -> str:
    from . import __version__
    payload = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(f"v{__version__}|{payload}".encode()).hexdigest()[:24]


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _check_keys(block: dict, allowed, where: str):
    unknown = sorted(set(block) - set(allowed))
    _require(not unknown, f"{where}: unknown key(s) {unknown}")


def _coefficient_series(entry: dict, period: float, dim: int, idx: int) -> FourierSeries:
    where = f"operator.coefficients[{idx}]"
    _check_keys(entry, ("derivative", "entries", "constant", "file", "samples_file", "cutoff"), where)
    sources = [k for k in ("entries", "constant", "file", "samples_file") if k in entry]
    _require(len(sources) == 1, f"{where}: give exactly one of entries/constant/file/samples_file")
    src = sources[0]
    if src == "constant":
        v = entry["constant"]
        value = np.asarray(v, dtype=complex)
        if value.ndim == 2:
            _require(value.shape == (dim, dim), f"{where}: constant must be {dim}x{dim}")
        return constant_series(value, period, dim)
    if src == "entries":
        rows = entry["entries"]
        _require(isinstance(rows, list) and rows, f"{where}: entries must be a nonempty list")
        cutoff = max(abs(int(r[0])) for r in rows)
        coeffs = np.zeros((2 * cutoff + 1, dim, dim), dtype=complex)
        for r in rows:
            _require(len(r) == 5, f"{where}: each entry row is [k, p, q, re, im]")
            k, p, q, re, im = int(r[0]), int(r[1]), int(r[2]), float(r[3]), float(r[4])
            _require(0 <= p < dim and 0 <= q < dim, f"{where}: block index ({p},{q}) out of range for dim {dim}")
            coeffs[k + cutoff, p, q] = complex(re, im)
        return FourierSeries(period, dim, cutoff, coeffs)
    if src == "file":
        series = load_series_table(entry["file"])
        _require(series.dim == dim, f"{where}: file has dim {series.dim}, operator has dim {dim}")
        _require(abs(series.period - period) < 1e-12 * max(1, period),
                 f"{where}: file period {series.period} != operator period {period}")
        return series
    # samples_file: N rows, n*n*2 whitespace floats per row (re im, row-major blocks)
    _require("cutoff" in entry, f"{where}: samples_file requires an explicit cutoff")
    raw = np.loadtxt(entry["samples_file"], ndmin=2)
    _require(raw.shape[1] == 2 * dim * dim,
             f"{where}: sample rows need {2 * dim * dim} columns for dim {dim}, got {raw.shape[1]}")
    samples = (raw[:, 0::2] + 1j * raw[:, 1::2]).reshape(-1, dim, dim)
    return from_samples(samples, period, int(entry["cutoff"]))


def _parse_operator(block: dict) -> OperatorSpec:
    _require(isinstance(block, dict), "operator: must be a mapping")
    _check_keys(block, ("period", "dim", "order", "form", "coefficients", "composite_orders"),
                "operator")
    for key in ("period", "order", "coefficients"):
        _require(key in block, f"operator: missing required key {key!r}")
    period = float(block["period"])
    _require(period > 0, "operator.period: must be positive")
    dim = int(block.get("dim", 1))
    order = int(block["order"])
    form = block.get("form", "divergence")
    _require(form in ("divergence", "nondivergence"), f"operator.form: unknown form {form!r}")
    coeff_entries = block["coefficients"]
    _require(isinstance(coeff_entries, list), "operator.coefficients: must be a list")
    zero = constant_series(0.0, period, dim)
    series = [zero] * (order + 1)
    seen = set()
    for idx, entry in enumerate(coeff_entries):
        _require(isinstance(entry, dict), f"operator.coefficients[{idx}]: must be a mapping")
        _require("derivative" in entry, f"operator.coefficients[{idx}]: missing derivative order")
        k = int(entry["derivative"])
        _require(0 <= k <= order, f"operator.coefficients[{idx}]: derivative {k} outside 0..{order}")
        _require(k not in seen, f"operator.coefficients[{idx}]: derivative {k} given twice")
        seen.add(k)
        series[k] = _coefficient_series(entry, period, dim, idx)
    composite = block.get("composite_orders")
    if composite is not None:
        composite = tuple(int(v) for v in composite)
    try:
        return OperatorSpec(order, dim, tuple(series), form, composite)
    except ValueError as exc:
        raise ConfigError(f"operator: {exc}") from exc


def _materialize_task(block: dict) -> tuple:
    _require(isinstance(block, dict), "task: must be a mapping")
    _require("kind" in block, "task: missing required key 'kind'")
    kind = block["kind"]
    _require(kind in TASK_KINDS, f"task.kind: unknown task {kind!r}; choose from {TASK_KINDS}")
    defaults = _TASK_DEFAULTS[kind]
    _check_keys(block, tuple(defaults) + ("kind",), "task")
    params = dict(defaults)
    params.update({k: v for k, v in block.items() if k != "kind"})

    if kind == "spectrum":
        _require(int(params["J"]) >= 0, "task.J: must be >= 0")
        if params["sigma_values"] is None:
            _require(int(params["sigma_count"]) >= 1, "task.sigma_count: must be >= 1")
    if kind == "converge":
        Js = params["J_values"]
        _require(isinstance(Js, list) and len(Js) >= 2,
                 "task.J_values: J list must contain >= 2 values")
        _require(all(int(j) >= 1 for j in Js), "task.J_values: levels must be >= 1")
        _require(int(params["J_ref"]) >= 2 * max(int(j) for j in Js),
                 "task.J_ref: must be at least twice the largest J")
        _require(params["mode"] in ("evans", "spectral", "both"),
                 f"task.mode: unknown mode {params['mode']!r}")
    if kind in ("roots", "evans-eval"):
        _require(float(params["re_min"]) < float(params["re_max"]), "task: re_min must be < re_max")
        _require(float(params["im_min"]) < float(params["im_max"]), "task: im_min must be < im_max")
    if kind == "oracle-compare":
        _require(float(params["radius"]) > 0, "task.radius: must be positive")
        _require(1e-12 <= float(params["tol"]) <= 1e-4, "task.tol: must lie in [1e-12, 1e-4]")
    return kind, params


def parse_config(path) -> RunConfig:
    """Parse and validate a YAML run configuration.

    Syntax errors surface with line/column; semantic errors name the key.
    The returned object carries every default explicitly.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: syntax error{loc}: {exc}") from exc
    _require(isinstance(raw, dict), f"{path}: top level must be a mapping")
    _check_keys(raw, ("operator", "task", "output"), str(path))
    _require("operator" in raw, f"{path}: missing 'operator' block")
    _require("task" in raw, f"{path}: missing 'task' block")

    operator = _parse_operator(raw["operator"])
    kind, params = _materialize_task(raw["task"])
    out_block = dict(_OUTPUT_DEFAULTS)
    if "output" in raw:
        _require(isinstance(raw["output"], dict), "output: must be a mapping")
        _check_keys(raw["output"], ("directory", "formats"), "output")
        out_block.update(raw["output"])
    for fmt in out_block["formats"]:
        _require(fmt in ("csv", "json", "svg"), f"output.formats: unknown format {fmt!r}")

    canonical = {
        "task": kind,
        "params": _jsonable(params),
        "output_formats": sorted(out_block["formats"]),
        "operator": {
            "hash": operator.content_hash(),
            "order": operator.order,
            "dim": operator.dim,
            "form": operator.form,
            "composite_orders": operator.composite_orders,
        },
    }
    return RunConfig(kind, operator, params, str(out_block["directory"]),
                     tuple(out_block["formats"]), canonical)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isfinite(obj):
        return repr(obj)
    return obj

"""Task orchestration: execute a RunConfig, write artifacts atomically, and
serve byte-identical repeats from a content-addressed cache.

Every output file carries the config hash in a header or metadata field.
Outputs are first produced in memory (name -> bytes), then written through
temp-file-and-rename so an interrupted run leaves nothing partial.  The
cache key is the hash of the canonical config plus the code version; a hit
replays the stored bytes verbatim.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import convergence, floquet, fredholm, hill, plots
from .config import RunConfig
from .errors import BlochspecError, ConfigError
from .operators import brillouin_reduce, validate
from .winding import localize_roots, match_spectra

__all__ = ["RunOutcome", "run", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL", "EXIT_PARTIAL"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4

CACHE_ENV_VAR = "BLOCHSPEC_CACHE_DIR"


@dataclass
class RunOutcome:
    exit_code: int
    files: list
    cached: bool = False
    messages: list = field(default_factory=list)


def _cache_dir(config: RunConfig) -> str:
    base = os.environ.get(CACHE_ENV_VAR)
    if base is None:
        base = os.path.join(config.output_dir, ".blochspec-cache")
    return os.path.join(base, config.hash)


def _write_atomic(directory: str, name: str, data: bytes) -> str:
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        path = os.path.join(directory, name)
        os.replace(tmp, path)
        return path
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_bytes(header_hash: str, lines) -> bytes:
    body = "\n".join(lines)
    return f"# config_hash: {header_hash}\n{body}\n".encode()


def _json_bytes(header_hash: str, obj) -> bytes:
    payload = {"config_hash": header_hash, **obj}
    return (json.dumps(payload, sort_keys=True, indent=1) + "\n").encode()


def run(config: RunConfig, use_cache: bool = True, threads: int = 1) -> RunOutcome:
    """Execute the configured task and write its artifacts.

    Exit codes: 0 success, 2 config error, 3 numerical failure, 4 partial
    success (some sweep points failed; per-point status is in the metadata).
    """
    cache = _cache_dir(config)
    if use_cache and os.path.isdir(cache):
        files = []
        meta_path = os.path.join(cache, "_meta.json")
        meta = json.load(open(meta_path)) if os.path.exists(meta_path) else {"exit_code": 0}
        for name in sorted(os.listdir(cache)):
            if name == "_meta.json":
                continue
            with open(os.path.join(cache, name), "rb") as fh:
                files.append(_write_atomic(config.output_dir, name, fh.read()))
        return RunOutcome(meta.get("exit_code", EXIT_OK), files, cached=True,
                          messages=["cached: replayed stored outputs"])

    try:
        producer = _TASKS[config.task]
        artifacts, exit_code, messages = producer(config, threads)
    except ConfigError:
        raise
    except BlochspecError as exc:
        return RunOutcome(EXIT_NUMERICAL, [], messages=[f"{config.task}: {exc}"])

    files = [_write_atomic(config.output_dir, name, data) for name, data in artifacts]
    if use_cache:
        os.makedirs(cache, exist_ok=True)
        for name, data in artifacts:
            _write_atomic(cache, name, data)
        _write_atomic(cache, "_meta.json", json.dumps({"exit_code": exit_code}).encode())
    return RunOutcome(exit_code, files, messages=messages)


def _sigma_grid(config: RunConfig):
    p = config.params
    if p.get("sigma_values") is not None:
        return [float(s) for s in p["sigma_values"]]
    count = int(p["sigma_count"])
    width = 2.0 * math.pi / config.operator.period
    return [i * width / count for i in range(count)]


def _task_spectrum(config: RunConfig, threads: int):
    executor = None
    if threads > 1:
        executor = concurrent.futures.ThreadPoolExecutor(max_workers=threads)
    try:
        result = hill.sweep(config.operator, _sigma_grid(config), int(config.params["J"]),
                            executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    failed = [e.sigma for e in result.entries if e.eigenvalues is None]
    artifacts = []
    if "csv" in config.formats:
        artifacts.append(("spectrum.csv", _csv_bytes(config.hash, result.to_csv_lines())))
    if "json" in config.formats:
        artifacts.append(("spectrum.json", _json_bytes(config.hash, result.to_json_obj())))
    if "svg" in config.formats:
        svg = plots.band_structure_svg(result.entries, f"config_hash: {config.hash}")
        artifacts.append(("band_structure.svg", svg.encode()))
    exit_code = EXIT_PARTIAL if failed else EXIT_OK
    msgs = [f"sigma={s} failed" for s in failed]
    return artifacts, exit_code, msgs


def _task_evans_eval(config: RunConfig, threads: int):
    p = config.params
    J, sigma = int(p["J"]), brillouin_reduce(float(p["sigma"]), config.operator.period)
    res = np.linspace(float(p["re_min"]), float(p["re_max"]), int(p["n_re"]))
    ims = np.linspace(float(p["im_min"]), float(p["im_max"]), int(p["n_im"]))
    lines = ["sigma,re_lambda,im_lambda,log_mag,phase,J"]
    grid = []
    for im in ims:
        row = []
        for re in res:
            v = fredholm.evans(config.operator, sigma, complex(re, im), J)
            lines.append(f"{sigma!r},{float(re)!r},{float(im)!r},{v.log_mag!r},{v.phase!r},{J}")
            row.append(v.log_mag)
        grid.append(row)
    artifacts = []
    if "csv" in config.formats:
        artifacts.append(("evans.csv", _csv_bytes(config.hash, lines)))
    if "json" in config.formats:
        artifacts.append(("evans.json", _json_bytes(config.hash, {
            "sigma": sigma, "J": J,
            "re_values": [float(v) for v in res], "im_values": [float(v) for v in ims],
            "log_mag": grid,
        })))
    if "svg" in config.formats:
        svg = plots.evans_landscape_svg([float(v) for v in res], [float(v) for v in ims],
                                        grid, f"config_hash: {config.hash}")
        artifacts.append(("evans_landscape.svg", svg.encode()))
    return artifacts, EXIT_OK, []


def _task_roots(config: RunConfig, threads: int):
    p = config.params
    J, sigma = int(p["J"]), brillouin_reduce(float(p["sigma"]), config.operator.period)
    f = lambda lam: fredholm.evans(config.operator, sigma, complex(lam), J)
    roots, region = localize_roots(
        f, complex(float(p["re_min"]), float(p["im_min"])),
        complex(float(p["re_max"]), float(p["im_max"])), min_box=float(p["min_box"]))
    lines = ["re_root,im_root,multiplicity,box_size"]
    for r in roots:
        lines.append(f"{r.root.real!r},{r.root.imag!r},{r.multiplicity},{r.box_size!r}")
    artifacts = []
    if "csv" in config.formats:
        artifacts.append(("roots.csv", _csv_bytes(config.hash, lines)))
    if "json" in config.formats:
        artifacts.append(("roots.json", _json_bytes(config.hash, {
            "sigma": sigma, "J": J, "region_winding": region.winding,
            "roots": [{"re": r.root.real, "im": r.root.imag,
                       "multiplicity": r.multiplicity, "box_size": r.box_size}
                      for r in roots],
        })))
    return artifacts, EXIT_OK, []


def _task_converge(config: RunConfig, threads: int):
    p = config.params
    sigma = brillouin_reduce(float(p["sigma"]), config.operator.period)
    Js = [int(j) for j in p["J_values"]]
    J_ref, radius = int(p["J_ref"]), float(p["radius"])
    ref_eigs = hill.eigenvalues(hill.assemble(config.operator, sigma, J_ref))
    probes, _ = convergence.probe_points(int(p["probe_count"]), radius, ref_eigs,
                                         seed=int(p["probe_seed"]))
    reports = []
    if p["mode"] in ("evans", "both"):
        reports.append(convergence.evans_convergence(config.operator, sigma, Js, J_ref, probes))
    if p["mode"] in ("spectral", "both"):
        reports.append(convergence.spectral_convergence(config.operator, sigma, Js, J_ref, radius))
    artifacts = []
    for rep in reports:
        if "csv" in config.formats:
            artifacts.append((f"convergence_{rep.kind}.csv",
                              _csv_bytes(config.hash, rep.to_csv_lines())))
        if "json" in config.formats:
            artifacts.append((f"convergence_{rep.kind}.json",
                              _json_bytes(config.hash, rep.to_json_obj())))
        if "svg" in config.formats:
            svg = plots.convergence_svg(rep.J_values, rep.errors, rep.fitted_rate,
                                        f"config_hash: {config.hash}")
            artifacts.append((f"convergence_{rep.kind}.svg", svg.encode()))
    return artifacts, EXIT_OK, []


def _task_oracle_compare(config: RunConfig, threads: int):
    p = config.params
    J, sigma = int(p["J"]), brillouin_reduce(float(p["sigma"]), config.operator.period)
    R, tol = float(p["radius"]), float(p["tol"])
    eigs = hill.eigenvalues(hill.assemble(config.operator, sigma, J))
    pad = 1.05 * R

    def gardner(lams):
        return floquet.evans_gardner_batch(config.operator, np.atleast_1d(lams), sigma, tol)

    roots, region = localize_roots(gardner, complex(-pad, -pad), complex(pad, pad),
                                   min_box=float(p["min_box"]))
    oracle_pts = [r.root for r in roots for _ in range(r.multiplicity)]
    rep = match_spectra(eigs, oracle_pts, R)
    agree = rep.unmatched_a == 0 and rep.unmatched_b == 0
    obj = {
        "sigma": sigma, "J": J, "radius": R, "integrator_tol": tol,
        "hill_eigenvalues_in_disk": [[z.real, z.imag] for z in eigs if abs(z) <= R],
        "oracle_roots": [{"re": r.root.real, "im": r.root.imag, "multiplicity": r.multiplicity}
                         for r in roots],
        "max_root_discrepancy": rep.max_distance,
        "multiplicities_agree": agree,
        "unmatched_hill": rep.unmatched_a, "unmatched_oracle": rep.unmatched_b,
    }
    lines = ["re_root,im_root,multiplicity,source"]
    for z in eigs:
        if abs(z) <= R:
            lines.append(f"{z.real!r},{z.imag!r},1,hill")
    for r in roots:
        lines.append(f"{r.root.real!r},{r.root.imag!r},{r.multiplicity},monodromy")
    artifacts = []
    if "csv" in config.formats:
        artifacts.append(("oracle_compare.csv", _csv_bytes(config.hash, lines)))
    if "json" in config.formats:
        artifacts.append(("oracle_compare.json", _json_bytes(config.hash, obj)))
    msgs = [f"max root discrepancy {rep.max_distance:.3e}, "
            f"multiplicities {'agree' if agree else 'DISAGREE'}"]
    return artifacts, EXIT_OK if agree else EXIT_PARTIAL, msgs


def _task_validate(config: RunConfig, threads: int):
    rep = validate(config.operator, int(config.params["grid"]))
    obj = {
        "spd": rep.spd, "lower_bound": rep.lower_bound,
        "symmetry_defect": rep.symmetry_defect, "grid_points": rep.grid_points,
        "warning": rep.warning,
    }
    artifacts = [("validate.json", _json_bytes(config.hash, obj))]
    return artifacts, EXIT_OK, ([rep.warning] if rep.warning else [])


_TASKS = {
    "spectrum": _task_spectrum,
    "evans-eval": _task_evans_eval,
    "roots": _task_roots,
    "converge": _task_converge,
    "oracle-compare": _task_oracle_compare,
    "validate": _task_validate,
}

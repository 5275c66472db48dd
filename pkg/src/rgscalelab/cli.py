"""Command-line entry point.

    rgscalelab <experiment> --config <path> [--out <dir>] [--threads N]
               [--tol-abs X] [--tol-rel Y]

Exit status: 0 success, 1 configuration error, 2 numerical divergence
(some rows could not be computed; they are flagged in the output).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import BACKEND, __version__
from .config import EXPERIMENTS, ExperimentConfig, config_as_dict, emit_config, parse_config
from .errors import ConfigError, RGScaleLabError
from .experiments import HAS_SIDECAR, RUNNERS, ExperimentResult
from .quadrature import TOLERANCES, tolerances, track_quadrature

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE = 0, 1, 2


def format_float(x: float) -> str:
    """17 significant digits in scientific notation; nan/inf spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def render_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["schema_version", "row"] + result.columns)
    for i, row in enumerate(result.rows):
        writer.writerow([SCHEMA_VERSION, i] + [_cell(v) for v in row])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {str(k): _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if hasattr(v, "item"):  # numpy scalars
        return _json_safe(v.item())
    return v


def render_json_table(result: ExperimentResult, experiment: str) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "columns": ["row"] + result.columns,
        "rows": [[i] + [_json_safe(v) for v in row] for i, row in enumerate(result.rows)],
    }
    return json.dumps(doc, indent=2) + "\n"


def _write(path: Path, text: str) -> dict:
    path.write_text(text, encoding="utf-8")
    return {"file": path.name, "sha256": hashlib.sha256(text.encode()).hexdigest()}


def run_experiment(config: ExperimentConfig, out_dir: Path | None = None, threads: int | None = None) -> int:
    """Run one configured experiment and write table, sidecar and manifest."""
    out = Path(out_dir if out_dir is not None else config["output"]["path"])
    out.mkdir(parents=True, exist_ok=True)
    name = config.experiment
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    notes: list[str] = []
    status, code = "ok", EXIT_OK
    result = None
    with track_quadrature() as report:
        try:
            result = RUNNERS[name](config, threads)
        except ConfigError as exc:
            status, code = "config-error", EXIT_CONFIG
            notes.extend(exc.errors)
        except RGScaleLabError as exc:
            # divergent integrals, failed quadrature, degenerate fits
            status, code = "diverged", EXIT_DIVERGENCE
            notes.append(f"{type(exc).__name__}: {exc}")
    wall = time.perf_counter() - t0

    outputs = []
    if result is not None:
        notes.extend(result.notes)
        if result.diverged:
            status, code = "partial", EXIT_DIVERGENCE
        if config["output"]["format"] == "csv":
            entry = _write(out / f"{name}.csv", render_csv(result))
        else:
            entry = _write(out / f"{name}.json", render_json_table(result, name))
        entry.update(kind="table", rows=len(result.rows), columns=["row"] + result.columns)
        outputs.append(entry)
        if name in HAS_SIDECAR and result.summary is not None:
            side = {"schema_version": SCHEMA_VERSION, "experiment": name, **_json_safe(result.summary)}
            entry = _write(out / f"{name}.summary.json", json.dumps(side, indent=2, sort_keys=True) + "\n")
            entry.update(kind="summary")
            outputs.append(entry)

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "rgscalelab",
        "version": __version__,
        "backend": BACKEND,
        "experiment": name,
        "status": status,
        "exit_code": code,
        "started_utc": started,
        "wall_time_s": wall,
        "threads": threads,
        "tolerances": {"requested_abs": TOLERANCES.abs, "requested_rel": TOLERANCES.rel},
        "quadrature": {
            "adaptive_calls": report.calls,
            "max_error_estimate": report.max_abs_error,
            "unconverged": len(report.failures),
        },
        "config": _json_safe(config_as_dict(config)),
        "config_text": emit_config(config),
        "outputs": outputs,
        "row_failures": {str(k): v for k, v in sorted(result.row_failures.items())} if result else {},
        "notes": notes,
    }
    (out / f"{name}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rgscalelab", description="Scaling-limit experiments for block observables.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, type=Path, help="experiment configuration file")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides [output] path)")
    p.add_argument("--threads", type=int, default=None, help="worker threads for scale sweeps")
    p.add_argument("--tol-abs", type=float, default=None, help="absolute tolerance for adaptive quadrature")
    p.add_argument("--tol-rel", type=float, default=None, help="relative tolerance for adaptive quadrature")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    problems = []
    if args.threads is not None and args.threads < 1:
        problems.append("--threads must be at least 1")
    for flag, v in (("--tol-abs", args.tol_abs), ("--tol-rel", args.tol_rel)):
        if v is not None and not (math.isfinite(v) and v > 0):
            problems.append(f"{flag} must be a positive number")
    try:
        config = parse_config(text, args.experiment)
    except ConfigError as exc:
        problems.extend(exc.errors)
    if problems:
        for msg in problems:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    with tolerances(args.tol_abs, args.tol_rel):
        code = run_experiment(config, args.out, args.threads)
    out = args.out if args.out is not None else Path(config["output"]["path"])
    label = {EXIT_OK: "ok", EXIT_CONFIG: "config error", EXIT_DIVERGENCE: "divergence flagged"}[code]
    print(f"{args.experiment}: {label}; outputs in {out}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""``bose-complexity <run|sweep> --config PATH [--jobs N] [--out PATH] [--figures]``.

Exit codes: 0 success, 1 invalid configuration or parameters, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load, set_dotted, validate
from .experiments import ExperimentResult, run_experiment
from .gates import NoSolutionError
from .phase_map import InconsistentBoundsError
from .propagator import NumericalFailure

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _cell(value):
    # repr round-trips floats exactly; numpy scalars would otherwise print as np.float64(...)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue().encode()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n").encode()


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _output_path(cfg, out) -> Path:
    target = out or cfg.get("output")
    if not target:
        raise ConfigError("output", "no output path in the config and no --out given")
    return Path(target)


def _meta(cfg, result: ExperimentResult, extra=None) -> dict:
    meta = {
        "version": __version__,
        "experiment": cfg["experiment"],
        "seed": cfg["seed"],
        "config": cfg,
        "constants": result.meta,
    }
    if extra:
        meta.update(extra)
    return meta


def _emit(path: Path, payload: bytes, meta: dict, figure=None) -> None:
    # build everything before touching the target so failures leave no files
    atomic_write(path, payload)
    atomic_write(path.with_name(path.name + ".meta.json"), _json_bytes(meta))
    if figure is not None:
        figure(path.with_suffix(".png"))


def _figure_writer(cfg, result, enabled):
    if not enabled:
        return None

    def write(png: Path):
        from .plots import render

        fd, tmp = tempfile.mkstemp(dir=png.parent, prefix=f".{png.name}.", suffix=".tmp")
        os.close(fd)
        try:
            if render(cfg["experiment"], result, tmp):
                os.replace(tmp, png)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    return write


def _payload(result: ExperimentResult) -> bytes:
    if result.kind == "csv":
        return _csv_bytes(result.header, result.rows)
    return _json_bytes(result.payload)


def cmd_run(args) -> int:
    cfg = validate(load(args.config))
    path = _output_path(cfg, args.out)
    result = run_experiment(cfg)
    _emit(path, _payload(result), _meta(cfg, result), _figure_writer(cfg, result, args.figures))
    print(result.summary)
    return EXIT_OK


def _sweep_point(cfg):
    return run_experiment(cfg)


def cmd_sweep(args) -> int:
    base = validate(load(args.config), require_sweep=True)
    path = _output_path(base, args.out)
    sweep = base["sweep"]
    param, values = sweep["param"], sweep["values"]
    point_cfgs = []
    for idx, value in enumerate(values):
        cfg = {k: v for k, v in base.items() if k != "sweep"}
        cfg = set_dotted(cfg, param, value)
        cfg["seed"] = base["seed"] + idx
        try:
            point_cfgs.append(validate(cfg))
        except ConfigError as exc:
            raise ConfigError(f"sweep.values[{idx}]", str(exc)) from None
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, point_cfgs))
    else:
        results = [_sweep_point(c) for c in point_cfgs]

    first = results[0]
    if first.kind == "csv":
        header = ("point", param) + tuple(first.header)
        rows = [(i, values[i]) + tuple(r) for i, res in enumerate(results) for r in res.rows]
        payload = _csv_bytes(header, rows)
        merged = ExperimentResult("csv", "", header, rows, meta=first.meta)
    else:
        payload = _json_bytes(
            [{"point": i, "param": param, "value": values[i], "result": res.payload} for i, res in enumerate(results)]
        )
        merged = ExperimentResult("json", "", payload=None, meta=first.meta)
    meta = _meta(base, merged, {"points": [r.meta for r in results], "seed_rule": "seed + point index"})
    figure = None
    if args.figures and first.kind == "csv":
        figure = _figure_writer(base, ExperimentResult("csv", "", first.header, [r for res in results for r in res.rows], meta=first.meta), True)
    _emit(path, payload, meta, figure)
    print(f"sweep over {param}: {len(values)} points")
    for i, res in enumerate(results):
        print(f"  [{i}] {param}={values[i]}: {res.summary}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bose-complexity", description="Sampling-complexity experiments for long-range bosons.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run one experiment"), ("sweep", "run an experiment over a parameter sweep")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers (sweep only)")
        p.add_argument("--out", help="output path; overrides the config's output field")
        p.add_argument("--figures", action="store_true", help="also render a PNG next to the output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return cmd_run(args) if args.command == "run" else cmd_sweep(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, NoSolutionError, InconsistentBoundsError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # parameter checks inside the library (coupling caps, scope, geometry)
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

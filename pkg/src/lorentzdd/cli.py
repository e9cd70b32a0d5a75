"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical or physicality
failure (including a failed ``validate``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .control import filter_function
from .errors import ConfigError, NumericalError
from .scenarios import (
    PRESETS,
    atomic_write,
    compare_dd,
    dump_json,
    parse_config,
    preset_doc,
    run_scenario,
    run_sweep,
    table_csv,
)
from .validation import FAULTS, LEVELS, validate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--preset", help="start from a named preset (see 'presets list')")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override any scalar, e.g. --set params.T_B=2 or --set eta=0.9")
    p.add_argument("--out-dir", type=Path, help="directory for CSV/JSON outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lorentzdd",
        description="Two modes in a Lorentzian bath under detuning-based dynamical decoupling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario (sweep axes are ignored)")
    _config_args(p)

    p = sub.add_parser("sweep", help="run the Cartesian product of the sweep axes")
    _config_args(p)
    p.add_argument("--workers", type=int, help="parallel workers (default: $LORENTZDD_WORKERS or 1)")

    p = sub.add_parser("compare-dd", help="regular vs jittered DD over several seeds")
    _config_args(p)
    p.add_argument("--seeds", default="1-10", help="seed list, e.g. '1-10' or '1,4,7'")

    p = sub.add_parser("filter", help="filter function F(omega) of the configured schedule")
    _config_args(p)
    p.add_argument("--omega-min", type=float, default=-50.0)
    p.add_argument("--omega-max", type=float, default=50.0)
    p.add_argument("--points", type=int, default=2001)

    p = sub.add_parser("validate", help="self-check suite")
    p.add_argument("--level", choices=LEVELS, default="fast")
    p.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    p.add_argument("--out-dir", type=Path)

    p = sub.add_parser("presets", help="list or show presets")
    psub = p.add_subparsers(dest="action", required=True)
    psub.add_parser("list")
    show = psub.add_parser("show")
    show.add_argument("name")
    return parser


def load_config(args):
    raw = {}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc.strerror}", str(args.config)) from None
        try:
            raw = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", str(args.config)) from None
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object", str(args.config))
    if args.preset:
        raw = {**raw, "preset": args.preset}
    return parse_config(raw, args.overrides)


def parse_seeds(text: str) -> list[int]:
    seeds = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                seeds.extend(range(lo, hi + 1))
            elif part:
                seeds.append(int(part))
    except ValueError:
        raise ConfigError(f"cannot parse seed list {text!r}", "--seeds") from None
    if not seeds or min(seeds) < 0:
        raise ConfigError(f"seed list {text!r} must name non-negative seeds", "--seeds")
    return seeds


def _emit(obj):
    sys.stdout.write(dump_json(obj))


def cmd_run(args) -> int:
    cfg = load_config(args)
    rec = run_scenario(cfg, args.out_dir)
    _emit({"config_hash": rec.config_hash, "provenance": rec.provenance,
           "summary": rec.summary, "files": rec.files})
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    if args.workers is not None and args.workers < 1:
        raise ConfigError("--workers must be >= 1", "--workers")
    res = run_sweep(cfg, args.out_dir, workers=args.workers)
    _emit({"axes": res.axes, "runs": len(res.records), "table": res.table(),
           "files": res.files})
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = load_config(args)
    regular = cfg.override("schedule.kind", "regular")
    irregular = cfg.override("schedule.kind", "irregular")
    res = compare_dd(regular, irregular, parse_seeds(args.seeds), args.out_dir)
    _emit({**res.report(), "files": res.files})
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = load_config(args)
    if args.points < 2 or not args.omega_max > args.omega_min:
        raise ConfigError("need --points >= 2 and --omega-max > --omega-min")
    omega = np.linspace(args.omega_min, args.omega_max, args.points)
    F = filter_function(cfg.schedule(), omega, cfg.t_end)
    text = table_csv(("omega", "F"), zip(omega, F))
    if args.out_dir is None:
        sys.stdout.write(text)
    else:
        name = f"{cfg.name}_filter.csv"
        atomic_write(args.out_dir / name, text)
        _emit({"files": [name], "seed": cfg.seed, "config_hash": cfg.hash})
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate(args.level, args.inject_fault)
    data = report.as_dict()
    if args.out_dir is not None:
        atomic_write(args.out_dir / f"validate_{args.level}.json", dump_json(data))
    _emit(data)
    for c in report.checks:
        if not c.passed:
            print(f"FAILED {c.name}: measured {c.measured:.3g} > tolerance {c.tolerance:.3g}",
                  file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def cmd_presets(args) -> int:
    if args.action == "list":
        for name in PRESETS:
            print(f"{name:8s} {PRESETS[name]['description']}")
    else:
        doc = preset_doc(args.name)
        cfg = parse_config({"preset": args.name})
        _emit({"description": PRESETS[args.name]["description"], "preset": doc,
               "resolved": cfg.doc})
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare-dd": cmd_compare,
            "filter": cmd_filter, "validate": cmd_validate, "presets": cmd_presets}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        where = f" (t = {exc.time:.6g})" if getattr(exc, "time", None) is not None else ""
        print(f"numerical error{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # ConfigError, ParameterError, DomainError and ContractError
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

"""
Command-line entry point
solve | wkb | series | benchmark | wavefunction

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import argparse
import asyncio
import csv
import io
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

from benchmark_processor import BenchmarkProcessor, load_benchmark_config, rows_to_csv
from expansion import verify_2p_law
from numkernel import ConfigError, NumericalError
from potentials import NoBoundState, reference_energy
from run_models import EigenRecord, MatchRecord, OutputFormat, RunConfig
from spectrum import EigenResult, solve_energy, wavefunction_curves
from wkb import wkb_energy

load_dotenv()

logger = logging.getLogger(__name__)

# === CONFIG ===
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


# === COMMANDS (shared with the HTTP service) ===

def run_solve(config: RunConfig) -> Dict[str, Any]:
    ctx = config.context()
    model = config.build_model(ctx)
    result = solve_energy(
        model,
        config.state.n,
        config.p,
        tol=config.tolerances.root,
        guess=config.guess,
        settings=config.settings(ctx),
        escalate_digits=config.escalate_digits,
    )
    try:
        result.wkb_energy = wkb_energy(model, config.state.n)
    except NumericalError as e:
        logger.warning(f"⚠️ no WKB energy for {model.id.value} n={config.state.n}: {e}")
    try:
        result.reference = reference_energy(model, config.state.n)
    except NoBoundState:
        result.reference = None
    return EigenRecord.from_result(result, ctx).dump()


def run_wkb(config: RunConfig) -> Dict[str, Any]:
    ctx = config.context()
    model = config.build_model(ctx)
    result = EigenResult(model=model.describe(), n=config.state.n, l=model.l, digits=ctx.digits)
    result.wkb_energy = wkb_energy(model, config.state.n)
    try:
        result.reference = reference_energy(model, config.state.n)
    except NoBoundState:
        result.reference = None
    return EigenRecord.from_result(result, ctx).dump()


def run_series(config: RunConfig) -> Tuple[Dict[str, Any], bool]:
    ctx = config.context()
    model = config.build_model(ctx)
    if config.series.energy is not None:
        E = ctx.parse(config.series.energy)
    else:
        E = wkb_energy(model, config.state.n)
    anchor = ctx.parse(config.series.anchor)
    reports = verify_2p_law(model, E, anchor, config.series.p_max)
    holds = all(r.holds for r in reports)
    record = MatchRecord(
        model=model.describe(),
        state={"n": config.state.n, "l": model.l},
        energy=ctx.nstr(E),
        anchor=ctx.nstr(anchor),
        reports=[r.to_dict(ctx) for r in reports],
        holds=holds,
    )
    return record.dump(), holds


def run_wavefunction(config: RunConfig) -> List[Dict[str, Any]]:
    ctx = config.context()
    model = config.build_model(ctx)
    curves = wavefunction_curves(
        model,
        config.state.n,
        config.p,
        config.wavefunction.exact_depth,
        config.wavefunction.points,
        config.guess,
        config.settings(ctx),
    )
    return curves.rows(ctx)


# === OUTPUT ===

def _rows_csv(rows: List[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buffer.getvalue()


def _flatten(record: Dict[str, Any]) -> List[Dict[str, Any]]:
    """One CSV row per depth for an eigen record."""
    qlm = record.get("energies", {}).get("qlm", {})
    base = {"model": record["model"]["id"], "n": record["state"]["n"], "l": record["state"]["l"]}
    rows = [dict(base, depth="wkb", energy=record["energies"].get("wkb"), reference=record.get("reference"))]
    rows.extend(dict(base, depth=q, energy=E, reference=record.get("reference")) for q, E in qlm.items())
    return [r for r in rows if r["energy"] is not None]


def emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"✅ Wrote {path}")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _emit_record(record: Dict[str, Any], config: RunConfig):
    if config.output.format == OutputFormat.CSV:
        emit(_rows_csv(_flatten(record)), config.output.path)
    else:
        emit(json.dumps(record, indent=2), config.output.path)


def cmd_solve(config: RunConfig) -> int:
    record = run_solve(config)
    _emit_record(record, config)
    return EXIT_OK


def cmd_wkb(config: RunConfig) -> int:
    record = run_wkb(config)
    _emit_record(record, config)
    return EXIT_OK


def cmd_series(config: RunConfig) -> int:
    record, holds = run_series(config)
    emit(json.dumps(record, indent=2), config.output.path)
    if not holds:
        logger.error("❌ the 2^p law does not hold at this anchor")
    return EXIT_OK if holds else EXIT_NUMERICAL


def cmd_wavefunction(config: RunConfig) -> int:
    rows = run_wavefunction(config)
    if config.output.format == OutputFormat.JSON:
        emit(json.dumps(rows, indent=2), config.output.path)
    else:
        emit(_rows_csv(rows), config.output.path)
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace) -> int:
    config = load_benchmark_config(args.benchmark_config)
    processor = BenchmarkProcessor(config, digits=args.digits, workers=args.workers, timing=not args.no_timing)
    only = [s.strip() for s in args.only.split(",")] if args.only else None
    report = asyncio.run(processor.run(only))
    emit(json.dumps(report.dump(), indent=2), args.output)
    if args.csv:
        emit(rows_to_csv(report.rows), args.csv)
    return EXIT_OK if all(a.passed for a in report.acceptance) else EXIT_NUMERICAL


# === ARGUMENTS ===

def parse_params(text: Optional[str]) -> Dict[str, str]:
    """'A=4,a=1' -> {'A': '4', 'a': '1'}"""
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        if "=" not in item:
            raise ConfigError(f"parameter {item!r} is not of the form name=value")
        name, value = item.split("=", 1)
        out[name.strip()] = value.strip()
    return out


def _set(target: Dict[str, Any], path: str, value: Any):
    keys = path.split(".")
    for key in keys[:-1]:
        target = target.setdefault(key, {})
    target[keys[-1]] = value


def _conflicts(flags: Dict[str, Any], file: Dict[str, Any], prefix: str = "") -> List[str]:
    out = []
    for key, value in flags.items():
        if key not in file:
            continue
        if isinstance(value, dict) and isinstance(file[key], dict):
            out.extend(_conflicts(value, file[key], f"{prefix}{key}."))
        elif value != file[key]:
            out.append(prefix + key)
    return out


def _merge(flags: Dict[str, Any], file: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(flags)
    for key, value in file.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


FLAG_PATHS = {
    "potential": "potential.id",
    "n": "state.n",
    "l": "state.l",
    "p": "p",
    "digits": "digits",
    "escalate_digits": "escalate_digits",
    "guess": "guess",
    "ode_tol": "tolerances.ode",
    "root_tol": "tolerances.root",
    "stop_tol": "tolerances.stop",
    "output": "output.path",
    "format": "output.format",
    "anchor": "series.anchor",
    "p_max": "series.p_max",
    "energy": "series.energy",
    "points": "wavefunction.points",
    "exact_depth": "wavefunction.exact_depth",
}


def build_config(args: argparse.Namespace) -> RunConfig:
    """Flags merged with --config; the file wins on conflicts."""
    flags: Dict[str, Any] = {}
    for name, path in FLAG_PATHS.items():
        value = getattr(args, name, None)
        if value is not None:
            _set(flags, path, value)
    params = parse_params(getattr(args, "params", None))
    if params:
        _set(flags, "potential.params", params)
    for name in ("m", "hbar"):
        value = getattr(args, name, None)
        if value is not None:
            _set(flags, f"potential.units.{name}", value)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                file = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file {args.config}: {e}")
        for key in _conflicts(flags, file):
            logger.warning(f"⚠️ --config overrides the command-line value of {key}")
        flags = _merge(flags, file)
    if "potential" not in flags:
        raise ConfigError("a potential is required (--potential or the config file)")
    return RunConfig.model_validate(flags)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", help="catalog id, e.g. quartic, hulthen")
    common.add_argument("--params", help="model parameters as name=value,...")
    common.add_argument("--m", help="mass (decimal)")
    common.add_argument("--hbar", help="reduced Planck constant (decimal)")
    common.add_argument("--n", type=int, help="number of nodes")
    common.add_argument("--l", type=int, help="angular momentum")
    common.add_argument("--p", type=int, help="QLM depth")
    common.add_argument("--digits", type=int, help="working precision in decimal digits")
    common.add_argument("--guess", choices=["langer", "ik"])
    common.add_argument("--ode-tol", dest="ode_tol")
    common.add_argument("--root-tol", dest="root_tol")
    common.add_argument("--stop-tol", dest="stop_tol")
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--config", help="JSON run configuration; wins over flags")

    parser = argparse.ArgumentParser(prog="riccati-qlm", description="QLM solver for the Riccati form of the Schrödinger equation")
    parser.add_argument("--log-level", default=LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common], help="bound-state energy by QLM shooting")
    solve.add_argument("--escalate-digits", dest="escalate_digits", type=int)
    sub.add_parser("wkb", parents=[common], help="WKB energy")
    series = sub.add_parser("series", parents=[common], help="check the 2^p law at an anchor")
    series.add_argument("--anchor", help="r0 (decimal)")
    series.add_argument("--p-max", dest="p_max", type=int)
    series.add_argument("--energy", help="energy (default: the WKB energy of level n)")
    wave = sub.add_parser("wavefunction", parents=[common], help="χ curves (exact, Langer, first iterate)")
    wave.add_argument("--points", type=int)
    wave.add_argument("--exact-depth", dest="exact_depth", type=int)

    bench = sub.add_parser("benchmark", help="benchmark table and acceptance gates")
    bench.add_argument("--only", help="comma-separated model ids")
    bench.add_argument("--digits", type=int)
    bench.add_argument("--workers", type=int, default=int(os.getenv("QLM_BENCHMARK_WORKERS", "4")))
    bench.add_argument("--no-timing", dest="no_timing", action="store_true")
    bench.add_argument("--output", help="JSON report file (default: stdout)")
    bench.add_argument("--csv", help="also write the row table as CSV")
    bench.add_argument("--benchmark-config", dest="benchmark_config")
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "wkb": cmd_wkb,
    "series": cmd_series,
    "wavefunction": cmd_wavefunction,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO), stream=sys.stderr)
    try:
        if args.command == "benchmark":
            return cmd_benchmark(args)
        return COMMANDS[args.command](build_config(args))
    except (ConfigError, ValidationError) as e:
        logger.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

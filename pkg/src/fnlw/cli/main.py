"""Command-line entrypoint.

    python -m fnlw run --config PATH --out DIR [--store-snapshots]
    python -m fnlw replay --manifest PATH --out DIR [--store-snapshots]
    python -m fnlw sweep (--preset NAME | --config PATH) --out DIR [--refined]
    python -m fnlw rates --summary PATH

Environment:
- FNLW_THREADS caps concurrent runs in a sweep (default: logical cores)
- FNLW_LOG_LEVEL sets the log level (default: INFO)
- APPLICATIONINSIGHTS_CONNECTION_STRING enables trace export when set

Exit status: 0 on success, 1 when a simulation fails, 2 on configuration,
schema or I/O errors.
"""

import argparse
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv
from pydantic import ValidationError

from fnlw import __version__
from fnlw.cli.config import ConfigError, load_json, resolve_run_config, resolve_sweep_config
from fnlw.cli.persistence import (
    RunManifest,
    SchemaError,
    config_checksum,
    read_manifest,
    read_summary,
    write_manifest,
    write_rates,
    write_snapshots,
    write_summary,
    write_timeseries,
)
from fnlw.common.settings import log_level
from fnlw.common.telemetry import enable_observability
from fnlw.experiments import SweepFailedError, SweepResult, fit_summary_rates, preset, run_sweep
from fnlw.initdata import build_initial_data
from fnlw.integrator import SimulationError, SpectralState, run
from fnlw.observables import RunRecord
from fnlw.params import ModelParams

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _report_validation(exc: ValidationError) -> None:
    for error in exc.errors():
        location = ".".join(str(part) for part in error["loc"]) or "config"
        print(f"{location}: {error['msg']}", file=sys.stderr)


def _write_run(out_dir: Path, record: RunRecord, *, extra_outputs: list[str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_timeseries(out_dir / "timeseries.csv", record)
    outputs = ["timeseries.csv", *extra_outputs]
    write_manifest(out_dir / "manifest.json", RunManifest.for_record(record, outputs))


def _execute_run(params: ModelParams, out_dir: Path, *, store_snapshots: bool) -> int:
    try:
        init = build_initial_data(params)
    except ValueError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        record = run(params, init, store_states=store_snapshots)
    except SimulationError as exc:
        logger.error("run failed: %s", exc)
        return EXIT_FAILED

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_snapshots(out_dir / "initial.bin", [SpectralState(u=init.u0, v=init.v0, t=0.0)])
        extra = ["initial.bin"]
        if store_snapshots and record.states is not None:
            write_snapshots(out_dir / "snapshots.bin", record.states)
            extra.append("snapshots.bin")
        _write_run(out_dir, record, extra_outputs=extra)
    except OSError as exc:
        print(f"output: {exc}", file=sys.stderr)
        return EXIT_USAGE

    print(f"S_sup={record.S_sup:.17g} e_inf={record.e_inf:.17g} steps={record.steps} -> {out_dir}")
    return EXIT_OK


def cmd_run(config_path: Path, out_dir: Path, *, store_snapshots: bool = False) -> int:
    try:
        params = resolve_run_config(load_json(config_path))
    except ValidationError as exc:
        _report_validation(exc)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _execute_run(params, out_dir, store_snapshots=store_snapshots)


def cmd_replay(manifest_path: Path, out_dir: Path, *, store_snapshots: bool = False) -> int:
    """Re-execute the run a manifest describes; outputs match the original byte for byte."""
    try:
        manifest = read_manifest(manifest_path)
    except OSError as exc:
        print(f"manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        _report_validation(exc)
        return EXIT_USAGE
    if config_checksum(manifest.params) != manifest.config_checksum:
        print(f"manifest: checksum mismatch in {manifest_path}", file=sys.stderr)
        return EXIT_USAGE
    if manifest.version != __version__:
        logger.warning("replaying a manifest written by fnlw %s with %s", manifest.version, __version__)
    return _execute_run(manifest.params, out_dir, store_snapshots=store_snapshots)


def _write_sweep(out_dir: Path, result: SweepResult) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for (kind, N), record in sorted(result.runs.items()):
        _write_run(out_dir / "runs" / f"N{N}_{kind}", record, extra_outputs=[])
    write_summary(out_dir / "summary.csv", result.summary_rows())
    write_rates(out_dir / "rates.json", result.rates)
    (out_dir / "sweep.json").write_text(result.config.model_dump_json(indent=2) + "\n", encoding="utf-8")


def cmd_sweep(
    out_dir: Path,
    *,
    preset_name: str | None = None,
    config_path: Path | None = None,
    refined: bool = False,
    max_workers: int | None = None,
) -> int:
    try:
        if config_path is not None:
            config = resolve_sweep_config(load_json(config_path))
        elif preset_name is not None:
            config = preset(preset_name)
        else:
            raise ConfigError("either a preset or a config file is required")
        if refined:
            config = config.model_copy(update={"refinement": "refined"})
    except ValidationError as exc:
        _report_validation(exc)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_USAGE

    status = EXIT_OK
    try:
        result = run_sweep(config, max_workers=max_workers)
    except SweepFailedError as exc:
        result = exc.partial
        status = EXIT_FAILED
        for failure in exc.failures:
            print(f"failed: N={failure.N} kind={failure.kind}: {failure.message}", file=sys.stderr)

    try:
        _write_sweep(out_dir, result)
    except OSError as exc:
        print(f"output: {exc}", file=sys.stderr)
        return EXIT_USAGE

    for name, fit in sorted(result.rates.items()):
        print(f"{name}: {fit.exponent:.6f} ± {fit.residual:.6f} ({fit.points} points)")
    return status


def cmd_rates(summary_path: Path) -> int:
    try:
        rows = read_summary(summary_path)
    except OSError as exc:
        print(f"summary: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as exc:
        print(f"schema: {exc}", file=sys.stderr)
        return EXIT_USAGE

    rates = fit_summary_rates(rows)
    if not rates:
        print("no series with at least 3 positive points", file=sys.stderr)
    for name, fit in sorted(rates.items()):
        print(f"{name}: {fit.exponent:.6f} ± {fit.residual:.6f} ({fit.points} points)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fnlw", description="Fractional cubic wave equation experiments")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="execute a single run")
    run_parser.add_argument("--config", type=Path, required=True)
    run_parser.add_argument("--out", type=Path, required=True)
    run_parser.add_argument("--store-snapshots", action="store_true")

    replay_parser = commands.add_parser("replay", help="re-execute a run from its manifest")
    replay_parser.add_argument("--manifest", type=Path, required=True)
    replay_parser.add_argument("--out", type=Path, required=True)
    replay_parser.add_argument("--store-snapshots", action="store_true")

    sweep_parser = commands.add_parser("sweep", help="execute an N = 2^k sweep")
    source = sweep_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset")
    source.add_argument("--config", type=Path)
    sweep_parser.add_argument("--out", type=Path, required=True)
    sweep_parser.add_argument("--refined", action="store_true", help="use tau/2 and 2M")

    rates_parser = commands.add_parser("rates", help="refit power laws from a sweep summary")
    rates_parser.add_argument("--summary", type=Path, required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=log_level(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    enable_observability()

    if args.command == "run":
        return cmd_run(args.config, args.out, store_snapshots=args.store_snapshots)
    if args.command == "replay":
        return cmd_replay(args.manifest, args.out, store_snapshots=args.store_snapshots)
    if args.command == "sweep":
        return cmd_sweep(args.out, preset_name=args.preset, config_path=args.config, refined=args.refined)
    return cmd_rates(args.summary)


if __name__ == "__main__":
    raise SystemExit(main())

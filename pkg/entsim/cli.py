"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from entsim.config import load_config, preset_scenario
from entsim.ephemeris import (
    export_ephemeris,
    import_ephemeris,
    interpolation_residual_km,
    write_ephemeris,
)
from entsim.errors import ConfigErr, SimErr
from entsim.logging_setup import configure_logging
from entsim.orbit import OrbitElements
from entsim.output import OutputOptions, format_table, write_comparison, write_outputs
from entsim.presets import PRESETS, preset_names
from entsim.scenario import Scenario, run_scenario

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load(
    source: Path | None, preset: str | None, overrides: Sequence[str]
) -> Scenario:
    match source, preset:
        case None, None:
            raise ConfigErr("give a configuration file or --preset NAME")
        case Path(), str():
            raise ConfigErr("give a configuration file or --preset NAME, not both")
        case Path(), None:
            return load_config(source, overrides=overrides)
        case _:
            return preset_scenario(preset, overrides=overrides)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load(args.config, args.preset, args.set)
    run = run_scenario(scenario, workers=args.workers)
    options = OutputOptions(samples=not args.no_samples)
    write_outputs(run, args.out, options)
    print(format_table([(scenario.name, run.summary)]), end="")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    scenarios = [load_config(p, overrides=args.set) for p in args.configs]
    scenarios += [
        preset_scenario(name, overrides=args.set) for name in args.preset or []
    ]
    if len(scenarios) < 2:
        raise ConfigErr("compare needs at least two scenarios")
    seen: dict[str, int] = {}
    columns = []
    for scenario in scenarios:
        # repeated names get a numeric suffix so output dirs never collide
        n = seen[scenario.name] = seen.get(scenario.name, 0) + 1
        label = scenario.name if n == 1 else f"{scenario.name}-{n}"
        run = run_scenario(scenario, workers=args.workers)
        write_outputs(run, args.out / label, OutputOptions(samples=not args.no_samples))
        columns.append((label, run.summary))
    write_comparison(columns, args.out)
    print(format_table(columns), end="")
    return EXIT_OK


def cmd_presets(args: argparse.Namespace) -> int:
    width = max(len(name) for name in PRESETS)
    for name in preset_names():
        print(f"{name:<{width}}  {PRESETS[name].description}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = _load(args.config, args.preset, args.set)
    print(
        f"ok: {scenario.name} ({scenario.sample_count} samples, "
        f"{scenario.duration_days:g} days from {scenario.start.isoformat()})"
    )
    return EXIT_OK


def cmd_import_ephemeris(args: argparse.Namespace) -> int:
    table = import_ephemeris(args.file)
    print(
        f"{len(table)} rows ({table.source_frame}), "
        f"{table.start.isoformat()} .. {table.end.isoformat()}, "
        f"interpolation residual {interpolation_residual_km(table):.3g} km"
    )
    if args.out is not None:
        write_ephemeris(table, args.out)
    return EXIT_OK


def cmd_export_ephemeris(args: argparse.Namespace) -> int:
    scenario = _load(args.config, args.preset, args.set)
    if not isinstance(scenario.orbit, OrbitElements):
        raise ConfigErr("scenario is already driven by an ephemeris", path="orbit")
    table = export_ephemeris(
        scenario.orbit, scenario.start, scenario.step_s, scenario.duration_days
    )
    write_ephemeris(table, args.out)
    return EXIT_OK


def _log_level(text: str) -> int:
    level = logging.getLevelName(text.upper())
    if not isinstance(level, int):
        raise argparse.ArgumentTypeError(f"unknown log level: {text}")
    return level


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", type=_log_level, default=logging.INFO)
    common.add_argument("--log-file", type=Path, default=None)

    scenario_args = argparse.ArgumentParser(add_help=False)
    scenario_args.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        help="override one field, e.g. gates.beta_min=25 (repeatable)",
    )

    single = argparse.ArgumentParser(add_help=False, parents=[scenario_args])
    single.add_argument("config", type=Path, nargs="?", help="JSON scenario file")
    single.add_argument("--preset", help="built-in scenario instead of a file")

    running = argparse.ArgumentParser(add_help=False)
    running.add_argument("--workers", type=_positive_int, default=1)
    running.add_argument("--out", type=Path, default=Path("out"))
    running.add_argument(
        "--no-samples", action="store_true", help="skip samples.csv"
    )

    p = argparse.ArgumentParser(
        prog="entsim",
        description="Satellite entanglement-distribution mission simulator",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser(
        "run", parents=[common, single, running], help="run one scenario"
    )
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser(
        "compare", parents=[common, scenario_args, running], help="side-by-side table"
    )
    sp.add_argument("configs", type=Path, nargs="*")
    sp.add_argument("--preset", action="append", help="repeatable")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("presets", parents=[common], help="list built-in scenarios")
    sp.set_defaults(func=cmd_presets)

    sp = sub.add_parser(
        "validate", parents=[common, single], help="check a configuration"
    )
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser(
        "import-ephemeris", parents=[common], help="check an ephemeris CSV"
    )
    sp.add_argument("file", type=Path)
    sp.add_argument("--out", type=Path, default=None, help="write it back as ECI CSV")
    sp.set_defaults(func=cmd_import_ephemeris)

    sp = sub.add_parser(
        "export-ephemeris",
        parents=[common, single],
        help="sample the propagator to CSV",
    )
    sp.add_argument("--out", type=Path, required=True)
    sp.set_defaults(func=cmd_export_ephemeris)
    return p


def run_cli(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_file)
    try:
        return args.func(args)
    except ConfigErr as e:
        log.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except SimErr as e:
        log.exception("Run failed: %s", e)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

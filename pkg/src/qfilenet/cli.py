"""Command-line entry point: ``qfilenet run`` and ``qfilenet sweep``."""

import argparse
import sys
from pathlib import Path

from .errors import ParseError, RangeError
from .harness import csv_header, emit_report, override, parse_config, run_scenario, split_args

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfilenet", description="Quantum-file key distribution simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--format", choices=("text", "csv_row"), default="text")
    run.add_argument("--out", type=Path)

    sweep = sub.add_parser("sweep", help="run a scenario once per value of one key")
    sweep.add_argument("--config", required=True, type=Path)
    sweep.add_argument("--key", required=True)
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--out", type=Path)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8")
        if args.command == "run":
            configs = [parse_config(text)]
        else:
            configs = [parse_config(override(text, args.key, v)) for v in split_args(args.values)]
    except (ParseError, RangeError, OSError, UnicodeDecodeError) as exc:
        print(f"qfilenet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        reports = [run_scenario(cfg) for cfg in configs]
    except Exception as exc:  # noqa: BLE001 - any failure past parsing is a runtime error
        print(f"qfilenet: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if args.command == "run" and args.format == "text":
        output = emit_report(reports[0], "text")
    else:
        output = csv_header() + "\n" + "".join(emit_report(r, "csv_row") + "\n" for r in reports)
    if args.out:
        args.out.write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

    csgauge run SCENARIO [--out DIR] [--format csv|json|both] [--quiet]
    csgauge validate SCENARIO
    csgauge list-kinds

Exit codes: 0 success, 1 contract failure or module error, 2 invalid input.
The default output directory is ``$CSGAUGE_OUT_DIR/<name>`` (or
``./csgauge-out/<name>``) unless the scenario or ``--out`` sets one.
"""

from __future__ import annotations

import argparse
import json
import sys

from ._io import _jsonable
from .runner import EXIT_INPUT, EXIT_OK, run
from .scenario import KINDS, ScenarioError, parse_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csgauge", description="Run gauge-field scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="validate and execute a scenario file")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--format", choices=("csv", "json", "both"), help="override outputs.format")
    p_run.add_argument("--quiet", action="store_true", help="print nothing on success")

    p_val = sub.add_parser("validate", help="check a scenario file without running it")
    p_val.add_argument("scenario")

    sub.add_parser("list-kinds", help="print the accepted scenario kinds")
    return parser


def _print_errors(exc: ScenarioError):
    print("invalid scenario:", file=sys.stderr)
    for err in exc.errors:
        print(f"  {err}", file=sys.stderr)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-kinds":
        for kind in KINDS:
            print(kind)
        return EXIT_OK

    try:
        scenario = parse_scenario(args.scenario)
    except ScenarioError as exc:
        _print_errors(exc)
        return EXIT_INPUT

    if args.command == "validate":
        print(f"ok: {scenario.kind} scenario {scenario.name!r}")
        return EXIT_OK

    report = run(scenario, args.out, args.format)
    if report.error is not None:
        print(f"error: {report.error}", file=sys.stderr)
    if not args.quiet or report.exit_code != EXIT_OK:
        print(f"{scenario.kind} {scenario.name}: {report.status} in {report.wall_time:.3f} s")
        print(f"output directory: {report.out_dir}")
        for name in report.files:
            print(f"  {name}")
        print(json.dumps(_jsonable(report.metrics), sort_keys=True, indent=2))
        for name, ok in report.contracts.items():
            print(f"{'PASS' if ok else 'FAIL'} {name}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())

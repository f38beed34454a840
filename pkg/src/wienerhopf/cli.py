"""Command line front end.

    wienerhopf verify-all --config run.yaml --out results/
    wienerhopf pseudospec --set operator.t=1 --set spectra.z_n=[81,81]

Exit codes: 0 all checks pass, 1 configuration or IO error, 2 at least one
check failed, 3 only inconclusive deviations.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, build, echo
from .pipelines import COMMANDS, Context
from .report import VerificationReport, write_json, write_report

log = logging.getLogger("wienerhopf")

EXIT = {"pass": 0, "fail": 2, "inconclusive": 3}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wienerhopf", description="Numerical checks for shift-commuting operators on weighted half-line spaces.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("-c", "--config", help="YAML or JSON config file")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        sp.add_argument("-o", "--out", help="run directory (overrides output.dir)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def run_command(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build(args.config, args.overrides)
        out = Path(args.out or cfg["output.dir"])
        out.mkdir(parents=True, exist_ok=True)
        ctx = Context(cfg, out)
        checks = COMMANDS[args.command](ctx)
        report = VerificationReport(args.command, checks, echo(cfg), list(ctx.artifacts))
        write_report(report, out / "report.json")
        write_json({"command": args.command, "files": sorted(ctx.artifacts + ["report.json"])}, out / "manifest.json")
    except (ConfigError, ValueError, OSError, MemoryError) as e:
        print(f"wienerhopf: error: {e}", file=sys.stderr)
        return 1
    for c in report.checks:
        log.info("%-40s %s", c.name, c.status)
    print(f"{args.command}: {report.status} ({len(checks)} checks) -> {out / 'report.json'}")
    return EXIT[report.status]


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()

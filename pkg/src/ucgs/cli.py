"""Command line: ``ucgs-bench {run,compare,certify}``.

Exit codes: 0 ok, 2 config error, 3 solver abort, 4 certify failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from . import bench
from .core import SolverAbort


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--out", metavar="PATH", help="CSV output path")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                        help="override one config field (repeatable)")
    common.add_argument("--jobs", metavar="N", type=int, default=1, help="parallel runs for compare")

    ap = argparse.ArgumentParser(prog="ucgs-bench", description="Projection-free solver benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one method and write its trace")
    sub.add_parser("compare", parents=[common], help="LMO counts to reach each epsilon, per method")
    sub.add_parser("certify", parents=[common], help="check every runnable invariant")
    return ap


def _load(args) -> bench.RunConfig:
    text, source = "", "config"
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise bench.ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        source = args.config
    if args.jobs < 1:
        raise bench.ConfigError("--jobs must be at least 1")
    return bench.parse_config(text, args.overrides, source, args.command)


def _run(cfg, args) -> int:
    out = bench.execute(cfg)
    path = args.out or "trace.csv"
    out.trace.write_csv(path)
    print(bench.summary_line(out))
    return bench.EXIT_OK


def _compare(cfg, args) -> int:
    report = bench.compare(cfg, jobs=args.jobs)
    print(report.render(cfg["budget"]))
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(report.to_csv())
    return bench.EXIT_OK


def _certify(cfg, args) -> int:
    verdicts = bench.certify(cfg)
    for v in verdicts:
        print(v.line())
    failed = sum(not v.passed for v in verdicts)
    print(f"{len(verdicts) - failed}/{len(verdicts)} invariants hold")
    return bench.EXIT_OK if failed == 0 else bench.EXIT_CERTIFY


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        handler = {"run": _run, "compare": _compare, "certify": _certify}[args.command]
        return handler(cfg, args)
    except bench.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return bench.EXIT_CONFIG
    except SolverAbort as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return bench.EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())

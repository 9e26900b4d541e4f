"""Command line entry point.

Usage:
    scitech <stage> --config conf.json --run-dir RUN [--seed N]
    scitech all --config conf.json --run-dir RUN [--seed N]
    scitech serve --run-dir RUN --port 8000
    scitech report --run-dir RUN

The run directory defaults to the SCITECH_RUN_DIR environment
variable when --run-dir is omitted.
"""

import argparse
import csv
import dataclasses
import os
import sys
from pathlib import Path

from .config import PipelineConfig, load_config
from .errors import ScitechError
from .pipeline import ANALYTICS_DIR, STAGES, run_all, run_stage

REPORT_TABLES = (
    ("topics by year", "topics_by_year.csv"),
    ("patent counts by applicant country", "counts_by_country.csv"),
    ("patent counts by technology field", "counts_by_field.csv"),
    ("patent counts by topic", "counts_by_topic.csv"),
    ("patent-topic distance by year", "distance_by_year_summary.csv"),
)


def _add_run_dir(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--run-dir",
        default=os.environ.get("SCITECH_RUN_DIR"),
        help="run directory (default: $SCITECH_RUN_DIR)",
    )


def _resolve_run_dir(args) -> Path:
    if not args.run_dir:
        raise ScitechError("no run directory: pass --run-dir or set SCITECH_RUN_DIR")
    return Path(args.run_dir)


def _load_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _print_report(run_dir: Path, out=None) -> None:
    out = sys.stdout if out is None else out
    base = run_dir / ANALYTICS_DIR
    if not base.is_dir():
        raise ScitechError(
            "missing artifact: analytics tables; run the analytics stage first"
        )
    for title, filename in REPORT_TABLES:
        path = base / filename
        if not path.exists():
            raise ScitechError(
                f"missing artifact: {filename}; run the analytics stage first"
            )
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        print(f"== {title} ==", file=out)
        for row in rows:
            print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)), file=out)
        print(file=out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scitech",
        description="publication topic detection and patent linkage pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in STAGES + ("all",):
        help_text = "run all stages in order" if stage == "all" else f"run the {stage} stage"
        p = sub.add_parser(stage, help=help_text)
        p.add_argument("--config", help="pipeline config JSON (default: built-in defaults)")
        _add_run_dir(p)
        p.add_argument("--seed", type=int, help="override the configured seed")

    p = sub.add_parser("serve", help="serve the curation API over a run directory")
    _add_run_dir(p)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")

    p = sub.add_parser("report", help="print all analytics tables")
    _add_run_dir(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run_dir = _resolve_run_dir(args)
        if args.command == "serve":
            from .api import serve

            serve(run_dir, port=args.port, host=args.host)
        elif args.command == "report":
            _print_report(run_dir)
        elif args.command == "all":
            config = _load_config(args)
            for report in run_all(config, run_dir):
                _echo_report(report)
        else:
            config = _load_config(args)
            _echo_report(run_stage(args.command, config, run_dir))
    except ScitechError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _echo_report(report) -> None:
    print(f"[{report.stage}] wrote {len(report.outputs)} artifact(s)")
    for key, value in sorted(report.details.items()):
        print(f"  {key}: {value}")
    for message in report.warnings:
        print(f"  warning: {message}")


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: scan, aggregate, ssdf-report, explain.

Reports go to stdout, diagnostics to stderr. Exit code 0 means the command
ran; 2 means an input or configuration problem. Security scores never
drive the exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .errors import InputError
from .intel import EMPTY_INTEL, load_intel
from .registry import CHECKS, get_check
from .repo import load_snapshot
from .scoring import (
    ScoreReport,
    render_report_json,
    render_report_markdown,
    render_ssdf_json,
    render_ssdf_markdown,
    run_all_checks,
    ssdf_coverage,
)
from .stats import (
    PackageRecord,
    frequency_table,
    render_frequency_csv,
    render_frequency_markdown,
)

INTEL_DIR_ENV = "SCOREHOUND_INTEL_DIR"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scorehound",
        description="Repository security-health scanner and ecosystem statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="score one repository checkout")
    scan.add_argument("repo_path", help="path to the checked-out repository")
    scan.add_argument("--metadata", help="JSON fixture with forge metadata")
    scan.add_argument("--intel", help=f"intelligence directory (fallback: ${INTEL_DIR_ENV})")
    scan.add_argument("--repo", help="repository identity, e.g. github.com/owner/name")
    scan.add_argument("--format", choices=("json", "markdown"), default="json")
    scan.add_argument("--now", type=int, default=None,
                      help="UTC seconds used as the scan time (for reproducible runs)")

    aggregate = sub.add_parser("aggregate", help="build ecosystem frequency tables")
    aggregate.add_argument("records", help="JSON-lines file of package records")
    aggregate.add_argument("--group-by", choices=("ecosystem",), default="ecosystem")
    aggregate.add_argument("--format", choices=("csv", "markdown"), default="csv")
    aggregate.add_argument("--include-inconclusive", action="store_true",
                           help="fold -1 scores into mean/median/std")

    ssdf = sub.add_parser("ssdf-report", help="practice coverage from a scan report")
    ssdf.add_argument("report", help="JSON report produced by `scan`")
    ssdf.add_argument("--threshold", type=int, default=1,
                      help="minimum score that counts a practice as covered")
    ssdf.add_argument("--format", choices=("json", "markdown"), default="markdown")

    explain = sub.add_parser("explain", help="describe one check")
    explain.add_argument("check", help="check name (case-insensitive)")
    return parser


def cmd_scan(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.repo_path, metadata=args.metadata, repo=args.repo)
    intel_dir = args.intel or os.environ.get(INTEL_DIR_ENV)
    intel = load_intel(intel_dir) if intel_dir else EMPTY_INTEL
    now = args.now if args.now is not None else int(time.time())
    report = run_all_checks(snapshot, intel, now)
    if args.format == "markdown":
        sys.stdout.write(render_report_markdown(report))
    else:
        sys.stdout.write(render_report_json(report))
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    try:
        with open(args.records, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise InputError(f"cannot read {args.records}: {exc}") from exc

    records = []
    skipped = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            records.append(PackageRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, InputError, ValueError):
            skipped += 1
    if skipped:
        print(f"warning: {skipped} line(s) skipped", file=sys.stderr)
    if not records:
        raise InputError("no parseable package records")

    rows = frequency_table(records, group_by=args.group_by,
                           include_inconclusive=args.include_inconclusive)
    if args.format == "markdown":
        sys.stdout.write(render_frequency_markdown(rows))
    else:
        sys.stdout.write(render_frequency_csv(rows))
    return 0


def cmd_ssdf_report(args: argparse.Namespace) -> int:
    try:
        with open(args.report, encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise InputError(f"cannot read {args.report}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.report}: invalid JSON at line {exc.lineno}") from exc
    report = ScoreReport.from_dict(payload)
    coverage = ssdf_coverage(report, threshold=args.threshold)
    if args.format == "json":
        sys.stdout.write(render_ssdf_json(coverage))
    else:
        sys.stdout.write(render_ssdf_markdown(coverage))
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    try:
        info = get_check(args.check)
    except KeyError:
        names = ", ".join(check.name for check in CHECKS)
        raise InputError(f"unknown check {args.check!r}; valid names: {names}") from None
    ssdf = ", ".join(sorted(info.ssdf)) if info.ssdf else "(none)"
    status = "implemented" if info.implemented else "reserved (no detector in this build)"
    print(f"{info.name}")
    print(f"  risk: {info.risk.value} (weight {float(info.risk.weight)})")
    print(f"  status: {status}")
    print(f"  what it measures: {info.summary}")
    print(f"  scoring: {info.scoring}")
    print(f"  SSDF practices: {ssdf}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "scan": cmd_scan,
        "aggregate": cmd_aggregate,
        "ssdf-report": cmd_ssdf_report,
        "explain": cmd_explain,
    }
    try:
        return handlers[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

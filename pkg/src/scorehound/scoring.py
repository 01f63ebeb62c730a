"""Check suite execution, risk-weighted aggregation and report rendering.

The aggregate is the weighted mean of conclusive scores only; -1 results
never move it. Arithmetic is exact (rational) before the final one-decimal
rounding so reports are identical across platforms.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from typing import Callable

from . import dependencies, hygiene, intel as intel_mod, workflows
from .errors import InputError, ParseError
from .intel import EMPTY_INTEL, IntelStore
from .registry import CHECKS, IMPLEMENTED_CHECKS, CheckResult, RiskLevel, get_check
from .repo import RepoSnapshot, is_empty
from .rounding import round_half_away

INCONCLUSIVE = "inconclusive"

STATUS_COVERED = "covered"
STATUS_GAP = "gap"
STATUS_UNKNOWN = "unknown"


@dataclass(frozen=True)
class ScoreReport:
    repo: str
    scan_time: int
    results: tuple[CheckResult, ...]
    aggregate: float | str

    def scores_by_name(self) -> dict[str, int]:
        return {result.name: result.score for result in self.results}

    def to_dict(self) -> dict:
        return {
            "repo": self.repo,
            "date": _iso8601(self.scan_time),
            "score": self.aggregate,
            "checks": [
                {
                    "name": result.name,
                    "risk": result.risk.value,
                    "score": result.score,
                    "reason": result.reason,
                    "details": list(result.details),
                }
                for result in self.results
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ScoreReport":
        if not isinstance(payload, dict):
            raise ParseError("score report: expected an object")
        checks = payload.get("checks")
        if not isinstance(checks, list):
            raise ParseError("score report: missing 'checks' array")
        results = []
        for item in checks:
            if not isinstance(item, dict):
                raise ParseError("score report: check entries must be objects")
            try:
                info = get_check(str(item["name"]))
                result = CheckResult(
                    name=info.name,
                    risk=RiskLevel(item.get("risk", info.risk.value)),
                    score=int(item["score"]),
                    reason=str(item.get("reason", "")),
                    details=tuple(str(d) for d in item.get("details", [])),
                )
            except (KeyError, ValueError) as exc:
                raise ParseError(f"score report: bad check entry: {exc}") from exc
            results.append(result)
        score = payload.get("score", INCONCLUSIVE)
        if not isinstance(score, (int, float, str)):
            raise ParseError("score report: bad 'score'")
        if isinstance(score, str) and score != INCONCLUSIVE:
            raise ParseError(f"score report: bad 'score' {score!r}")
        return cls(
            repo=str(payload.get("repo", "")),
            scan_time=_parse_iso8601(payload.get("date")),
            results=tuple(results),
            aggregate=float(score) if isinstance(score, (int, float)) else score,
        )


def _iso8601(timestamp: int) -> str:
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_iso8601(value: object) -> int:
    if not isinstance(value, str):
        return 0
    try:
        parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        return 0
    return int(parsed.timestamp())


def aggregate_score(results: list[CheckResult] | tuple[CheckResult, ...]) -> float | str:
    """Risk-weighted mean of conclusive scores, one decimal, half away from zero."""
    if not results:
        raise InputError("aggregate_score requires at least one result")
    total = Fraction(0)
    weight_sum = Fraction(0)
    for result in results:
        if result.score < 0:
            continue
        weight = result.risk.weight
        total += result.score * weight
        weight_sum += weight
    if weight_sum == 0:
        return INCONCLUSIVE
    return float(round_half_away(total / weight_sum, 1))


def run_all_checks(snapshot: RepoSnapshot, intel: IntelStore | None = None,
                   now: int | None = None) -> ScoreReport:
    """Run every implemented check once, in registry (risk) order."""
    if intel is None:
        intel = EMPTY_INTEL
    if now is None:
        now = int(time.time())

    if is_empty(snapshot):
        results = tuple(info.result(-1, "empty repository") for info in IMPLEMENTED_CHECKS)
        return ScoreReport(repo=snapshot.repo_id, scan_time=now,
                           results=results, aggregate=INCONCLUSIVE)

    def packaging(snap: RepoSnapshot) -> CheckResult:
        return hygiene.check_packaging(snap, workflows.detect_publish_signals(snap))

    runners: dict[str, Callable[[RepoSnapshot], CheckResult]] = {
        "Dangerous-Workflow": workflows.check_dangerous_workflow,
        "Vulnerabilities": lambda s: intel_mod.check_vulnerabilities(s, intel),
        "Binary-Artifacts": dependencies.check_binary_artifacts,
        "Token-Permissions": workflows.check_token_permissions,
        "Code-Review": hygiene.check_code_review,
        "Maintained": lambda s: hygiene.check_maintained(s, now),
        "Branch-Protection": hygiene.check_branch_protection,
        "Dependency-Update-Tool": dependencies.check_dependency_update_tool,
        "Signed-Releases": hygiene.check_signed_releases,
        "Pinned-Dependencies": dependencies.check_pinned_dependencies,
        "Security-Policy": hygiene.check_security_policy,
        "Packaging": packaging,
        "Fuzzing": lambda s: intel_mod.check_fuzzing(s, intel),
        "License": hygiene.check_license,
        "CII-Best-Practices": lambda s: intel_mod.check_cii_best_practices(s, intel),
    }

    results = []
    for info in IMPLEMENTED_CHECKS:
        runner = runners[info.name]
        try:
            results.append(runner(snapshot))
        except Exception as exc:  # a broken check must not sink the scan
            results.append(info.result(-1, "internal error", (f"{type(exc).__name__}: {exc}",)))
    return ScoreReport(repo=snapshot.repo_id, scan_time=now,
                       results=tuple(results), aggregate=aggregate_score(results))


@dataclass(frozen=True)
class PracticeStatus:
    practice: str
    status: str
    checks: tuple[tuple[str, int], ...]  # (check name, score) for mapped, scored checks


@dataclass(frozen=True)
class SsdfReport:
    threshold: int
    practices: tuple[PracticeStatus, ...]
    unmapped_checks: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "practices": [
                {
                    "practice": status.practice,
                    "status": status.status,
                    "checks": [{"name": name, "score": score} for name, score in status.checks],
                }
                for status in self.practices
            ],
            "unmapped_checks": list(self.unmapped_checks),
        }


def ssdf_coverage(report: ScoreReport, threshold: int = 1) -> SsdfReport:
    """Practice coverage: any mapped check at or above the threshold covers it."""
    if not 0 <= threshold <= 10:
        raise InputError(f"threshold {threshold} outside [0, 10]")
    scores = report.scores_by_name()
    practices = []
    for practice in _all_practices():
        mapped = [(info.name, scores[info.name])
                  for info in CHECKS if practice in info.ssdf and info.name in scores]
        if not mapped:
            status = STATUS_UNKNOWN
        elif any(score >= threshold for _, score in mapped):
            status = STATUS_COVERED
        elif all(score == -1 for _, score in mapped):
            status = STATUS_UNKNOWN
        else:
            status = STATUS_GAP
        practices.append(PracticeStatus(practice=practice, status=status,
                                        checks=tuple(mapped)))
    unmapped = tuple(info.name for info in CHECKS if not info.ssdf)
    return SsdfReport(threshold=threshold, practices=tuple(practices),
                      unmapped_checks=unmapped)


def _all_practices() -> tuple[str, ...]:
    practices: set[str] = set()
    for info in CHECKS:
        practices.update(info.ssdf)
    return tuple(sorted(practices))


def render_report_json(report: ScoreReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def render_report_markdown(report: ScoreReport) -> str:
    score = report.aggregate
    score_text = score if isinstance(score, str) else f"{score:.1f}"
    lines = [
        "# Security health report",
        "",
        f"- Repository: {report.repo}",
        f"- Date: {_iso8601(report.scan_time)}",
        f"- Aggregate score: {score_text}",
        "",
        "| Check | Risk | Score | Reason |",
        "| --- | --- | --- | --- |",
    ]
    for result in report.results:
        lines.append(f"| {result.name} | {result.risk.value} | {result.score} "
                     f"| {result.reason} |")
    detailed = [result for result in report.results if result.details]
    if detailed:
        lines.append("")
        lines.append("## Details")
        for result in detailed:
            lines.append("")
            lines.append(f"### {result.name}")
            lines.extend(f"- {detail}" for detail in result.details)
    return "\n".join(lines) + "\n"


def render_ssdf_markdown(report: SsdfReport) -> str:
    lines = [
        "# SSDF practice coverage",
        "",
        f"- Coverage threshold: score >= {report.threshold}",
        "",
        "| Practice | Status | Evidence |",
        "| --- | --- | --- |",
    ]
    for status in report.practices:
        evidence = ", ".join(f"{name}={score}" for name, score in status.checks) or "-"
        lines.append(f"| {status.practice} | {status.status} | {evidence} |")
    lines.append("")
    lines.append("Checks without a practice mapping: "
                 + ", ".join(report.unmapped_checks))
    return "\n".join(lines) + "\n"


def render_ssdf_json(report: SsdfReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"

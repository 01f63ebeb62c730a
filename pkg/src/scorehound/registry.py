"""Check registry: names, risk weights, SSDF practice mappings, outcomes.

Eighteen check names are registered; fifteen ship a detector. CI-Tests,
SAST and Contributors are reserved names without detectors and never
appear in scan reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class RiskLevel(Enum):
    CRITICAL = "critical"
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"

    @property
    def weight(self) -> Fraction:
        return _RISK_WEIGHTS[self]


_RISK_WEIGHTS = {
    RiskLevel.CRITICAL: Fraction(10),
    RiskLevel.HIGH: Fraction(15, 2),
    RiskLevel.MEDIUM: Fraction(5),
    RiskLevel.LOW: Fraction(5, 2),
}


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one check: -1 means inconclusive, 0..10 is conclusive."""

    name: str
    risk: RiskLevel
    score: int
    reason: str
    details: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.score != -1 and not 0 <= self.score <= 10:
            raise ValueError(f"score {self.score} outside {{-1}} union [0, 10]")


@dataclass(frozen=True)
class CheckInfo:
    name: str
    risk: RiskLevel
    ssdf: frozenset[str]
    implemented: bool
    summary: str
    scoring: str

    def result(self, score: int, reason: str, details: tuple[str, ...] = ()) -> CheckResult:
        return CheckResult(name=self.name, risk=self.risk, score=score,
                           reason=reason, details=details)


def _check(name: str, risk: RiskLevel, ssdf: tuple[str, ...], summary: str,
           scoring: str, implemented: bool = True) -> CheckInfo:
    return CheckInfo(name=name, risk=risk, ssdf=frozenset(ssdf),
                     implemented=implemented, summary=summary, scoring=scoring)


# Ordered critical -> low; report output follows this order.
CHECKS: tuple[CheckInfo, ...] = (
    _check(
        "Dangerous-Workflow", RiskLevel.CRITICAL, (),
        "Flags CI workflows where attacker-controlled event text can reach a "
        "shell, or where a privileged trigger checks out untrusted code.",
        "-1 without any workflow files or when none parse; 0 when any "
        "dangerous pattern is found; 10 otherwise.",
    ),
    _check(
        "Vulnerabilities", RiskLevel.HIGH, ("PW.4", "RV.1"),
        "Counts open entries for the repository in a local vulnerability-"
        "database snapshot.",
        "-1 without vulnerability intelligence or for an empty repository; "
        "otherwise max(0, 10 - open_vulnerability_count).",
    ),
    _check(
        "Binary-Artifacts", RiskLevel.HIGH, (),
        "Counts checked-in executable binaries, which cannot be reviewed "
        "as source.",
        "max(0, 10 - binary_file_count).",
    ),
    _check(
        "Token-Permissions", RiskLevel.HIGH, ("PO.5", "PS.1"),
        "Verifies that workflow token grants default to read-only at the "
        "top level of each workflow file.",
        "-1 without workflows; otherwise round(10 x compliant / parsed); a "
        "workflow complies when it declares top-level permissions with no "
        "write grant (job-level writes are allowed).",
    ),
    _check(
        "Code-Review", RiskLevel.HIGH, ("PW.7", "RV.1"),
        "Checks that changes land through review, either via a required-"
        "reviewer rule or evidence on recent commits.",
        "-1 without forge metadata or commits; 10 when the default branch "
        "requires at least one reviewer; otherwise floor(10 x reviewed / "
        "considered) over the newest <=30 commits.",
    ),
    _check(
        "Maintained", RiskLevel.HIGH, ("PW.4",),
        "Measures commit and maintainer issue activity over the last 90 days.",
        "-1 without forge metadata; 0 when archived; otherwise "
        "min(10, floor(10 x ninety_day_activity / 13)).",
    ),
    _check(
        "Branch-Protection", RiskLevel.HIGH, ("PS.1",),
        "Grades the default branch's protection rules on five cumulative "
        "tiers.",
        "-1 without any protection record; otherwise 2 points per fully "
        "satisfied tier: force-push and deletion blocking; one required "
        "reviewer; required status checks; two reviewers; stale-review "
        "dismissal.",
    ),
    _check(
        "Dependency-Update-Tool", RiskLevel.HIGH, ("PO.3", "PW.4"),
        "Detects dependabot or renovate configuration for automated "
        "dependency updates.",
        "10 when a dependabot or renovate config file exists; 0 otherwise.",
    ),
    _check(
        "Signed-Releases", RiskLevel.HIGH, ("PS.1", "PS.2", "PS.3"),
        "Looks for detached signature assets on the newest releases, "
        "falling back to verified tags when no releases exist.",
        "-1 without forge metadata or when there are neither releases nor "
        "tags; otherwise round(10 x signed / considered) over the newest "
        "<=5 releases (or verified among the newest <=5 tags).",
    ),
    _check(
        "Pinned-Dependencies", RiskLevel.MEDIUM, (),
        "Measures how many dependency references (container images, action "
        "refs, fetch-and-run scripts, manifest entries) are pinned to "
        "immutable versions.",
        "-1 when no dependency references exist anywhere; otherwise "
        "round(10 x pinned / total).",
    ),
    _check(
        "Security-Policy", RiskLevel.MEDIUM, ("RV.1",),
        "Looks for a vulnerability reporting policy file.",
        "10 when SECURITY.md or security.rst exists at the top level or "
        "under .github/; 0 otherwise.",
    ),
    _check(
        "Packaging", RiskLevel.MEDIUM, (),
        "Detects CI steps that publish the package to a registry.",
        "10 when any workflow step publishes to a registry; -1 otherwise, "
        "because publishing may legitimately happen outside CI.",
    ),
    _check(
        "Fuzzing", RiskLevel.MEDIUM, ("PW.8",),
        "Checks membership in a continuous-fuzzing project list.",
        "-1 without a project list; 10 when the repository is listed; 0 "
        "otherwise.",
    ),
    _check(
        "SAST", RiskLevel.MEDIUM, ("PW.7", "PW.8"),
        "Reserved: static-analysis adoption.",
        "No detector in this build; never scored.",
        implemented=False,
    ),
    _check(
        "License", RiskLevel.LOW, (),
        "Looks for a published license file or declaration.",
        "10 for a dedicated top-level license file or a LICENSES/ "
        "directory; 9 for a README license section or a packaging-metadata "
        "license field; 0 otherwise.",
    ),
    _check(
        "CII-Best-Practices", RiskLevel.LOW, ("PS.1", "PS.2", "RV.1", "PW.5", "PW.8"),
        "Maps a best-practices badge level onto the score scale.",
        "-1 without badge intelligence; 0 without a badge; in-progress 2, "
        "passing 5, silver 7, gold 10.",
    ),
    _check(
        "CI-Tests", RiskLevel.LOW, ("RV.1",),
        "Reserved: CI test runs on recent changes.",
        "No detector in this build; never scored.",
        implemented=False,
    ),
    _check(
        "Contributors", RiskLevel.LOW, (),
        "Reserved: contributor organization diversity.",
        "No detector in this build; never scored.",
        implemented=False,
    ),
)

CHECKS_BY_NAME = {info.name.casefold(): info for info in CHECKS}

IMPLEMENTED_CHECKS: tuple[CheckInfo, ...] = tuple(c for c in CHECKS if c.implemented)


def get_check(name: str) -> CheckInfo:
    info = CHECKS_BY_NAME.get(name.casefold())
    if info is None:
        raise KeyError(name)
    return info


def all_ssdf_practices() -> tuple[str, ...]:
    """Every SSDF practice ID appearing in the registry, sorted."""
    practices: set[str] = set()
    for info in CHECKS:
        practices.update(info.ssdf)
    return tuple(sorted(practices))

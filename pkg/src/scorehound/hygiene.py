"""Repository hygiene checks: license, policy, activity, review, releases.

Checks that rest on forge metadata (commit history, branch protection,
releases) report -1 when no metadata fixture was supplied, keeping
inconclusive distinct from conclusively bad.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .registry import CheckResult, get_check
from .repo import FileKind, ProtectionSettings, RepoSnapshot
from .rounding import ratio_score
from .workflows import PublishSignal

NINETY_DAYS = 90 * 86400
WEEKS_IN_WINDOW = 13
MAINTAINER_ASSOCIATIONS = {"COLLABORATOR", "MEMBER", "OWNER"}

SIGNATURE_SUFFIXES = (".minisig", ".asc", ".sig", ".sign")

README_LICENSE_HEADING_RE = re.compile(r"^#{1,6}\s*licen[cs]e\b", re.IGNORECASE | re.MULTILINE)
SPDX_RE = re.compile(r"SPDX-License-Identifier:")
SETUP_LICENSE_RE = re.compile(r"\blicense\s*=\s*['\"]")

SOURCE_DEDICATED_FILE = "dedicated-file"
SOURCE_LICENSES_DIR = "licenses-dir"
SOURCE_README_SECTION = "readme-section"
SOURCE_SETUP_FIELD = "setup-field"


@dataclass(frozen=True)
class LicenseEvidence:
    source: str
    path: str
    detail: str = ""


def find_license_evidence(snapshot: RepoSnapshot) -> list[LicenseEvidence]:
    evidence = []
    for entry in snapshot.files_of_kind(FileKind.LICENSE_CANDIDATE):
        parts = entry.path.split("/")
        if len(parts) == 1:
            evidence.append(LicenseEvidence(SOURCE_DEDICATED_FILE, entry.path))
        elif parts[0].upper() == "LICENSES":
            evidence.append(LicenseEvidence(SOURCE_LICENSES_DIR, entry.path))

    for entry in snapshot.files:
        if "/" in entry.path:
            continue
        lower = entry.path.lower()
        if lower.startswith("readme"):
            text = snapshot.read_text(entry.path) or ""
            heading = README_LICENSE_HEADING_RE.search(text)
            spdx = SPDX_RE.search(text)
            if heading or spdx:
                detail = (heading or spdx).group(0).strip()
                evidence.append(LicenseEvidence(SOURCE_README_SECTION, entry.path, detail))
        elif lower == "setup.py":
            text = snapshot.read_text(entry.path) or ""
            if SETUP_LICENSE_RE.search(text):
                evidence.append(LicenseEvidence(SOURCE_SETUP_FIELD, entry.path, "license keyword"))
        elif lower == "pyproject.toml":
            text = snapshot.read_text(entry.path) or ""
            try:
                payload = tomllib.loads(text)
            except tomllib.TOMLDecodeError:
                continue
            project_license = (payload.get("project") or {}).get("license")
            poetry_license = ((payload.get("tool") or {}).get("poetry") or {}).get("license")
            if project_license or poetry_license:
                evidence.append(LicenseEvidence(SOURCE_SETUP_FIELD, entry.path, "license field"))
    return evidence


def check_license(snapshot: RepoSnapshot) -> CheckResult:
    """Dedicated license files score 10, weaker declarations score 9."""
    info = get_check("License")
    evidence = find_license_evidence(snapshot)
    strong = [e for e in evidence if e.source in (SOURCE_DEDICATED_FILE, SOURCE_LICENSES_DIR)]
    weak = [e for e in evidence if e.source in (SOURCE_README_SECTION, SOURCE_SETUP_FIELD)]
    if strong:
        return info.result(10, f"license file found: {strong[0].path}",
                           tuple(f"{e.path} ({e.source})" for e in strong))
    if weak:
        return info.result(9, f"license declared without a dedicated file: {weak[0].path}",
                           tuple(f"{e.path} ({e.source})" for e in weak))
    return info.result(0, "no license evidence found")


def check_security_policy(snapshot: RepoSnapshot) -> CheckResult:
    """Security policy file at the top level or under .github/."""
    info = get_check("Security-Policy")
    hits = snapshot.files_of_kind(FileKind.SECURITY_POLICY_CANDIDATE)
    if hits:
        return info.result(10, f"security policy found: {hits[0].path}",
                           tuple(entry.path for entry in hits))
    return info.result(0, "no security policy file found")


def check_maintained(snapshot: RepoSnapshot, now: int) -> CheckResult:
    """Commit plus maintainer issue activity in the trailing 90 days."""
    info = get_check("Maintained")
    if not snapshot.metadata_present:
        return info.result(-1, "no forge metadata; activity unknown")
    if snapshot.archived:
        return info.result(0, "repository is archived")
    window_start = now - NINETY_DAYS
    commit_count = sum(1 for c in snapshot.commits if window_start <= c.timestamp <= now)
    issue_count = sum(
        1 for ev in snapshot.issues
        if window_start <= ev.created_at <= now
        and ev.author_association.upper() in MAINTAINER_ASSOCIATIONS
    )
    activity = commit_count + issue_count
    score = min(10, (10 * activity) // WEEKS_IN_WINDOW)
    reason = (f"{activity} activity event(s) in the last 90 days "
              f"({commit_count} commits, {issue_count} maintainer issues)")
    return info.result(score, reason)


def check_code_review(snapshot: RepoSnapshot) -> CheckResult:
    """Required-reviewer rule first, then review evidence on recent commits."""
    info = get_check("Code-Review")
    if not snapshot.metadata_present or not snapshot.commits:
        return info.result(-1, "no forge metadata or commit history")
    protection = snapshot.branch_protection.get(snapshot.default_branch)
    if protection is not None and protection.enabled and protection.required_reviewers >= 1:
        return info.result(10, "default branch requires at least one reviewer")
    considered = snapshot.commits[:30]
    reviewed = sum(
        1 for c in considered
        if c.approved_review_platforms or (c.merger is not None and c.merger != c.committer)
    )
    score = (10 * reviewed) // len(considered)
    details = []
    if len(snapshot.contributors) == 1:
        details.append("single maintainer; review exemption left to the caller")
    reason = f"{reviewed}/{len(considered)} recent commits show review evidence"
    return info.result(score, reason, tuple(details))


_TIER_REQUIREMENTS = (
    "force-push and deletion blocking",
    "at least one required reviewer",
    "required status checks",
    "at least two required reviewers",
    "stale-review dismissal",
)


def _protection_tier(p: ProtectionSettings) -> int:
    tiers = (
        p.enabled and p.block_force_push and p.block_deletion,
        p.required_reviewers >= 1,
        p.status_checks_required,
        p.required_reviewers >= 2,
        p.dismiss_stale_reviews,
    )
    reached = 0
    for satisfied in tiers:
        if not satisfied:
            break
        reached += 1
    return reached


def check_branch_protection(snapshot: RepoSnapshot) -> CheckResult:
    """Five cumulative tiers over the default branch's protection rules."""
    info = get_check("Branch-Protection")
    if not snapshot.metadata_present:
        return info.result(-1, "no forge metadata; protection unknown")
    release_branches = {r.tag for r in snapshot.releases} & set(snapshot.branch_protection)
    evaluated = {snapshot.default_branch} | release_branches
    if not any(branch in snapshot.branch_protection for branch in evaluated):
        return info.result(-1, "no protection record for the evaluated branches")
    protection = snapshot.branch_protection.get(snapshot.default_branch,
                                                ProtectionSettings())
    tier = _protection_tier(protection)
    details = []
    if tier < 5:
        details.append(f"first unmet tier: {_TIER_REQUIREMENTS[tier]}")
    if protection.admin_fields_omitted:
        details.append("admin-only settings absent from metadata; treated as unmet")
    if tier == 0:
        return info.result(0, "branch protection disabled on the default branch",
                           tuple(details))
    return info.result(2 * tier, f"branch protection tier {tier} of 5", tuple(details))


def check_signed_releases(snapshot: RepoSnapshot) -> CheckResult:
    """Signature assets on the newest releases, or verified tags as fallback."""
    info = get_check("Signed-Releases")
    if not snapshot.metadata_present:
        return info.result(-1, "no forge metadata; releases unknown")
    if not snapshot.releases and not snapshot.tags:
        return info.result(-1, "no releases or tags to evaluate")
    if snapshot.releases:
        considered = snapshot.releases[:5]
        signed = sum(
            1 for release in considered
            if any(asset.endswith(SIGNATURE_SUFFIXES) for asset in release.asset_names)
        )
        score = ratio_score(signed, len(considered))
        return info.result(score,
                           f"{signed}/{len(considered)} newest releases carry signature assets")
    considered_tags = snapshot.tags[:5]
    verified = sum(1 for tag in considered_tags if tag.verified)
    score = ratio_score(verified, len(considered_tags))
    return info.result(score,
                       f"{verified}/{len(considered_tags)} newest tags are verified "
                       "(no releases published)")


def check_packaging(snapshot: RepoSnapshot,
                    publish_signals: list[PublishSignal]) -> CheckResult:
    """Publishing from CI scores 10; absence of evidence is inconclusive."""
    info = get_check("Packaging")
    if publish_signals:
        details = tuple(f"{s.path}:{s.line}: {s.mechanism}" for s in publish_signals)
        return info.result(10, "registry-publishing workflow step found", details)
    return info.result(-1, "no registry-publishing workflow step found; "
                           "publishing may happen outside CI")

"""Checks backed by local intelligence files.

Vulnerability counts, fuzzing-project membership and best-practices badge
levels come from files in an intelligence directory, never from the
repository tree. Each source distinguishes "absent" (checks report -1)
from "present but empty" (checks score conclusively), so a missing data
file never produces a clean bill of health.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError, ParseError
from .registry import CheckResult, get_check
from .repo import RepoSnapshot, is_empty

BADGE_SCORES = {"in-progress": 2, "passing": 5, "silver": 7, "gold": 10}

_SCHEME_RE = re.compile(r"^[a-z][a-z0-9+.-]*://")
_SSH_RE = re.compile(r"^(?:[\w.-]+@)([\w.-]+):(.+)$")


def normalize_repo_identity(text: str) -> str:
    """Canonical lowercase host/owner/name triple for intelligence lookups."""
    value = text.strip().lower()
    value = _SCHEME_RE.sub("", value)
    ssh = _SSH_RE.match(value)
    if ssh:
        value = f"{ssh.group(1)}/{ssh.group(2)}"
    value = value.strip("/")
    if value.endswith(".git"):
        value = value[: -len(".git")]
    parts = [part for part in value.split("/") if part]
    if not parts:
        return ""
    if "." not in parts[0]:
        parts.insert(0, "github.com")
    return "/".join(parts[:3])


@dataclass(frozen=True)
class IntelStore:
    """Local security intelligence; None marks a source as absent."""

    osv: dict[str, tuple[str, ...]] | None = None
    ossfuzz: frozenset[str] | None = None
    cii: dict[str, str] | None = None


EMPTY_INTEL = IntelStore()


def _load_osv(path: Path) -> dict[str, tuple[str, ...]]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path.name}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("repos"), dict):
        raise ParseError(f"{path.name}: expected an object with a 'repos' map")
    table: dict[str, tuple[str, ...]] = {}
    for repo, ids in payload["repos"].items():
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise ParseError(f"{path.name}: repos[{repo!r}] must be a list of IDs")
        table[normalize_repo_identity(repo)] = tuple(dict.fromkeys(ids))
    return table


def _load_ossfuzz(path: Path) -> frozenset[str]:
    identities = set()
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        identity = normalize_repo_identity(line)
        if not identity:
            raise ParseError(f"{path.name}: line {number}: unusable repository URL")
        identities.add(identity)
    return frozenset(identities)


def _load_cii(path: Path) -> dict[str, str]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path.name}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(payload, dict):
        raise ParseError(f"{path.name}: expected an object of repo -> badge level")
    table = {}
    for repo, level in payload.items():
        if level not in BADGE_SCORES:
            raise ParseError(f"{path.name}: {repo}: unknown badge level {level!r}")
        table[normalize_repo_identity(repo)] = level
    return table


def load_intel(directory: Path | str) -> IntelStore:
    """Read osv.json, ossfuzz.txt and cii.json; each file is optional."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"intelligence directory {directory} is not a directory")
    osv_path = directory / "osv.json"
    ossfuzz_path = directory / "ossfuzz.txt"
    cii_path = directory / "cii.json"
    return IntelStore(
        osv=_load_osv(osv_path) if osv_path.is_file() else None,
        ossfuzz=_load_ossfuzz(ossfuzz_path) if ossfuzz_path.is_file() else None,
        cii=_load_cii(cii_path) if cii_path.is_file() else None,
    )


def check_vulnerabilities(snapshot: RepoSnapshot, intel: IntelStore) -> CheckResult:
    """One point lost per open vulnerability recorded for the repository."""
    info = get_check("Vulnerabilities")
    if intel.osv is None:
        return info.result(-1, "no vulnerability intelligence available")
    if is_empty(snapshot):
        return info.result(-1, "empty repository")
    ids = intel.osv.get(normalize_repo_identity(snapshot.repo_id), ())
    score = max(0, 10 - len(ids))
    return info.result(score, f"{len(ids)} open vulnerabilities on record", tuple(ids))


def check_fuzzing(snapshot: RepoSnapshot, intel: IntelStore) -> CheckResult:
    """Fuzzing adoption proven by membership in the project list."""
    info = get_check("Fuzzing")
    if intel.ossfuzz is None:
        return info.result(-1, "no fuzzing project list available")
    if normalize_repo_identity(snapshot.repo_id) in intel.ossfuzz:
        return info.result(10, "repository is in the fuzzing project list")
    return info.result(0, "repository is not in the fuzzing project list")


def check_cii_best_practices(snapshot: RepoSnapshot, intel: IntelStore) -> CheckResult:
    """Badge level mapped onto the score scale."""
    info = get_check("CII-Best-Practices")
    if intel.cii is None:
        return info.result(-1, "no badge registry available")
    level = intel.cii.get(normalize_repo_identity(snapshot.repo_id))
    if level is None:
        return info.result(0, "no best-practices badge")
    return info.result(BADGE_SCORES[level], f"best-practices badge: {level}")

"""Immutable snapshot of a repository checkout plus optional forge metadata.

A snapshot is built once from a directory tree (and, when supplied, a JSON
metadata fixture carrying commits, releases, branch protection and issue
events) and is then shared read-only by every check. Forge metadata never
comes from live API calls, which keeps scans reproducible offline.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path, PurePosixPath
from typing import Any, Iterator

from .errors import InputError, ParseError

PREFIX_BYTES = 8192

VCS_INTERNALS = {".git"}

# Extensions that may carry executable payloads. A match alone is not
# enough: the content prefix must also fail to decode as UTF-8 text.
BINARY_EXTENSIONS = {
    ".exe", ".dll", ".so", ".dylib", ".jar", ".war", ".ear", ".class",
    ".pyc", ".pyo", ".pyd", ".wasm", ".o", ".a", ".obj", ".lib", ".bin",
    ".elf", ".apk", ".msi", ".deb", ".rpm", ".dex", ".crx", ".nupkg",
    ".whl",
}

NEVER_BINARY_EXTENSIONS = {".txt", ".md"}

LICENSE_STEMS = {"LICENSE", "LICENCE", "COPYING", "COPYRIGHT"}
LICENSE_EXTENSIONS = {"", ".txt", ".md", ".html"}

MANIFEST_NAMES = {"package.json", "package-lock.json", "setup.py", "pyproject.toml"}

SECURITY_POLICY_NAMES = {"security.md", "security.rst"}

SHELL_INTERPRETERS = ("sh", "bash", "dash", "zsh", "ksh")


class FileKind(Enum):
    WORKFLOW = "workflow"
    DOCKERFILE = "dockerfile"
    SHELL_SCRIPT = "shell-script"
    MANIFEST = "manifest"
    LICENSE_CANDIDATE = "license-candidate"
    SECURITY_POLICY_CANDIDATE = "security-policy-candidate"
    BINARY = "binary"
    TEXT = "text"
    OTHER = "other"


@dataclass(frozen=True)
class FileEntry:
    path: str
    size_bytes: int
    kind: FileKind
    line_count: int = 0


@dataclass(frozen=True)
class CommitRecord:
    id: str
    author: str
    committer: str
    merger: str | None
    timestamp: int
    approved_review_platforms: frozenset[str]
    message: str = ""


@dataclass(frozen=True)
class ReleaseRecord:
    tag: str
    created_at: int
    asset_names: tuple[str, ...] = ()


@dataclass(frozen=True)
class TagRecord:
    name: str
    timestamp: int
    verified: bool = False


@dataclass(frozen=True)
class ProtectionSettings:
    enabled: bool = False
    block_force_push: bool = False
    block_deletion: bool = False
    required_reviewers: int = 0
    status_checks_required: bool = False
    dismiss_stale_reviews: bool = False
    # True when the fixture omitted admin-only keys; those count as unmet
    # but the leniency is surfaced in check details.
    admin_fields_omitted: bool = False


@dataclass(frozen=True)
class IssueEvent:
    created_at: int
    author_association: str


@dataclass(frozen=True)
class RepoSnapshot:
    root: Path
    repo_id: str
    files: tuple[FileEntry, ...]
    default_branch: str = ""
    commits: tuple[CommitRecord, ...] = ()
    releases: tuple[ReleaseRecord, ...] = ()
    tags: tuple[TagRecord, ...] = ()
    branch_protection: dict[str, ProtectionSettings] = field(default_factory=dict)
    issues: tuple[IssueEvent, ...] = ()
    contributors: tuple[tuple[str, str], ...] = ()
    archived: bool = False
    metadata_present: bool = False

    def files_of_kind(self, kind: FileKind) -> tuple[FileEntry, ...]:
        return tuple(entry for entry in self.files if entry.kind is kind)

    def has_path(self, path: str) -> bool:
        return any(entry.path == path for entry in self.files)

    def read_bytes(self, path: str) -> bytes | None:
        """Raw content of a tracked file; None for symlinks and misses."""
        full = self.root / PurePosixPath(path)
        if full.is_symlink() or not full.is_file():
            return None
        return full.read_bytes()

    def read_text(self, path: str) -> str | None:
        data = self.read_bytes(path)
        if data is None:
            return None
        return data.decode("utf-8", errors="replace")

    def to_dict(self) -> dict[str, Any]:
        """Stable plain-data form, used for round-trip and determinism tests."""
        return {
            "repo_id": self.repo_id,
            "default_branch": self.default_branch,
            "archived": self.archived,
            "metadata_present": self.metadata_present,
            "files": [
                {
                    "path": entry.path,
                    "size_bytes": entry.size_bytes,
                    "kind": entry.kind.value,
                    "line_count": entry.line_count,
                }
                for entry in self.files
            ],
            "commits": [
                {
                    "id": commit.id,
                    "author": commit.author,
                    "committer": commit.committer,
                    "merger": commit.merger,
                    "timestamp": commit.timestamp,
                    "approved_review_platforms": sorted(commit.approved_review_platforms),
                    "message": commit.message,
                }
                for commit in self.commits
            ],
            "releases": [
                {"tag": rel.tag, "created_at": rel.created_at, "assets": list(rel.asset_names)}
                for rel in self.releases
            ],
            "tags": [
                {"name": tag.name, "timestamp": tag.timestamp, "verified": tag.verified}
                for tag in self.tags
            ],
            "branch_protection": {
                name: {
                    "enabled": prot.enabled,
                    "block_force_push": prot.block_force_push,
                    "block_deletion": prot.block_deletion,
                    "required_reviewers": prot.required_reviewers,
                    "status_checks_required": prot.status_checks_required,
                    "dismiss_stale_reviews": prot.dismiss_stale_reviews,
                }
                for name, prot in sorted(self.branch_protection.items())
            },
            "issues": [
                {"created_at": ev.created_at, "author_association": ev.author_association}
                for ev in self.issues
            ],
            "contributors": [list(pair) for pair in self.contributors],
        }


def is_empty(snapshot: RepoSnapshot) -> bool:
    """True when the tree has no tracked content at all."""
    return not snapshot.files


def _is_utf8_text(prefix: bytes) -> bool:
    try:
        prefix.decode("utf-8")
        return True
    except UnicodeDecodeError as exc:
        # A multi-byte character cut off at the prefix boundary is still text.
        return exc.start >= len(prefix) - 3 and exc.reason == "unexpected end of data"


def _shebang_is_shell(content_prefix: bytes) -> bool:
    if not content_prefix.startswith(b"#!"):
        return False
    first_line = content_prefix.split(b"\n", 1)[0].decode("latin-1")
    tokens = first_line[2:].replace("\t", " ").split()
    if not tokens:
        return False
    program = tokens[0].rsplit("/", 1)[-1]
    if program == "env" and len(tokens) > 1:
        program = tokens[1].rsplit("/", 1)[-1]
    return program in SHELL_INTERPRETERS


def classify_file(path: str, content_prefix: bytes) -> FileKind:
    """Assign a file class from its relative path and first <=8192 bytes."""
    pure = PurePosixPath(path)
    name = pure.name
    lower_name = name.lower()
    suffix = pure.suffix.lower()
    parts = pure.parts

    if len(parts) >= 3 and parts[0] == ".github" and parts[1] == "workflows":
        if suffix in (".yml", ".yaml"):
            return FileKind.WORKFLOW

    if lower_name.startswith("dockerfile"):
        return FileKind.DOCKERFILE

    if suffix == ".sh" or _shebang_is_shell(content_prefix):
        return FileKind.SHELL_SCRIPT

    if lower_name in MANIFEST_NAMES or (
        lower_name.startswith("requirements") and lower_name.endswith(".txt")
    ):
        return FileKind.MANIFEST

    if pure.stem.upper() in LICENSE_STEMS and suffix in LICENSE_EXTENSIONS:
        return FileKind.LICENSE_CANDIDATE
    if len(parts) >= 2 and parts[0].upper() == "LICENSES":
        return FileKind.LICENSE_CANDIDATE

    if lower_name in SECURITY_POLICY_NAMES and (
        len(parts) == 1 or (len(parts) == 2 and parts[0] == ".github")
    ):
        return FileKind.SECURITY_POLICY_CANDIDATE

    if suffix in NEVER_BINARY_EXTENSIONS:
        return FileKind.TEXT

    if suffix in BINARY_EXTENSIONS and not _is_utf8_text(content_prefix):
        return FileKind.BINARY

    if _is_utf8_text(content_prefix):
        return FileKind.TEXT
    return FileKind.OTHER


def _count_lines(data: bytes) -> int:
    if not data:
        return 0
    lines = data.count(b"\n")
    if not data.endswith(b"\n"):
        lines += 1
    return lines


def _walk_tree(root: Path) -> Iterator[tuple[str, Path, bool]]:
    """Yield (relative posix path, absolute path, is_symlink) for every entry."""
    for dirpath, dirnames, filenames in os.walk(root, followlinks=False):
        dirnames[:] = [d for d in dirnames if d not in VCS_INTERNALS]
        base = Path(dirpath)
        # Symlinked directories are recorded as entries but never descended.
        linked_dirs = [d for d in list(dirnames) if (base / d).is_symlink()]
        for d in linked_dirs:
            dirnames.remove(d)
            full = base / d
            yield full.relative_to(root).as_posix(), full, True
        for filename in filenames:
            full = base / filename
            yield full.relative_to(root).as_posix(), full, full.is_symlink()


def _scan_files(root: Path) -> tuple[FileEntry, ...]:
    entries = []
    for rel, full, is_link in _walk_tree(root):
        if is_link:
            entries.append(FileEntry(path=rel, size_bytes=0, kind=classify_file(rel, b""), line_count=0))
            continue
        data = full.read_bytes()
        kind = classify_file(rel, data[:PREFIX_BYTES])
        line_count = 0
        if kind is not FileKind.BINARY and kind is not FileKind.OTHER:
            line_count = _count_lines(data)
        entries.append(FileEntry(path=rel, size_bytes=len(data), kind=kind, line_count=line_count))
    entries.sort(key=lambda entry: entry.path)
    return tuple(entries)


def _expect(mapping: Any, key: str, types: tuple[type, ...], context: str) -> Any:
    if not isinstance(mapping, dict):
        raise ParseError(f"{context}: expected an object")
    value = mapping.get(key)
    if value is None or not isinstance(value, types):
        raise ParseError(f"{context}.{key}" if context else key)
    return value


def _opt_str(mapping: dict, key: str, context: str, default: str = "") -> str:
    value = mapping.get(key, default)
    if not isinstance(value, str):
        raise ParseError(f"{context}.{key}")
    return value


REVIEW_PLATFORMS = {"github", "prow", "gerrit"}


def _parse_commit(raw: Any, index: int) -> CommitRecord:
    context = f"commits[{index}]"
    if not isinstance(raw, dict):
        raise ParseError(context)
    platforms = raw.get("approved_review_platforms", [])
    if not isinstance(platforms, list) or not all(isinstance(p, str) for p in platforms):
        raise ParseError(f"{context}.approved_review_platforms")
    unknown = set(platforms) - REVIEW_PLATFORMS
    if unknown:
        raise ParseError(f"{context}.approved_review_platforms: unknown platform {sorted(unknown)[0]!r}")
    merger = raw.get("merger")
    if merger is not None and not isinstance(merger, str):
        raise ParseError(f"{context}.merger")
    timestamp = raw.get("timestamp")
    if not isinstance(timestamp, int) or timestamp <= 0:
        raise ParseError(f"{context}.timestamp")
    return CommitRecord(
        id=_opt_str(raw, "id", context),
        author=_opt_str(raw, "author", context),
        committer=_opt_str(raw, "committer", context),
        merger=merger,
        timestamp=timestamp,
        approved_review_platforms=frozenset(platforms),
        message=_opt_str(raw, "message", context),
    )


def _parse_release(raw: Any, index: int) -> ReleaseRecord:
    context = f"releases[{index}]"
    if not isinstance(raw, dict):
        raise ParseError(context)
    tag = raw.get("tag")
    if not isinstance(tag, str) or not tag:
        raise ParseError(f"{context}.tag")
    created = raw.get("created_at")
    if not isinstance(created, int):
        raise ParseError(f"{context}.created_at")
    assets = raw.get("assets", [])
    if not isinstance(assets, list) or not all(isinstance(a, str) for a in assets):
        raise ParseError(f"{context}.assets")
    return ReleaseRecord(tag=tag, created_at=created, asset_names=tuple(assets))


def _parse_tag(raw: Any, index: int) -> TagRecord:
    context = f"tags[{index}]"
    if not isinstance(raw, dict):
        raise ParseError(context)
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ParseError(f"{context}.name")
    timestamp = raw.get("timestamp")
    if not isinstance(timestamp, int):
        raise ParseError(f"{context}.timestamp")
    verified = raw.get("verified", False)
    if not isinstance(verified, bool):
        raise ParseError(f"{context}.verified")
    return TagRecord(name=name, timestamp=timestamp, verified=verified)


def _parse_protection(raw: Any, branch: str) -> ProtectionSettings:
    context = f"branches.{branch}"
    if not isinstance(raw, dict):
        raise ParseError(context)
    flags = {}
    for key in ("enabled", "block_force_push", "block_deletion",
                "status_checks_required", "dismiss_stale_reviews"):
        value = raw.get(key, False)
        if not isinstance(value, bool):
            raise ParseError(f"{context}.{key}")
        flags[key] = value
    reviewers = raw.get("required_reviewers", 0)
    if not isinstance(reviewers, int) or reviewers < 0:
        raise ParseError(f"{context}.required_reviewers")
    admin_omitted = "dismiss_stale_reviews" not in raw
    if not flags["enabled"]:
        return ProtectionSettings(admin_fields_omitted=admin_omitted)
    return ProtectionSettings(
        enabled=True,
        block_force_push=flags["block_force_push"],
        block_deletion=flags["block_deletion"],
        required_reviewers=reviewers,
        status_checks_required=flags["status_checks_required"],
        dismiss_stale_reviews=flags["dismiss_stale_reviews"],
        admin_fields_omitted=admin_omitted,
    )


def _parse_issue(raw: Any, index: int) -> IssueEvent:
    context = f"issues[{index}]"
    if not isinstance(raw, dict):
        raise ParseError(context)
    created = raw.get("created_at")
    if not isinstance(created, int):
        raise ParseError(f"{context}.created_at")
    association = raw.get("author_association", "")
    if not isinstance(association, str):
        raise ParseError(f"{context}.author_association")
    return IssueEvent(created_at=created, author_association=association)


def _parse_metadata(path: Path) -> dict[str, Any]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read metadata fixture {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"metadata fixture {path}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(raw, dict):
        raise ParseError("metadata fixture: top level must be an object")

    default_branch = raw.get("default_branch")
    if not isinstance(default_branch, str) or not default_branch:
        raise ParseError("default_branch")

    archived = raw.get("archived", False)
    if not isinstance(archived, bool):
        raise ParseError("archived")

    def _array(key: str) -> list:
        value = raw.get(key, [])
        if not isinstance(value, list):
            raise ParseError(key)
        return value

    commits = tuple(_parse_commit(item, i) for i, item in enumerate(_array("commits")))
    releases = tuple(_parse_release(item, i) for i, item in enumerate(_array("releases")))
    tags = tuple(_parse_tag(item, i) for i, item in enumerate(_array("tags")))
    issues = tuple(_parse_issue(item, i) for i, item in enumerate(_array("issues")))

    branches_raw = raw.get("branches", {})
    if not isinstance(branches_raw, dict):
        raise ParseError("branches")
    protection = {
        name: _parse_protection(settings, name) for name, settings in branches_raw.items()
    }

    contributors_raw = _array("contributors")
    contributors = []
    for i, item in enumerate(contributors_raw):
        if not isinstance(item, dict) or not isinstance(item.get("login"), str):
            raise ParseError(f"contributors[{i}].login")
        company = item.get("company")
        if company is not None and not isinstance(company, str):
            raise ParseError(f"contributors[{i}].company")
        contributors.append((item["login"], company or ""))

    return {
        "default_branch": default_branch,
        "archived": archived,
        "commits": tuple(sorted(commits, key=lambda c: -c.timestamp)),
        "releases": tuple(sorted(releases, key=lambda r: -r.created_at)),
        "tags": tuple(sorted(tags, key=lambda t: -t.timestamp)),
        "branch_protection": protection,
        "issues": issues,
        "contributors": tuple(contributors),
    }


def load_snapshot(root: Path | str, metadata: Path | str | None = None,
                  repo: str | None = None) -> RepoSnapshot:
    """Build the immutable snapshot every check consumes.

    `metadata` points at an optional JSON fixture with forge-side facts;
    without it the snapshot carries only the file tree and the checks that
    need forge data report inconclusive. `repo` overrides the repository
    identity used for intelligence lookups (defaults to the directory name).
    """
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"repository path {root} is not a directory")

    files = _scan_files(root)
    repo_id = repo if repo is not None else root.resolve().name

    if metadata is None:
        return RepoSnapshot(root=root, repo_id=repo_id, files=files)

    parsed = _parse_metadata(Path(metadata))
    return RepoSnapshot(root=root, repo_id=repo_id, files=files,
                        metadata_present=True, **parsed)

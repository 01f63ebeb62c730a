from __future__ import annotations

import json
from pathlib import Path

import pytest

# Fixed scan time for reproducible Maintained scoring: 2023-11-14T22:13:20Z.
NOW = 1_700_000_000
DAY = 86_400

PINNED_CHECKOUT = "actions/checkout@8f4b7f84864484a7bf31766abe9204da3cbe65b3"


def write_tree(base: Path, files: dict[str, str | bytes]) -> Path:
    base.mkdir(parents=True, exist_ok=True)
    for rel, content in files.items():
        full = base / rel
        full.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            full.write_bytes(content)
        else:
            full.write_text(content, encoding="utf-8")
    return base


def write_metadata(path: Path, **fields) -> Path:
    payload = {"default_branch": "main"}
    payload.update(fields)
    path.write_text(json.dumps(payload, indent=1), encoding="utf-8")
    return path


def commit(i: int, *, timestamp: int, author: str = "alice", committer: str = "alice",
           merger: str | None = None, platforms: list[str] | None = None) -> dict:
    return {
        "id": f"{i:040x}",
        "author": author,
        "committer": committer,
        "merger": merger,
        "timestamp": timestamp,
        "approved_review_platforms": platforms or [],
        "message": f"change {i}",
    }


FULL_PROTECTION = {
    "enabled": True,
    "block_force_push": True,
    "block_deletion": True,
    "required_reviewers": 2,
    "status_checks_required": True,
    "dismiss_stale_reviews": True,
}


def write_intel(directory: Path, *, osv: dict | None = None,
                ossfuzz: list[str] | None = None, cii: dict | None = None) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    if osv is not None:
        (directory / "osv.json").write_text(json.dumps({"repos": osv}), encoding="utf-8")
    if ossfuzz is not None:
        (directory / "ossfuzz.txt").write_text("\n".join(ossfuzz) + "\n", encoding="utf-8")
    if cii is not None:
        (directory / "cii.json").write_text(json.dumps(cii), encoding="utf-8")
    return directory


BENIGN_WORKFLOW = """\
name: ci
on: [push, pull_request]
permissions: read-all
jobs:
  build:
    runs-on: ubuntu-latest
    steps:
      - uses: actions/checkout@8f4b7f84864484a7bf31766abe9204da3cbe65b3
      - run: pytest
"""

PUBLISH_WORKFLOW = """\
name: ci
on: [push]
permissions: read-all
jobs:
  release:
    runs-on: ubuntu-latest
    steps:
      - uses: actions/checkout@8f4b7f84864484a7bf31766abe9204da3cbe65b3
      - run: twine upload dist/*
"""

INJECTION_WORKFLOW = """\
name: issue-greeter
on: issues
jobs:
  greet:
    runs-on: ubuntu-latest
    steps:
      - run: |
          echo "ISSUE TITLE: ${{github.event.issue.title}}"
"""
INJECTION_LINE = 8

UNTRUSTED_CHECKOUT_WORKFLOW = """\
name: pr-target
on: pull_request_target
jobs:
  build:
    runs-on: ubuntu-latest
    steps:
      - uses: actions/checkout@v3
        with:
          ref: ${{github.event.pull_request.head.sha}}
"""
UNTRUSTED_CHECKOUT_LINE = 9

ALL_GOOD_REPO_ID = "github.com/acme/rocket"


def all_good_files() -> dict[str, str]:
    return {
        "LICENSE": "MIT License\n\nCopyright (c) 2023 Acme\n",
        "README.md": "# rocket\n",
        "SECURITY.md": "# Security Policy\n\nEmail security@acme.dev\n",
        "requirements.txt": "requests==2.28.1\nflask==2.2.2\n",
        ".github/dependabot.yml": "version: 2\nupdates: []\n",
        ".github/workflows/ci.yml": BENIGN_WORKFLOW,
        ".github/workflows/release.yml": PUBLISH_WORKFLOW,
    }


def all_good_metadata() -> dict:
    commits = [
        commit(i, timestamp=NOW - (i + 1) * 6 * DAY, platforms=["github"])
        for i in range(13)
    ]
    return {
        "default_branch": "main",
        "archived": False,
        "branches": {"main": dict(FULL_PROTECTION)},
        "commits": commits,
        "releases": [
            {"tag": "v1.1.0", "created_at": NOW - 5 * DAY,
             "assets": ["rocket-1.1.0.tar.gz", "rocket-1.1.0.tar.gz.asc"]},
            {"tag": "v1.0.0", "created_at": NOW - 40 * DAY,
             "assets": ["rocket-1.0.0.tar.gz", "rocket-1.0.0.tar.gz.asc"]},
        ],
        "tags": [],
        "issues": [],
        "contributors": [{"login": "alice", "company": "acme"},
                         {"login": "bob", "company": None}],
    }


def all_good_intel(directory: Path) -> Path:
    return write_intel(
        directory,
        osv={},
        ossfuzz=[f"https://{ALL_GOOD_REPO_ID}"],
        cii={ALL_GOOD_REPO_ID: "gold"},
    )


@pytest.fixture
def all_good_scan(tmp_path):
    """(snapshot, intel) pair scoring 10 on every check."""
    from scorehound import load_intel, load_snapshot

    repo = write_tree(tmp_path / "repo", all_good_files())
    metadata = write_metadata(tmp_path / "metadata.json", **all_good_metadata())
    intel = all_good_intel(tmp_path / "intel")
    snapshot = load_snapshot(repo, metadata=metadata, repo=ALL_GOOD_REPO_ID)
    return snapshot, load_intel(intel)

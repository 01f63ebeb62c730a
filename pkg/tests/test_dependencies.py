from __future__ import annotations

import json
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from scorehound import (
    check_binary_artifacts,
    check_dependency_update_tool,
    check_pinned_dependencies,
    extract_dependency_refs,
    load_snapshot,
)
from scorehound.rounding import ratio_score
from conftest import write_tree

PINNED_SHA = "8f4b7f84864484a7bf31766abe9204da3cbe65b3"
BINARY_BLOB = bytes(range(256))


def snapshot_of(tmp_path, files):
    return load_snapshot(write_tree(tmp_path / "repo", files))


def refs_by_name(snapshot):
    return {ref.name: ref for ref in extract_dependency_refs(snapshot)}


class TestActionRefs:
    @pytest.mark.parametrize("ref", ["v3", "main", "release/v1", PINNED_SHA[:12]])
    def test_tag_refs_unpinned(self, tmp_path, ref):
        files = {".github/workflows/ci.yml":
                 f"on: push\njobs:\n  b:\n    steps:\n      - uses: actions/checkout@{ref}\n"}
        snapshot = snapshot_of(tmp_path / ref.replace("/", "_"), files)
        (only,) = extract_dependency_refs(snapshot)
        # 40-hex rule oracle
        assert only.pinned == bool(re.fullmatch(r"[0-9a-fA-F]{40}", ref))
        assert only.pinned is False
        assert only.kind == "action-ref"

    def test_full_hash_pinned(self, tmp_path):
        files = {".github/workflows/ci.yml":
                 f"on: push\njobs:\n  b:\n    steps:\n      - uses: actions/checkout@{PINNED_SHA}\n"}
        (only,) = extract_dependency_refs(snapshot_of(tmp_path, files))
        assert only.pinned is True

    def test_local_action_skipped(self, tmp_path):
        files = {".github/workflows/ci.yml":
                 "on: push\njobs:\n  b:\n    steps:\n      - uses: ./tools/action\n"}
        assert extract_dependency_refs(snapshot_of(tmp_path, files)) == []

    def test_docker_uses_is_container_image(self, tmp_path):
        files = {".github/workflows/ci.yml":
                 "on: push\njobs:\n  b:\n    steps:\n      - uses: docker://alpine:3.18\n"}
        (only,) = extract_dependency_refs(snapshot_of(tmp_path, files))
        assert only.kind == "container-image"
        assert only.pinned is False


class TestManifests:
    def test_requirements_pinning(self, tmp_path):
        files = {"requirements.txt": (
            "# comment\n"
            "\n"
            "requests==2.28.1\n"
            "flask>=2.0\n"
            "click\n"
            "pinned-marker==1.0; python_version < '3.12'\n"
            "star==1.*\n"
            "-r other.txt\n"
        )}
        refs = refs_by_name(snapshot_of(tmp_path, files))
        assert refs["requests"].pinned is True
        assert refs["flask"].pinned is False
        assert refs["click"].pinned is False
        assert refs["pinned-marker"].pinned is True
        assert refs["star"].pinned is False
        assert len(refs) == 5
        assert refs["requests"].line == 3

    def test_package_json_range_unpinned(self, tmp_path):
        payload = {"dependencies": {"lodash": "^4.17.0", "exactly": "4.17.21",
                                    "latest": "latest", "tilde": "~1.2.3"}}
        files = {"package.json": json.dumps(payload, indent=2)}
        refs = refs_by_name(snapshot_of(tmp_path, files))
        assert refs["lodash"].pinned is False
        assert refs["exactly"].pinned is True
        assert refs["latest"].pinned is False
        assert refs["tilde"].pinned is False

    def test_package_lock_promotes_same_directory(self, tmp_path):
        payload = {"dependencies": {"lodash": "^4.17.0"}}
        files = {
            "package.json": json.dumps(payload),
            "package-lock.json": "{}",
            "sub/package.json": json.dumps(payload),
        }
        refs = extract_dependency_refs(snapshot_of(tmp_path, files))
        top = next(r for r in refs if r.source_path == "package.json")
        nested = next(r for r in refs if r.source_path == "sub/package.json")
        assert top.pinned is True
        assert nested.pinned is False

    def test_setup_py_lexical_scan(self, tmp_path):
        files = {"setup.py": (
            "from setuptools import setup\n"
            "setup(\n"
            "    name='widget',\n"
            "    install_requires=[\n"
            "        'requests==2.28.1',\n"
            "        'flask>=2.0',\n"
            "    ],\n"
            ")\n"
        )}
        refs = refs_by_name(snapshot_of(tmp_path, files))
        assert refs["requests"].pinned is True
        assert refs["requests"].line == 5
        assert refs["flask"].pinned is False

    def test_pyproject_project_and_poetry(self, tmp_path):
        files = {"pyproject.toml": (
            "[project]\n"
            "name = 'widget'\n"
            "dependencies = ['httpx==0.24.1', 'rich>=13']\n"
            "\n"
            "[tool.poetry.dependencies]\n"
            "python = '^3.10'\n"
            "attrs = '23.1.0'\n"
            "yarl = '^1.9'\n"
        )}
        refs = refs_by_name(snapshot_of(tmp_path, files))
        assert refs["httpx"].pinned is True
        assert refs["rich"].pinned is False
        assert refs["attrs"].pinned is True
        assert refs["yarl"].pinned is False
        assert "python" not in refs


class TestDockerAndShell:
    def test_from_lines(self, tmp_path):
        files = {"Dockerfile": (
            "FROM python:3.11 AS builder\n"
            "FROM python@sha256:" + "ab" * 32 + "\n"
            "FROM builder\n"
            "FROM scratch\n"
        )}
        refs = extract_dependency_refs(snapshot_of(tmp_path, files))
        assert [(r.name, r.pinned) for r in refs] == [
            ("python:3.11", False),
            ("python", True),
        ]

    def test_run_pip_install(self, tmp_path):
        files = {"Dockerfile": "FROM scratch\nRUN pip install requests==2.28.1 flask\n"}
        refs = refs_by_name(snapshot_of(tmp_path, files))
        assert refs["requests"].pinned is True
        assert refs["flask"].pinned is False

    def test_run_apt_get(self, tmp_path):
        files = {"Dockerfile": "FROM scratch\nRUN apt-get install -y curl=7.88.1-10 jq\n"}
        refs = refs_by_name(snapshot_of(tmp_path, files))
        assert refs["curl"].pinned is True
        assert refs["jq"].pinned is False

    def test_curl_pipe_sh_in_dockerfile(self, tmp_path):
        files = {"Dockerfile": "FROM scratch\nRUN curl -sSf https://x.invalid/i.sh | sh\n"}
        refs = extract_dependency_refs(snapshot_of(tmp_path, files))
        download = next(r for r in refs if r.kind == "shell-download")
        assert download.pinned is False

    def test_shell_pipe_always_unpinned(self, tmp_path):
        files = {"install.sh": "#!/bin/sh\ncurl -fsSL https://x.invalid/get.sh | bash\n"}
        (only,) = extract_dependency_refs(snapshot_of(tmp_path, files))
        assert only.kind == "shell-download"
        assert only.pinned is False
        assert only.line == 2

    def test_checksum_verified_fetch_pinned(self, tmp_path):
        files = {"fetch.sh": (
            "#!/bin/bash\n"
            "wget https://x.invalid/tool.tar.gz\n"
            "sha256sum -c tool.tar.gz.sha256\n"
        )}
        (only,) = extract_dependency_refs(snapshot_of(tmp_path, files))
        assert only.pinned is True

    def test_unverified_fetch_unpinned(self, tmp_path):
        files = {"fetch.sh": "#!/bin/bash\nwget https://x.invalid/tool.tar.gz\n"}
        (only,) = extract_dependency_refs(snapshot_of(tmp_path, files))
        assert only.pinned is False


class TestPinnedScore:
    def test_nothing_to_evaluate_is_inconclusive(self, tmp_path):
        result = check_pinned_dependencies(snapshot_of(tmp_path, {"README.md": "# x\n"}))
        assert result.score == -1

    def test_three_of_four_rounds_to_eight(self, tmp_path):
        # Brute-count oracle: round(10 * 3/4) = round(7.5) = 8 half-away.
        files = {"requirements.txt": "a==1\nb==2\nc==3\nd\n"}
        result = check_pinned_dependencies(snapshot_of(tmp_path, files))
        assert result.score == 8
        assert "3/4" in result.reason

    def test_all_pinned(self, tmp_path):
        files = {"requirements.txt": "a==1\nb==2\n"}
        assert check_pinned_dependencies(snapshot_of(tmp_path, files)).score == 10

    def test_duplicating_every_ref_keeps_score(self, tmp_path):
        base = "a==1\nb==2\nc\n"
        single = snapshot_of(tmp_path / "one", {"requirements.txt": base})
        doubled = snapshot_of(tmp_path / "two", {"requirements.txt": base,
                                                 "requirements-dev.txt": base})
        assert check_pinned_dependencies(single).score == \
            check_pinned_dependencies(doubled).score


@given(st.integers(min_value=0, max_value=60), st.integers(min_value=1, max_value=60))
def test_pinned_ratio_monotonicity(pinned, total):
    pinned = min(pinned, total)
    score = ratio_score(pinned, total)
    # one more unpinned ref never raises the score
    assert ratio_score(pinned, total + 1) <= score
    # one more pinned ref never lowers it by more than rounding
    assert ratio_score(pinned + 1, total + 1) >= score - 1
    # scale invariance
    assert ratio_score(2 * pinned, 2 * total) == score


class TestUpdateTool:
    def test_dependabot(self, tmp_path):
        files = {".github/dependabot.yml": "version: 2\n"}
        assert check_dependency_update_tool(snapshot_of(tmp_path, files)).score == 10

    def test_renovate(self, tmp_path):
        files = {"renovate.json": "{}\n"}
        assert check_dependency_update_tool(snapshot_of(tmp_path, files)).score == 10

    def test_renovaterc(self, tmp_path):
        files = {".renovaterc.json": "{}\n"}
        assert check_dependency_update_tool(snapshot_of(tmp_path, files)).score == 10

    def test_neither(self, tmp_path):
        files = {"README.md": "# x\n"}
        assert check_dependency_update_tool(snapshot_of(tmp_path, files)).score == 0


class TestBinaryArtifacts:
    @pytest.mark.parametrize("count,expected", [(0, 10), (1, 9), (3, 7), (10, 0), (12, 0)])
    def test_count_to_score(self, tmp_path, count, expected):
        files = {"README.md": "# x\n"}
        files.update({f"bin/tool{i}.exe": BINARY_BLOB for i in range(count)})
        snapshot = snapshot_of(tmp_path / str(count), files)
        result = check_binary_artifacts(snapshot)
        # closed-form oracle
        assert result.score == max(0, 10 - count) == expected

    def test_txt_never_counted(self, tmp_path):
        files = {"notes.txt": BINARY_BLOB, "README.md": "# x\n"}
        result = check_binary_artifacts(snapshot_of(tmp_path, files))
        assert result.score == 10
        assert result.details == ()

    def test_text_content_with_binary_extension_not_counted(self, tmp_path):
        files = {"data.bin": "just text\n"}
        assert check_binary_artifacts(snapshot_of(tmp_path, files)).score == 10

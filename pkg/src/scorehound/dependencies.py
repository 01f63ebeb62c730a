"""Dependency reference extraction and the pinning-related checks.

References are gathered from Dockerfiles, shell scripts, CI workflows and
ecosystem manifests (package.json, requirements files, setup.py,
pyproject.toml), so repositories that declare dependencies only through
their package manager still get a meaningful pinning score.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .registry import CheckResult, get_check
from .repo import FileKind, RepoSnapshot
from .rounding import ratio_score

KIND_CONTAINER_IMAGE = "container-image"
KIND_SHELL_DOWNLOAD = "shell-download"
KIND_ACTION_REF = "action-ref"
KIND_MANIFEST_ENTRY = "manifest-entry"

COMMIT_HASH_RE = re.compile(r"^[0-9a-f]{40}$", re.IGNORECASE)
EXACT_SEMVER_RE = re.compile(r"^=?v?\d+\.\d+\.\d+([-+][\w.]+)?$")
GIT_COMMIT_FRAGMENT_RE = re.compile(r"#([0-9a-f]{40})$", re.IGNORECASE)

FROM_RE = re.compile(
    r"^\s*FROM\s+(?:--platform=\S+\s+)?(\S+)(?:\s+AS\s+(\S+))?\s*$",
    re.IGNORECASE,
)
USES_RE = re.compile(r"^\s*-?\s*uses:\s*(['\"]?)([^#\s'\"]+)\1")
FETCH_RE = re.compile(r"\b(curl|wget)\b")
PIPE_TO_INTERPRETER_RE = re.compile(
    r"\b(?:curl|wget)\b[^|\n]*\|\s*(?:sudo\s+)?[\w./-]*(?:(?:ba|da|z|k)?sh|python3?|perl|ruby|node)\b"
)
CHECKSUM_VERIFY_RE = re.compile(
    r"\b(?:sha(?:1|224|256|384|512)sum|shasum|md5sum)\b[^\n]*(?:\s-c\b|--check)"
)
URL_RE = re.compile(r"https?://\S+")

REQUIREMENT_NAME_RE = re.compile(r"^\s*([A-Za-z0-9][A-Za-z0-9._-]*(?:\[[^\]]*\])?)\s*(.*)$")
INSTALL_REQUIRES_RE = re.compile(r"install_requires\s*=\s*\[", re.DOTALL)
STRING_LITERAL_RE = re.compile(r"'([^']*)'|\"([^\"]*)\"")

DEPENDABOT_PATHS = (".github/dependabot.yml", ".github/dependabot.yaml")
RENOVATE_PATHS = ("renovate.json", "renovate.json5", ".github/renovate.json", ".github/renovate.json5")


@dataclass(frozen=True)
class DependencyRef:
    source_path: str
    line: int
    kind: str
    name: str
    spec: str
    pinned: bool


def _line_of(text: str, offset: int) -> int:
    return text.count("\n", 0, offset) + 1


def _logical_lines(text: str) -> list[tuple[int, str]]:
    """Join backslash continuations, keeping the first physical line number."""
    out: list[tuple[int, str]] = []
    pending: str | None = None
    pending_line = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        if pending is None:
            pending, pending_line = raw, number
        else:
            pending += " " + raw
        if pending.rstrip().endswith("\\"):
            pending = pending.rstrip()[:-1]
            continue
        out.append((pending_line, pending))
        pending = None
    if pending is not None:
        out.append((pending_line, pending))
    return out


def _exact_python_spec(spec: str) -> bool:
    clause = spec.split(";", 1)[0]
    match = re.search(r"==\s*([^\s,]+)", clause)
    return bool(match) and "*" not in match.group(1)


def _exact_npm_spec(spec: str) -> bool:
    spec = spec.strip()
    if GIT_COMMIT_FRAGMENT_RE.search(spec):
        return True
    if spec.startswith("npm:"):
        _, _, aliased = spec.partition(":")
        _, _, version = aliased.rpartition("@")
        return bool(EXACT_SEMVER_RE.match(version))
    return bool(EXACT_SEMVER_RE.match(spec))


def _dockerfile_refs(path: str, text: str) -> list[DependencyRef]:
    refs = []
    aliases = set()
    lines = _logical_lines(text)
    for _, line in lines:
        match = FROM_RE.match(line)
        if match and match.group(2):
            aliases.add(match.group(2).lower())
    for number, line in lines:
        match = FROM_RE.match(line)
        if match:
            image = match.group(1)
            if image.lower() == "scratch" or image.lower() in aliases:
                continue
            refs.append(DependencyRef(
                source_path=path, line=number, kind=KIND_CONTAINER_IMAGE,
                name=image.split("@", 1)[0], spec=image,
                pinned="@sha256:" in image,
            ))
            continue
        if re.match(r"^\s*RUN\b", line, re.IGNORECASE):
            body = re.sub(r"^\s*RUN\b", "", line, flags=re.IGNORECASE)
            refs.extend(_run_install_refs(path, number, body))
            refs.extend(_download_refs(path, number, body, script_has_checksum=False))
    return refs


def _run_install_refs(path: str, line: int, body: str) -> list[DependencyRef]:
    refs = []
    for command in re.split(r"&&|;", body):
        tokens = command.split()
        if not tokens:
            continue
        refs.extend(_install_tokens_refs(path, line, tokens))
    return refs


def _install_tokens_refs(path: str, line: int, tokens: list[str]) -> list[DependencyRef]:
    refs: list[DependencyRef] = []
    lowered = [t.lower() for t in tokens]

    def packages(after: int) -> list[str]:
        result = []
        skip_next = False
        for token in tokens[after:]:
            if skip_next:
                skip_next = False
                continue
            if token.startswith("-"):
                if token in ("-r", "--requirement", "-c", "--constraint"):
                    skip_next = True
                continue
            if token in (".", "..") or token.startswith(("./", "/", "$")):
                continue
            result.append(token)
        return result

    def emit(name_spec: list[str], pin) -> None:
        for token in name_spec:
            refs.append(DependencyRef(
                source_path=path, line=line, kind=KIND_MANIFEST_ENTRY,
                name=re.split(r"[=@<>~!]", token, maxsplit=1)[0], spec=token,
                pinned=pin(token),
            ))

    for i, word in enumerate(lowered):
        if word in ("pip", "pip3") and i + 1 < len(tokens) and lowered[i + 1] == "install":
            emit(packages(i + 2), lambda t: "==" in t)
            break
        if word == "npm" and i + 1 < len(tokens) and lowered[i + 1] in ("install", "i"):
            emit(packages(i + 2), lambda t: bool(EXACT_SEMVER_RE.match(t.rpartition("@")[2])))
            break
        if word in ("apt-get", "apt") and i + 1 < len(tokens) and lowered[i + 1] == "install":
            emit(packages(i + 2), lambda t: "=" in t)
            break
        if word == "apk" and i + 1 < len(tokens) and lowered[i + 1] == "add":
            emit(packages(i + 2), lambda t: "=" in t)
            break
    return refs


def _download_refs(path: str, line: int, text_line: str, script_has_checksum: bool) -> list[DependencyRef]:
    if not FETCH_RE.search(text_line):
        return []
    piped = bool(PIPE_TO_INTERPRETER_RE.search(text_line))
    url_match = URL_RE.search(text_line)
    name = url_match.group(0).rstrip('"\')') if url_match else "remote download"
    return [DependencyRef(
        source_path=path, line=line, kind=KIND_SHELL_DOWNLOAD,
        name=name, spec=text_line.strip(),
        pinned=(not piped) and script_has_checksum,
    )]


def _shell_refs(path: str, text: str) -> list[DependencyRef]:
    refs = []
    has_checksum = bool(CHECKSUM_VERIFY_RE.search(text))
    for number, line in _logical_lines(text):
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        refs.extend(_download_refs(path, number, line, script_has_checksum=has_checksum))
    return refs


def _workflow_refs(path: str, text: str) -> list[DependencyRef]:
    refs = []
    for number, line in enumerate(text.splitlines(), start=1):
        match = USES_RE.match(line)
        if not match:
            continue
        target = match.group(2)
        if target.startswith("./"):
            continue  # repository-local action
        if target.startswith("docker://"):
            image = target[len("docker://"):]
            refs.append(DependencyRef(
                source_path=path, line=number, kind=KIND_CONTAINER_IMAGE,
                name=image.split("@", 1)[0], spec=target,
                pinned="@sha256:" in image,
            ))
            continue
        name, _, ref = target.partition("@")
        refs.append(DependencyRef(
            source_path=path, line=number, kind=KIND_ACTION_REF,
            name=name, spec=target,
            pinned=bool(ref and COMMIT_HASH_RE.match(ref)),
        ))
    return refs


def _find_key_line(text: str, needle: str) -> int:
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return 1


def _package_json_refs(path: str, text: str, lock_present: bool,
                       warnings: list[str]) -> list[DependencyRef]:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        warnings.append(f"{path}: invalid JSON at line {exc.lineno}")
        return []
    if not isinstance(payload, dict):
        warnings.append(f"{path}: top level is not an object")
        return []
    refs = []
    for section in ("dependencies", "devDependencies", "optionalDependencies"):
        block = payload.get(section)
        if not isinstance(block, dict):
            continue
        for name, spec in block.items():
            if not isinstance(spec, str):
                continue
            refs.append(DependencyRef(
                source_path=path,
                line=_find_key_line(text, f'"{name}"'),
                kind=KIND_MANIFEST_ENTRY,
                name=name, spec=spec,
                pinned=lock_present or _exact_npm_spec(spec),
            ))
    return refs


def _requirements_refs(path: str, text: str) -> list[DependencyRef]:
    refs = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", "-")):
            continue
        if " #" in line:
            line = line.split(" #", 1)[0].rstrip()
        match = REQUIREMENT_NAME_RE.match(line)
        if not match:
            continue
        name, rest = match.group(1), match.group(2)
        refs.append(DependencyRef(
            source_path=path, line=number, kind=KIND_MANIFEST_ENTRY,
            name=name, spec=line, pinned=_exact_python_spec(rest),
        ))
    return refs


def _matching_bracket(text: str, open_index: int) -> int:
    depth = 0
    for index in range(open_index, len(text)):
        char = text[index]
        if char == "[":
            depth += 1
        elif char == "]":
            depth -= 1
            if depth == 0:
                return index
    return len(text)


def _setup_py_refs(path: str, text: str) -> list[DependencyRef]:
    match = INSTALL_REQUIRES_RE.search(text)
    if not match:
        return []
    open_index = text.index("[", match.start())
    close_index = _matching_bracket(text, open_index)
    refs = []
    for literal in STRING_LITERAL_RE.finditer(text, open_index, close_index):
        value = literal.group(1) if literal.group(1) is not None else literal.group(2)
        if not value:
            continue
        name_match = REQUIREMENT_NAME_RE.match(value)
        if not name_match:
            continue
        refs.append(DependencyRef(
            source_path=path,
            line=_line_of(text, literal.start()),
            kind=KIND_MANIFEST_ENTRY,
            name=name_match.group(1),
            spec=value,
            pinned=_exact_python_spec(value),
        ))
    return refs


def _exact_poetry_spec(spec: str) -> bool:
    spec = spec.strip()
    if not spec or spec == "*":
        return False
    if spec.startswith(("^", "~", ">", "<")):
        return False
    if "*" in spec:
        return False
    if spec.startswith("=="):
        spec = spec[2:]
    elif spec.startswith("="):
        spec = spec[1:]
    # A bare version is an exact constraint in poetry, unlike npm ranges.
    return bool(re.match(r"^v?\d+(\.\d+){0,2}([-+][\w.]+)?$", spec))


def _pyproject_refs(path: str, text: str, warnings: list[str]) -> list[DependencyRef]:
    try:
        payload = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        warnings.append(f"{path}: invalid TOML: {exc}")
        return []
    refs = []

    def add(name: str, spec: str, pinned: bool) -> None:
        refs.append(DependencyRef(
            source_path=path, line=_find_key_line(text, name),
            kind=KIND_MANIFEST_ENTRY, name=name, spec=spec, pinned=pinned,
        ))

    project = payload.get("project", {})
    requirement_lists = [project.get("dependencies", [])]
    requirement_lists.extend((project.get("optional-dependencies") or {}).values())
    for requirements in requirement_lists:
        if not isinstance(requirements, list):
            continue
        for requirement in requirements:
            if not isinstance(requirement, str):
                continue
            match = REQUIREMENT_NAME_RE.match(requirement)
            if not match:
                continue
            add(match.group(1), requirement, _exact_python_spec(requirement))

    poetry = (payload.get("tool") or {}).get("poetry") or {}
    groups = [poetry.get("dependencies") or {}, poetry.get("dev-dependencies") or {}]
    for group in (poetry.get("group") or {}).values():
        if isinstance(group, dict):
            groups.append(group.get("dependencies") or {})
    for table in groups:
        if not isinstance(table, dict):
            continue
        for name, spec in table.items():
            if name.lower() == "python":
                continue
            if isinstance(spec, str):
                add(name, spec, _exact_poetry_spec(spec))
            elif isinstance(spec, dict):
                rev = spec.get("rev", "")
                version = spec.get("version", "")
                pinned = bool(
                    (isinstance(rev, str) and COMMIT_HASH_RE.match(rev))
                    or (isinstance(version, str) and _exact_poetry_spec(version))
                )
                add(name, str(spec.get("version") or spec.get("rev") or spec), pinned)
    return refs


def extract_dependency_refs(snapshot: RepoSnapshot,
                            warnings: list[str] | None = None) -> list[DependencyRef]:
    """Gather every dependency reference the snapshot declares."""
    if warnings is None:
        warnings = []
    refs: list[DependencyRef] = []
    directories_with_lock = {
        entry.path.rsplit("/", 1)[0] if "/" in entry.path else ""
        for entry in snapshot.files
        if entry.path.rsplit("/", 1)[-1] == "package-lock.json"
    }
    for entry in snapshot.files:
        if entry.kind not in (FileKind.DOCKERFILE, FileKind.SHELL_SCRIPT,
                              FileKind.WORKFLOW, FileKind.MANIFEST):
            continue
        text = snapshot.read_text(entry.path)
        if text is None:
            warnings.append(f"{entry.path}: unreadable, skipped")
            continue
        name = entry.path.rsplit("/", 1)[-1].lower()
        if entry.kind is FileKind.DOCKERFILE:
            refs.extend(_dockerfile_refs(entry.path, text))
        elif entry.kind is FileKind.SHELL_SCRIPT:
            refs.extend(_shell_refs(entry.path, text))
        elif entry.kind is FileKind.WORKFLOW:
            refs.extend(_workflow_refs(entry.path, text))
        elif name == "package.json":
            directory = entry.path.rsplit("/", 1)[0] if "/" in entry.path else ""
            refs.extend(_package_json_refs(
                entry.path, text, directory in directories_with_lock, warnings))
        elif name.startswith("requirements") and name.endswith(".txt"):
            refs.extend(_requirements_refs(entry.path, text))
        elif name == "setup.py":
            refs.extend(_setup_py_refs(entry.path, text))
        elif name == "pyproject.toml":
            refs.extend(_pyproject_refs(entry.path, text, warnings))
    refs.sort(key=lambda ref: (ref.source_path, ref.line, ref.name))
    return refs


def check_pinned_dependencies(snapshot: RepoSnapshot) -> CheckResult:
    """Score the pinned fraction of all dependency references."""
    info = get_check("Pinned-Dependencies")
    warnings: list[str] = []
    refs = extract_dependency_refs(snapshot, warnings)
    if not refs:
        return info.result(-1, "no dependency references found to evaluate",
                           tuple(warnings))
    pinned = sum(1 for ref in refs if ref.pinned)
    details = [
        f"{ref.source_path}:{ref.line}: unpinned {ref.kind} {ref.name} ({ref.spec})"
        for ref in refs if not ref.pinned
    ]
    details.extend(warnings)
    score = ratio_score(pinned, len(refs))
    return info.result(score, f"{pinned}/{len(refs)} dependency references pinned",
                       tuple(details))


def check_dependency_update_tool(snapshot: RepoSnapshot) -> CheckResult:
    """Look for dependabot or renovate configuration files."""
    info = get_check("Dependency-Update-Tool")
    paths = {entry.path for entry in snapshot.files}
    hits = [p for p in DEPENDABOT_PATHS + RENOVATE_PATHS if p in paths]
    hits.extend(sorted(
        p for p in paths
        if "/" not in p and p.startswith(".renovaterc")
    ))
    if hits:
        return info.result(10, f"update tool configured: {hits[0]}", tuple(sorted(hits)))
    return info.result(0, "no dependency update tool configuration found")


def check_binary_artifacts(snapshot: RepoSnapshot) -> CheckResult:
    """Deduct one point per checked-in binary."""
    info = get_check("Binary-Artifacts")
    binaries = snapshot.files_of_kind(FileKind.BINARY)
    score = max(0, 10 - len(binaries))
    reason = f"{len(binaries)} binary artifact(s) in the tree"
    return info.result(score, reason, tuple(entry.path for entry in binaries))

"""CI workflow parsing and workflow-level checks.

Workflows are parsed with source positions so findings can point at the
exact line carrying an offending expression. Detection of injectable
event text is substring-based over a fixed table of untrusted context
paths: extending the table is configuration, not code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import yaml

from .registry import CheckResult, get_check
from .repo import FileKind, RepoSnapshot
from .rounding import ratio_score

# Context paths whose values an outside user controls. Matched as
# substrings inside ${{ ... }} expressions, accepting rare false
# positives over missed injections.
UNTRUSTED_CONTEXTS = (
    "github.event.issue.title",
    "github.event.issue.body",
    "github.event.issue.user.login",
    "github.event.pull_request.title",
    "github.event.pull_request.body",
    "github.event.pull_request.head.ref",
    "github.event.pull_request.head.label",
    "github.event.pull_request.user.login",
    "github.event.comment.body",
    "github.event.review.body",
    "github.event.review_comment.body",
    "github.event.discussion.title",
    "github.event.discussion.body",
    "github.event.head_commit.message",
    "github.event.head_commit.author.name",
    "github.event.head_commit.author.email",
    "github.event.commits",
    "github.head_ref",
)

# Triggers that run with repository credentials against outside input.
PRIVILEGED_TRIGGERS = frozenset({"pull_request_target", "workflow_run"})

# Checkout refs under attacker influence when used with the above triggers.
UNTRUSTED_CHECKOUT_REFS = (
    "github.event.pull_request.head",
    "github.event.workflow_run.head",
    "github.head_ref",
)

EXPRESSION_RE = re.compile(r"\$\{\{(.*?)\}\}", re.DOTALL)

PUBLISH_ACTIONS = (
    ("pypa/gh-action-pypi-publish", "pypi-action"),
    ("js-devtools/npm-publish", "npm-action"),
)

PUBLISH_COMMANDS = (
    ("twine upload", "twine-cli"),
    ("npm publish", "npm-cli"),
    ("yarn publish", "yarn-cli"),
    ("pnpm publish", "pnpm-cli"),
    ("poetry publish", "poetry-cli"),
    ("flit publish", "flit-cli"),
    ("hatch publish", "hatch-cli"),
    ("cargo publish", "cargo-cli"),
    ("gem push", "gem-cli"),
    ("dotnet nuget push", "nuget-cli"),
)

PATTERN_UNTRUSTED_CHECKOUT = "untrusted-checkout"
PATTERN_SCRIPT_INJECTION = "script-injection"


@dataclass(frozen=True)
class Step:
    index: int
    line: int
    uses: str | None = None
    run_script: str | None = None
    with_entries: tuple[tuple[str, str, int], ...] = ()
    env_entries: tuple[tuple[str, str, int], ...] = ()

    @property
    def with_args(self) -> dict[str, str]:
        return {key: value for key, value, _ in self.with_entries}


@dataclass(frozen=True)
class Job:
    id: str
    job_level_permissions: dict[str, str] | None
    steps: tuple[Step, ...]
    env_entries: tuple[tuple[str, str, int], ...] = ()


@dataclass(frozen=True)
class Workflow:
    path: str
    triggers: frozenset[str]
    top_level_permissions: dict[str, str] | None  # None = no permissions block
    jobs: tuple[Job, ...]
    env_entries: tuple[tuple[str, str, int], ...] = ()


@dataclass(frozen=True)
class ParseFailure:
    path: str
    reason: str


@dataclass(frozen=True)
class WorkflowFinding:
    path: str
    line: int
    pattern: str
    detail: str
    note: str = ""

    def render(self) -> str:
        text = f"{self.path}:{self.line}: {self.pattern}: {self.detail}"
        if self.note:
            text += f" ({self.note})"
        return text


@dataclass(frozen=True)
class PublishSignal:
    path: str
    line: int
    mechanism: str


@dataclass(frozen=True)
class _Node:
    value: object
    line: int  # 1-based


def _convert_node(node: yaml.Node, loader: yaml.SafeLoader) -> _Node:
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        mapping: dict[str, _Node] = {}
        for key_node, value_node in node.value:
            key = loader.construct_object(key_node, deep=True)
            if key is True:
                key = "on"  # YAML 1.1 reads a bare `on` key as a boolean
            elif not isinstance(key, str):
                key = str(key)
            mapping[key] = _convert_node(value_node, loader)
        return _Node(mapping, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_convert_node(item, loader) for item in node.value], line)
    return _Node(loader.construct_object(node, deep=True), line)


def _load_positioned(text: str) -> _Node | None:
    loader = yaml.SafeLoader(text)
    try:
        root = loader.get_single_node()
        if root is None:
            return None
        return _convert_node(root, loader)
    finally:
        loader.dispose()


def _triggers(root: dict[str, _Node]) -> frozenset[str]:
    on = root.get("on")
    if on is None:
        return frozenset()
    value = on.value
    if isinstance(value, str):
        return frozenset({value})
    if isinstance(value, list):
        return frozenset(str(item.value) for item in value)
    if isinstance(value, dict):
        return frozenset(str(key) for key in value)
    return frozenset()


def _permissions(node: _Node | None) -> dict[str, str] | None:
    if node is None:
        return None
    value = node.value
    if isinstance(value, str):
        grant = "write" if value.strip() == "write-all" else "read"
        return {"all": grant}
    if isinstance(value, dict):
        return {str(k): str(v.value) for k, v in value.items()}
    # An explicit empty block drops every grant.
    return {}


def _env_entries(node: _Node | None) -> tuple[tuple[str, str, int], ...]:
    if node is None or not isinstance(node.value, dict):
        return ()
    entries = []
    for name, value_node in node.value.items():
        entries.append((str(name), str(value_node.value), value_node.line))
    return tuple(entries)


def _build_step(index: int, node: _Node) -> Step | None:
    if not isinstance(node.value, dict):
        return None
    mapping = node.value
    uses_node = mapping.get("uses")
    run_node = mapping.get("run")
    uses = str(uses_node.value) if uses_node is not None and run_node is None else None
    run_script = str(run_node.value) if run_node is not None else None
    line = node.line
    if run_node is not None:
        line = run_node.line
    elif uses_node is not None:
        line = uses_node.line

    with_entries: tuple[tuple[str, str, int], ...] = ()
    with_node = mapping.get("with")
    if with_node is not None and isinstance(with_node.value, dict):
        with_entries = tuple(
            (str(key), str(value.value), value.line)
            for key, value in with_node.value.items()
        )
    return Step(
        index=index,
        line=line,
        uses=uses,
        run_script=run_script,
        with_entries=with_entries,
        env_entries=_env_entries(mapping.get("env")),
    )


def _build_workflow(path: str, root: _Node) -> Workflow | ParseFailure:
    if not isinstance(root.value, dict):
        return ParseFailure(path, "top level is not a mapping")
    mapping = root.value
    triggers = _triggers(mapping)
    if not triggers:
        return ParseFailure(path, "no triggers declared")

    jobs: list[Job] = []
    jobs_node = mapping.get("jobs")
    if jobs_node is not None and isinstance(jobs_node.value, dict):
        for job_id, job_node in jobs_node.value.items():
            if not isinstance(job_node.value, dict):
                continue
            job_map = job_node.value
            steps: list[Step] = []
            steps_node = job_map.get("steps")
            if steps_node is not None and isinstance(steps_node.value, list):
                for index, step_node in enumerate(steps_node.value):
                    step = _build_step(index, step_node)
                    if step is not None:
                        steps.append(step)
            jobs.append(Job(
                id=str(job_id),
                job_level_permissions=_permissions(job_map.get("permissions")),
                steps=tuple(steps),
                env_entries=_env_entries(job_map.get("env")),
            ))

    return Workflow(
        path=path,
        triggers=triggers,
        top_level_permissions=_permissions(mapping.get("permissions")),
        jobs=tuple(jobs),
        env_entries=_env_entries(mapping.get("env")),
    )


def parse_workflows(snapshot: RepoSnapshot) -> tuple[list[Workflow], list[ParseFailure]]:
    """Parse every workflow file; unparseable files become failures, not holes."""
    workflows: list[Workflow] = []
    failures: list[ParseFailure] = []
    for entry in snapshot.files_of_kind(FileKind.WORKFLOW):
        text = snapshot.read_text(entry.path)
        if text is None:
            failures.append(ParseFailure(entry.path, "unreadable file"))
            continue
        try:
            root = _load_positioned(text)
        except yaml.YAMLError as exc:
            reason = str(exc).splitlines()[0] if str(exc) else "invalid YAML"
            failures.append(ParseFailure(entry.path, f"invalid YAML: {reason}"))
            continue
        except RecursionError:
            failures.append(ParseFailure(entry.path, "invalid YAML: recursive aliases"))
            continue
        if root is None:
            failures.append(ParseFailure(entry.path, "empty file"))
            continue
        built = _build_workflow(entry.path, root)
        if isinstance(built, ParseFailure):
            failures.append(built)
        else:
            workflows.append(built)
    return workflows, failures


def _expression_paths(text: str) -> list[tuple[str, str]]:
    """(untrusted path, full dotted token) pairs found inside expressions."""
    found = []
    for match in EXPRESSION_RE.finditer(text):
        inner = match.group(1)
        for context in UNTRUSTED_CONTEXTS:
            if context in inner:
                token_match = re.search(re.escape(context) + r"[\w.]*", inner)
                token = token_match.group(0) if token_match else context
                found.append((context, token))
    return found


def _line_containing(lines: list[str], needle: str, start: int) -> int:
    for offset in range(max(start - 1, 0), len(lines)):
        if needle in lines[offset]:
            return offset + 1
    for offset, line in enumerate(lines):
        if needle in line:
            return offset + 1
    return start


def _injection_findings(workflow: Workflow, lines: list[str]) -> list[WorkflowFinding]:
    findings = []
    for job in workflow.jobs:
        for step in job.steps:
            if not step.run_script:
                continue
            for _, token in _expression_paths(step.run_script):
                findings.append(WorkflowFinding(
                    path=workflow.path,
                    line=_line_containing(lines, token, step.line),
                    pattern=PATTERN_SCRIPT_INJECTION,
                    detail=token,
                ))
    return findings


def _env_findings(workflow: Workflow) -> list[WorkflowFinding]:
    scopes: list[tuple[tuple[str, str, int], ...]] = [workflow.env_entries]
    for job in workflow.jobs:
        scopes.append(job.env_entries)
        scopes.extend(step.env_entries for step in job.steps)
    findings = []
    for entries in scopes:
        for name, value, line in entries:
            for _, token in _expression_paths(value):
                findings.append(WorkflowFinding(
                    path=workflow.path,
                    line=line,
                    pattern=PATTERN_SCRIPT_INJECTION,
                    detail=token,
                    note=f"assigned to env {name}; injectable wherever the variable is used",
                ))
    return findings


def _checkout_findings(workflow: Workflow, lines: list[str]) -> list[WorkflowFinding]:
    if not workflow.triggers & PRIVILEGED_TRIGGERS:
        return []
    findings = []
    for job in workflow.jobs:
        for step in job.steps:
            if not step.uses or not step.uses.startswith("actions/checkout"):
                continue
            ref = step.with_args.get("ref", "")
            for context in UNTRUSTED_CHECKOUT_REFS:
                if context in ref:
                    token_match = re.search(re.escape(context) + r"[\w.]*", ref)
                    token = token_match.group(0) if token_match else context
                    findings.append(WorkflowFinding(
                        path=workflow.path,
                        line=_line_containing(lines, token, step.line),
                        pattern=PATTERN_UNTRUSTED_CHECKOUT,
                        detail=token,
                    ))
    return findings


def collect_findings(snapshot: RepoSnapshot) -> tuple[list[WorkflowFinding], list[Workflow], list[ParseFailure]]:
    workflows, failures = parse_workflows(snapshot)
    findings: list[WorkflowFinding] = []
    for workflow in workflows:
        text = snapshot.read_text(workflow.path) or ""
        lines = text.splitlines()
        findings.extend(_checkout_findings(workflow, lines))
        findings.extend(_injection_findings(workflow, lines))
        findings.extend(_env_findings(workflow))
    unique = list(dict.fromkeys(findings))
    unique.sort(key=lambda f: (f.path, f.line, f.pattern, f.detail))
    return unique, workflows, failures


def _failure_details(failures: list[ParseFailure]) -> list[str]:
    return [f"{failure.path}: parse failure: {failure.reason}" for failure in failures]


def check_dangerous_workflow(snapshot: RepoSnapshot) -> CheckResult:
    """Flag untrusted checkouts and injectable event text in workflows."""
    info = get_check("Dangerous-Workflow")
    if not snapshot.files_of_kind(FileKind.WORKFLOW):
        return info.result(-1, "no CI workflow files to evaluate")
    findings, workflows, failures = collect_findings(snapshot)
    details = _failure_details(failures)
    if not workflows:
        return info.result(-1, "no workflow file could be parsed", tuple(details))
    if findings:
        details = [finding.render() for finding in findings] + details
        return info.result(0, f"{len(findings)} dangerous workflow pattern(s) found",
                           tuple(details))
    return info.result(10, f"no dangerous patterns in {len(workflows)} workflow file(s)",
                       tuple(details))


def _file_token_compliant(workflow: Workflow) -> str | None:
    """None when compliant, else a short description of the violation."""
    permissions = workflow.top_level_permissions
    if permissions is None:
        return "no top-level permissions block"
    writes = sorted(name for name, grant in permissions.items() if grant == "write")
    if writes:
        return f"top-level write permission: {', '.join(writes)}"
    return None


def check_token_permissions(snapshot: RepoSnapshot) -> CheckResult:
    """Score the fraction of workflow files whose tokens default to read-only."""
    info = get_check("Token-Permissions")
    if not snapshot.files_of_kind(FileKind.WORKFLOW):
        return info.result(-1, "no CI workflow files to evaluate")
    workflows, failures = parse_workflows(snapshot)
    details = _failure_details(failures)
    if not workflows:
        return info.result(-1, "no workflow file could be parsed", tuple(details))
    compliant = 0
    for workflow in sorted(workflows, key=lambda w: w.path):
        violation = _file_token_compliant(workflow)
        if violation is None:
            compliant += 1
        else:
            details.append(f"{workflow.path}: {violation}")
    score = ratio_score(compliant, len(workflows))
    reason = f"{compliant}/{len(workflows)} workflow files restrict top-level token permissions"
    return info.result(score, reason, tuple(details))


def detect_publish_signals(snapshot: RepoSnapshot) -> list[PublishSignal]:
    """Find registry-publishing steps by content; filenames are never consulted."""
    workflows, _ = parse_workflows(snapshot)
    signals = []
    for workflow in workflows:
        text = snapshot.read_text(workflow.path) or ""
        lines = text.splitlines()
        for job in workflow.jobs:
            for step in job.steps:
                if step.uses:
                    lowered = step.uses.lower()
                    for action, mechanism in PUBLISH_ACTIONS:
                        if lowered.startswith(action):
                            signals.append(PublishSignal(workflow.path, step.line, mechanism))
                if step.run_script:
                    for command, mechanism in PUBLISH_COMMANDS:
                        if command in step.run_script:
                            line = _line_containing(lines, command, step.line)
                            signals.append(PublishSignal(workflow.path, line, mechanism))
    unique = list(dict.fromkeys(signals))
    unique.sort(key=lambda s: (s.path, s.line, s.mechanism))
    return unique

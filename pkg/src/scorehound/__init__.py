"""Repository security-health scanning and ecosystem statistics."""

from .dependencies import (
    DependencyRef,
    check_binary_artifacts,
    check_dependency_update_tool,
    check_pinned_dependencies,
    extract_dependency_refs,
)
from .errors import InputError, ParseError
from .hygiene import (
    LicenseEvidence,
    check_branch_protection,
    check_code_review,
    check_license,
    check_maintained,
    check_packaging,
    check_security_policy,
    check_signed_releases,
)
from .intel import (
    EMPTY_INTEL,
    IntelStore,
    check_cii_best_practices,
    check_fuzzing,
    check_vulnerabilities,
    load_intel,
    normalize_repo_identity,
)
from .registry import CHECKS, IMPLEMENTED_CHECKS, CheckInfo, CheckResult, RiskLevel, get_check
from .repo import (
    CommitRecord,
    FileEntry,
    FileKind,
    IssueEvent,
    ProtectionSettings,
    ReleaseRecord,
    RepoSnapshot,
    TagRecord,
    classify_file,
    is_empty,
    load_snapshot,
)
from .scoring import (
    INCONCLUSIVE,
    ScoreReport,
    SsdfReport,
    aggregate_score,
    run_all_checks,
    ssdf_coverage,
)
from .stats import (
    Category,
    FrequencyRow,
    PackageRecord,
    categorize,
    cohen_kappa,
    frequency_table,
    rank_by_dependents,
)
from .workflows import (
    ParseFailure,
    PublishSignal,
    Workflow,
    WorkflowFinding,
    check_dangerous_workflow,
    check_token_permissions,
    detect_publish_signals,
    parse_workflows,
)

__version__ = "0.1.0"

__all__ = [
    "CHECKS",
    "Category",
    "CheckInfo",
    "CheckResult",
    "CommitRecord",
    "DependencyRef",
    "EMPTY_INTEL",
    "FileEntry",
    "FileKind",
    "FrequencyRow",
    "IMPLEMENTED_CHECKS",
    "INCONCLUSIVE",
    "InputError",
    "IntelStore",
    "IssueEvent",
    "LicenseEvidence",
    "PackageRecord",
    "ParseError",
    "ParseFailure",
    "ProtectionSettings",
    "PublishSignal",
    "ReleaseRecord",
    "RepoSnapshot",
    "RiskLevel",
    "ScoreReport",
    "SsdfReport",
    "TagRecord",
    "Workflow",
    "WorkflowFinding",
    "aggregate_score",
    "categorize",
    "check_binary_artifacts",
    "check_branch_protection",
    "check_cii_best_practices",
    "check_code_review",
    "check_dangerous_workflow",
    "check_dependency_update_tool",
    "check_fuzzing",
    "check_license",
    "check_maintained",
    "check_packaging",
    "check_pinned_dependencies",
    "check_security_policy",
    "check_signed_releases",
    "check_token_permissions",
    "check_vulnerabilities",
    "classify_file",
    "cohen_kappa",
    "detect_publish_signals",
    "extract_dependency_refs",
    "frequency_table",
    "get_check",
    "is_empty",
    "load_intel",
    "load_snapshot",
    "normalize_repo_identity",
    "parse_workflows",
    "rank_by_dependents",
    "run_all_checks",
    "ssdf_coverage",
]

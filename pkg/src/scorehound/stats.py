"""Ecosystem-level aggregation of many scanned packages.

Scores fall into three categories: inconclusive (-1), zero, and positive
(1-10). Distribution statistics (mean/median/std) are computed over
conclusive scores only by default; std is the population form.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import InputError, ParseError
from .registry import CHECKS
from .rounding import round_half_away
from .scoring import ScoreReport


class Category(Enum):
    INCONCLUSIVE = "inconclusive"
    ZERO = "zero"
    POSITIVE = "positive"


def categorize(score: int) -> Category:
    """Bucket a check score: -1, 0, or 1-10."""
    if score == -1:
        return Category.INCONCLUSIVE
    if 0 <= score <= 10:
        return Category.ZERO if score == 0 else Category.POSITIVE
    raise InputError(f"score {score} outside {{-1}} union [0, 10]")


@dataclass(frozen=True)
class PackageRecord:
    package: str
    ecosystem: str
    repo: str
    dependents: int
    report: ScoreReport

    def __post_init__(self) -> None:
        if self.dependents < 0:
            raise ValueError("dependents must be non-negative")

    @classmethod
    def from_dict(cls, payload: dict) -> "PackageRecord":
        if not isinstance(payload, dict):
            raise ParseError("package record: expected an object")
        for field_name in ("package", "ecosystem"):
            if not isinstance(payload.get(field_name), str) or not payload[field_name]:
                raise ParseError(f"package record: missing {field_name}")
        dependents = payload.get("dependents", 0)
        if not isinstance(dependents, int) or dependents < 0:
            raise ParseError("package record: dependents must be a non-negative integer")
        report_payload = payload.get("report")
        if not isinstance(report_payload, dict):
            raise ParseError("package record: missing report")
        return cls(
            package=payload["package"],
            ecosystem=payload["ecosystem"],
            repo=str(payload.get("repo", "")),
            dependents=dependents,
            report=ScoreReport.from_dict(report_payload),
        )


@dataclass(frozen=True)
class FrequencyRow:
    check: str
    ecosystem: str
    n: int
    n_inconclusive: int
    n_zero: int
    n_positive: int
    pct_inconclusive: float
    pct_zero: float
    pct_positive: float
    mean: float | None
    median: float | None
    std: float | None


def _pct(count: int, n: int) -> float:
    return float(round_half_away(Fraction(100 * count, n), 1))


def _score_of(record: PackageRecord, check: str) -> int:
    scores = record.report.scores_by_name()
    if check not in scores:
        raise ParseError(f"record {record.package}: report missing check {check}")
    return scores[check]


def frequency_table(records: list[PackageRecord], group_by: str = "ecosystem",
                    include_inconclusive: bool = False) -> list[FrequencyRow]:
    """One row per (check, ecosystem) with category percentages and stats.

    `include_inconclusive` folds -1 scores into mean/median/std, which are
    otherwise computed over conclusive scores only.
    """
    if group_by != "ecosystem":
        raise InputError(f"unsupported group_by {group_by!r}")
    if not records:
        return []
    check_names = [info.name for info in CHECKS
                   if any(info.name in r.report.scores_by_name() for r in records)]
    ecosystems = sorted({record.ecosystem for record in records})
    rows = []
    for ecosystem in ecosystems:
        group = [r for r in records if r.ecosystem == ecosystem]
        for check in check_names:
            scores = [_score_of(record, check) for record in group]
            counts = Counter(categorize(score) for score in scores)
            n = len(scores)
            stat_scores = scores if include_inconclusive else [s for s in scores if s >= 0]
            mean = median = std = None
            if stat_scores:
                mean = statistics.fmean(stat_scores)
                median = float(statistics.median(stat_scores))
                std = statistics.pstdev(stat_scores)
            rows.append(FrequencyRow(
                check=check,
                ecosystem=ecosystem,
                n=n,
                n_inconclusive=counts[Category.INCONCLUSIVE],
                n_zero=counts[Category.ZERO],
                n_positive=counts[Category.POSITIVE],
                pct_inconclusive=_pct(counts[Category.INCONCLUSIVE], n),
                pct_zero=_pct(counts[Category.ZERO], n),
                pct_positive=_pct(counts[Category.POSITIVE], n),
                mean=mean,
                median=median,
                std=std,
            ))
    rows.sort(key=lambda row: (row.ecosystem, check_names.index(row.check)))
    return rows


def rank_by_dependents(records: list[PackageRecord], check: str,
                       category_filter: Category | set[Category],
                       k: int) -> list[PackageRecord]:
    """Top-k matching records by dependents, ties broken by package name."""
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    wanted = {category_filter} if isinstance(category_filter, Category) else set(category_filter)
    matching = [r for r in records if categorize(_score_of(r, check)) in wanted]
    matching.sort(key=lambda record: (-record.dependents, record.package))
    return matching[:k]


def cohen_kappa(labels_a: list, labels_b: list) -> float:
    """Chance-corrected agreement between two raters over the same items."""
    if len(labels_a) != len(labels_b):
        raise InputError("label lists must have equal length")
    n = len(labels_a)
    if n == 0:
        raise InputError("label lists must be non-empty")
    observed = Fraction(sum(1 for a, b in zip(labels_a, labels_b) if a == b), n)
    count_a = Counter(labels_a)
    count_b = Counter(labels_b)
    expected = sum(
        (Fraction(count_a[label], n) * Fraction(count_b[label], n)
         for label in set(count_a) | set(count_b)),
        Fraction(0),
    )
    if expected == 1:
        return 1.0
    return float((observed - expected) / (1 - expected))


CSV_HEADER = "check,ecosystem,n,pct_inconclusive,pct_zero,pct_positive,mean,median,std"


def _stat_text(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def render_frequency_csv(rows: list[FrequencyRow]) -> str:
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(",".join([
            row.check,
            row.ecosystem,
            str(row.n),
            f"{row.pct_inconclusive:.1f}",
            f"{row.pct_zero:.1f}",
            f"{row.pct_positive:.1f}",
            _stat_text(row.mean),
            _stat_text(row.median),
            _stat_text(row.std),
        ]))
    return "\n".join(lines) + "\n"


def render_frequency_markdown(rows: list[FrequencyRow]) -> str:
    """Checks as rows, one column group per ecosystem."""
    if not rows:
        return "(no records)\n"
    ecosystems = sorted({row.ecosystem for row in rows})
    check_order = list(dict.fromkeys(row.check for row in rows))
    by_key = {(row.check, row.ecosystem): row for row in rows}

    header = ["Check"]
    for eco in ecosystems:
        header.extend([f"{eco} n", f"{eco} %[-1]", f"{eco} %[0]", f"{eco} %[1-10]",
                       f"{eco} mean", f"{eco} median", f"{eco} std"])
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + " --- |" * len(header),
    ]
    for check in check_order:
        cells = [check]
        for eco in ecosystems:
            row = by_key.get((check, eco))
            if row is None:
                cells.extend(["-"] * 7)
                continue
            cells.extend([
                str(row.n),
                f"{row.pct_inconclusive:.1f}",
                f"{row.pct_zero:.1f}",
                f"{row.pct_positive:.1f}",
                _stat_text(row.mean) or "-",
                _stat_text(row.median) or "-",
                _stat_text(row.std) or "-",
            ])
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("mean/median/std cover conclusive scores (>= 0) only; "
                 "std is the population form (divisor n).")
    return "\n".join(lines) + "\n"

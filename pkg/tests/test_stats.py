from __future__ import annotations


import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scorehound import (
    IMPLEMENTED_CHECKS,
    Category,
    InputError,
    PackageRecord,
    ScoreReport,
    categorize,
    cohen_kappa,
    frequency_table,
    get_check,
    rank_by_dependents,
)
from scorehound.stats import render_frequency_csv, render_frequency_markdown
from oracles import distribution_row, kappa_contingency

CHECK_NAMES = [info.name for info in IMPLEMENTED_CHECKS]


def report_for(scores: dict[str, int] | int) -> ScoreReport:
    if isinstance(scores, int):
        scores = {name: scores for name in CHECK_NAMES}
    results = tuple(get_check(name).result(scores[name], "t") for name in CHECK_NAMES)
    return ScoreReport(repo="r", scan_time=0, results=results, aggregate="inconclusive")


def record(package: str, ecosystem: str, dependents: int,
           scores: dict[str, int] | int) -> PackageRecord:
    return PackageRecord(package=package, ecosystem=ecosystem, repo="r",
                         dependents=dependents, report=report_for(scores))


def single_check_records(values: list[int], check: str = "Security-Policy",
                         ecosystem: str = "npm") -> list[PackageRecord]:
    records = []
    for i, value in enumerate(values):
        scores = {name: 10 for name in CHECK_NAMES}
        scores[check] = value
        records.append(record(f"pkg{i}", ecosystem, i, scores))
    return records


class TestCategorize:
    def test_minus_one(self):
        assert categorize(-1) is Category.INCONCLUSIVE

    def test_zero(self):
        assert categorize(0) is Category.ZERO

    def test_positive(self):
        assert categorize(7) is Category.POSITIVE

    @pytest.mark.parametrize("bad", [-2, 11, 42])
    def test_out_of_range(self, bad):
        with pytest.raises(InputError):
            categorize(bad)

    @given(st.integers(min_value=-1, max_value=10))
    def test_total_on_domain(self, score):
        expected = (Category.INCONCLUSIVE if score == -1
                    else Category.ZERO if score == 0 else Category.POSITIVE)
        assert categorize(score) is expected


class TestFrequencyTable:
    def test_spec_example_ten_records(self):
        values = [10, 0, 0, 0, 0, 0, 0, 0, 0, -1]
        rows = frequency_table(single_check_records(values))
        row = next(r for r in rows if r.check == "Security-Policy")
        assert row.n == 10
        assert row.pct_positive == 10.0
        assert row.pct_zero == 80.0
        assert row.pct_inconclusive == 10.0
        oracle = distribution_row(values)
        assert row.mean == pytest.approx(oracle["mean"], abs=1e-12)
        assert row.mean == pytest.approx(10 / 9, abs=1e-12)
        assert row.median == 0
        assert row.std == pytest.approx(oracle["std"], abs=1e-12)

    def test_all_tens(self):
        rows = frequency_table(single_check_records([10] * 4))
        row = next(r for r in rows if r.check == "Security-Policy")
        assert row.pct_positive == 100.0
        assert row.mean == 10
        assert row.std == 0

    def test_all_inconclusive(self):
        records = [record(f"p{i}", "npm", i, -1) for i in range(3)]
        rows = frequency_table(records)
        row = rows[0]
        assert row.pct_inconclusive == 100.0
        assert row.mean is None and row.median is None and row.std is None

    def test_empty_dataset(self):
        assert frequency_table([]) == []

    def test_one_row_per_check_and_ecosystem(self):
        records = [record("a", "npm", 1, 10), record("b", "pypi", 2, 10)]
        rows = frequency_table(records)
        assert len(rows) == len(CHECK_NAMES) * 2
        assert {row.ecosystem for row in rows} == {"npm", "pypi"}

    def test_include_inconclusive_flag(self):
        values = [10, -1, -1, -1]
        rows = frequency_table(single_check_records(values), include_inconclusive=True)
        row = next(r for r in rows if r.check == "Security-Policy")
        assert row.mean == pytest.approx((10 - 3) / 4)

    def test_missing_check_rejected(self):
        good = record("a", "npm", 1, 10)
        partial = PackageRecord(
            package="b", ecosystem="npm", repo="r", dependents=0,
            report=ScoreReport(
                repo="r", scan_time=0,
                results=(get_check("License").result(5, "t"),),
                aggregate=5.0,
            ),
        )
        with pytest.raises(InputError):
            frequency_table([good, partial])

    def test_unsupported_group_by(self):
        with pytest.raises(InputError):
            frequency_table([record("a", "npm", 1, 10)], group_by="package")


@settings(max_examples=60)
@given(st.lists(st.integers(min_value=-1, max_value=10), min_size=1, max_size=40),
       st.randoms(use_true_random=False))
def test_frequency_table_matches_oracle_and_is_order_free(values, rng):
    records = single_check_records(values)
    rows = frequency_table(records)
    row = next(r for r in rows if r.check == "Security-Policy")
    oracle = distribution_row(values)
    assert row.pct_inconclusive == oracle["pct_inconclusive"]
    assert row.pct_zero == oracle["pct_zero"]
    assert row.pct_positive == oracle["pct_positive"]
    for key in ("mean", "median", "std"):
        expected = oracle[key]
        actual = getattr(row, key)
        if expected is None:
            assert actual is None
        else:
            assert actual == pytest.approx(expected, abs=1e-9)
    # category percentages sum to 100 within one rounding step
    assert abs(row.pct_inconclusive + row.pct_zero + row.pct_positive - 100.0) <= 0.1 + 1e-9
    shuffled = list(records)
    rng.shuffle(shuffled)
    assert frequency_table(shuffled) == rows


class TestRankByDependents:
    def test_sort_oracle_example(self):
        records = [
            record("low", "npm", 0, 0),
            record("high", "npm", 58, 0),
            record("mid", "npm", 13, 0),
            record("excluded", "npm", 99, 10),
        ]
        top = rank_by_dependents(records, "Security-Policy", Category.ZERO, k=2)
        assert [r.package for r in top] == ["high", "mid"]

    def test_no_matches(self):
        records = [record("a", "npm", 5, 10)]
        assert rank_by_dependents(records, "Security-Policy", Category.ZERO, k=3) == []

    def test_top_25_protocol(self):
        records = [record(f"p{i:03d}", "npm", i, 0) for i in range(60)]
        top = rank_by_dependents(records, "Security-Policy", Category.ZERO, k=25)
        assert len(top) == 25
        assert top[0].dependents == 59

    def test_ties_broken_by_name(self):
        records = [record("zeta", "npm", 7, 0), record("alpha", "npm", 7, 0)]
        top = rank_by_dependents(records, "Security-Policy", Category.ZERO, k=2)
        assert [r.package for r in top] == ["alpha", "zeta"]

    def test_category_set_filter(self):
        records = [record("a", "npm", 3, 0), record("b", "npm", 2, -1)]
        top = rank_by_dependents(records, "Security-Policy",
                                 {Category.ZERO, Category.INCONCLUSIVE}, k=5)
        assert len(top) == 2

    def test_k_validation(self):
        with pytest.raises(InputError):
            rank_by_dependents([], "Security-Policy", Category.ZERO, k=0)


class TestCohenKappa:
    def test_perfect_agreement(self):
        assert cohen_kappa(["x", "y", "z"], ["x", "y", "z"]) == 1.0

    def test_hand_case_zero(self):
        # po = 0.5, pe = 0.5 -> kappa = 0
        assert cohen_kappa(["x", "x", "y", "y"], ["x", "y", "x", "y"]) == \
            pytest.approx(0.0, abs=1e-9)

    def test_hand_case_half(self):
        # po = 0.75, pe = (3/4)(2/4) + (1/4)(2/4) = 0.5 -> kappa = 0.5
        assert cohen_kappa(["x", "x", "x", "y"], ["x", "x", "y", "y"]) == \
            pytest.approx(0.5, abs=1e-9)

    def test_constant_identical_raters(self):
        assert cohen_kappa(["x", "x"], ["x", "x"]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            cohen_kappa(["x"], ["x", "y"])

    def test_empty_lists(self):
        with pytest.raises(InputError):
            cohen_kappa([], [])

    @given(st.lists(st.sampled_from("abc"), min_size=1, max_size=40),
           st.data())
    def test_matches_contingency_oracle_and_symmetry(self, a, data):
        b = data.draw(st.lists(st.sampled_from("abc"), min_size=len(a), max_size=len(a)))
        actual = cohen_kappa(a, b)
        assert actual == pytest.approx(kappa_contingency(a, b), abs=1e-9)
        assert actual == pytest.approx(cohen_kappa(b, a), abs=1e-9)
        assert -1.0 - 1e-9 <= actual <= 1.0 + 1e-9

    @given(st.lists(st.sampled_from("abcd"), min_size=2, max_size=30)
           .filter(lambda xs: len(set(xs)) >= 2))
    def test_self_agreement_is_one(self, labels):
        assert cohen_kappa(labels, labels) == 1.0


class TestRecordParsing:
    def test_from_dict_round_trip(self, all_good_scan):
        from scorehound import run_all_checks
        from conftest import NOW

        snapshot, intel = all_good_scan
        report = run_all_checks(snapshot, intel, NOW)
        payload = {"package": "rocket", "ecosystem": "pypi", "repo": snapshot.repo_id,
                   "dependents": 42, "report": report.to_dict()}
        parsed = PackageRecord.from_dict(payload)
        assert parsed.report == report
        assert parsed.dependents == 42

    @pytest.mark.parametrize("mutation", [
        lambda p: p.pop("package"),
        lambda p: p.pop("ecosystem"),
        lambda p: p.pop("report"),
        lambda p: p.__setitem__("dependents", -3),
        lambda p: p.__setitem__("report", "oops"),
    ])
    def test_bad_payloads_rejected(self, mutation, all_good_scan):
        from scorehound import run_all_checks
        from conftest import NOW

        snapshot, intel = all_good_scan
        report = run_all_checks(snapshot, intel, NOW)
        payload = {"package": "rocket", "ecosystem": "pypi", "repo": "r",
                   "dependents": 1, "report": report.to_dict()}
        mutation(payload)
        with pytest.raises(InputError):
            PackageRecord.from_dict(payload)


class TestRendering:
    def test_csv_header_and_shape(self):
        rows = frequency_table(single_check_records([10, 0, -1]))
        text = render_frequency_csv(rows)
        lines = text.splitlines()
        assert lines[0] == "check,ecosystem,n,pct_inconclusive,pct_zero,pct_positive,mean,median,std"
        assert len(lines) == 1 + len(rows)
        assert all(line.count(",") == 8 for line in lines)

    def test_markdown_column_groups(self):
        records = [record("a", "npm", 1, 10), record("b", "pypi", 2, 0)]
        text = render_frequency_markdown(frequency_table(records))
        header = text.splitlines()[0]
        assert "npm n" in header and "pypi n" in header
        assert "npm %[1-10]" in header
        assert "population" in text

import math
from fractions import Fraction

import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import fisher_two_sided_oracle, wilcoxon_exact_oracle
from socbench.errors import ArityMismatch, EmptySample
from socbench.stats import (
    ContingencyTable,
    fisher_directional,
    fisher_exact,
    wilcoxon_rank_sum,
)

BADSOC_COUNTS = [1] * 7 + [2] * 13 + [3] * 9 + [4] * 2 + [5] * 1
GOODSOC_COUNTS = [1] * 6 + [2] * 5 + [3] * 11 + [4] * 5 + [5] * 4


class TestContingencyTable:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            ContingencyTable(-1, 2, 3, 4)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            ContingencyTable(0, 0, 0, 0)

    def test_degenerate_detection(self):
        assert ContingencyTable(0, 0, 3, 4).degenerate
        assert ContingencyTable(0, 3, 0, 4).degenerate
        assert not ContingencyTable(1, 2, 3, 4).degenerate


class TestFisherExact:
    def test_symmetric_table(self):
        result = fisher_exact((5, 5, 5, 5))
        assert result.p_value == pytest.approx(1.0)
        assert result.odds_ratio == pytest.approx(1.0, abs=1e-9)

    def test_small_table_enumeration(self):
        # margins (4,4;4,4): five tables, two-sided p = 34/70
        result = fisher_exact((3, 1, 1, 3))
        assert result.p_value == pytest.approx(34 / 70, abs=1e-12)
        assert result.p_value == pytest.approx(
            float(fisher_two_sided_oracle(3, 1, 1, 3)), abs=1e-12
        )

    def test_conditional_mle_against_r_reference(self):
        # R's fisher.test documents 6.408309 for this table (tea tasting)
        result = fisher_exact((3, 1, 1, 3))
        assert result.odds_ratio is not None
        assert 1 / result.odds_ratio == pytest.approx(6.40832, abs=5e-4)

    def test_treatment_relative_orientation(self):
        result = fisher_exact((9, 23, 17, 14))
        assert result.odds_ratio == pytest.approx(3.0451, abs=1e-3)

    def test_detection_tables_from_comparison_grid(self):
        for table, odds in [
            ((9, 23, 17, 14), 3.045),
            ((1, 31, 7, 24), 8.773),
            ((10, 22, 12, 19), 1.382),
            ((14, 18, 9, 22), 1 / 1.8817),
        ]:
            result = fisher_exact(table)
            assert result.odds_ratio == pytest.approx(odds, rel=1e-3), table

    def test_one_sided_tails(self):
        assert fisher_exact((9, 23, 17, 14), "less").p_value == pytest.approx(
            0.028472, abs=1e-5
        )
        assert fisher_exact((14, 18, 9, 22), "greater").p_value == pytest.approx(
            0.170818, abs=1e-5
        )

    def test_directional_is_min_tail(self):
        for table in [(9, 23, 17, 14), (14, 18, 9, 22), (3, 1, 1, 3)]:
            expected = min(
                fisher_exact(table, "less").p_value,
                fisher_exact(table, "greater").p_value,
            )
            assert fisher_directional(table).p_value == pytest.approx(expected)

    def test_degenerate_margins(self):
        result = fisher_exact((0, 0, 3, 4))
        assert result.p_value == 1.0
        assert result.odds_ratio is None
        assert "degenerate" in result.details

    def test_zero_cell_infinite_or(self):
        # second row fully positive, first fully negative
        result = fisher_exact((0, 5, 5, 0))
        assert result.odds_ratio == math.inf
        result = fisher_exact((5, 0, 0, 5))
        assert result.odds_ratio == 0.0

    def test_statistic_is_observed_probability(self):
        result = fisher_exact((3, 1, 1, 3))
        assert result.statistic == pytest.approx(16 / 70)

    def test_matches_scipy_two_sided(self):
        for table in [(9, 23, 17, 14), (2, 8, 5, 5), (12, 3, 7, 9), (1, 1, 1, 1)]:
            _, p = scipy.stats.fisher_exact([[table[0], table[1]], [table[2], table[3]]])
            assert fisher_exact(table).p_value == pytest.approx(p, rel=1e-9)


@settings(max_examples=120, deadline=None)
@given(st.tuples(st.integers(0, 14), st.integers(0, 14),
                 st.integers(0, 14), st.integers(0, 14)))
def test_fisher_invariances(cells):
    a, b, c, d = cells
    if a + b + c + d == 0:
        return
    table = ContingencyTable(a, b, c, d)
    if table.degenerate:
        return
    base = fisher_exact(table)
    # simultaneous row and column swap leaves everything unchanged
    swapped = fisher_exact((d, c, b, a))
    assert swapped.p_value == pytest.approx(base.p_value, rel=1e-12)
    if base.odds_ratio not in (0.0, math.inf) and base.odds_ratio is not None:
        assert swapped.odds_ratio == pytest.approx(base.odds_ratio, rel=1e-6)
        # single row swap inverts the odds ratio
        row_swapped = fisher_exact((c, d, a, b))
        assert row_swapped.odds_ratio == pytest.approx(1 / base.odds_ratio, rel=1e-6)
    # p is row-swap invariant too (two-sided)
    assert fisher_exact((c, d, a, b)).p_value == pytest.approx(base.p_value, rel=1e-12)


class TestWilcoxon:
    def test_reference_count_fixture(self):
        result = wilcoxon_rank_sum(BADSOC_COUNTS, GOODSOC_COUNTS)
        assert result.statistic == pytest.approx(358.0)
        assert result.p_value == pytest.approx(0.050494, abs=1e-5)

    def test_matches_scipy_with_ties(self):
        ref = scipy.stats.mannwhitneyu(
            BADSOC_COUNTS, GOODSOC_COUNTS, alternative="two-sided",
            use_continuity=True, method="asymptotic",
        )
        result = wilcoxon_rank_sum(BADSOC_COUNTS, GOODSOC_COUNTS)
        assert result.statistic == pytest.approx(ref.statistic)
        assert result.p_value == pytest.approx(ref.pvalue, rel=1e-9)

    def test_one_sided_with_ties_matches_scipy(self):
        ref = scipy.stats.mannwhitneyu(
            BADSOC_COUNTS, GOODSOC_COUNTS, alternative="less",
            use_continuity=True, method="asymptotic",
        )
        result = wilcoxon_rank_sum(BADSOC_COUNTS, GOODSOC_COUNTS, "less")
        assert result.p_value == pytest.approx(ref.pvalue, rel=1e-9)

    def test_identical_samples(self):
        result = wilcoxon_rank_sum([1, 2, 3], [1, 2, 3])
        assert result.p_value == 1.0

    def test_disjoint_exact(self):
        result = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
        assert result.statistic == 0
        assert result.p_value == pytest.approx(0.1)  # 2/20 arrangements

    def test_exact_matches_enumeration_oracle(self):
        samples = [
            ([1.0, 5.0, 2.5], [3.0, 4.0]),
            ([10, 20], [1, 2, 3, 4]),
            ([7], [1, 2, 30]),
            ([1, 4, 6, 8], [2, 3, 5, 7, 9]),
        ]
        for x, y in samples:
            result = wilcoxon_rank_sum(x, y)
            oracle = wilcoxon_exact_oracle(len(x), len(y), result.statistic)
            assert result.p_value == pytest.approx(float(oracle), abs=1e-12)

    def test_exact_matches_scipy_exact(self):
        x, y = [1, 4, 6, 8, 11], [2, 3, 5, 7, 9]
        ref = scipy.stats.mannwhitneyu(x, y, alternative="two-sided", method="exact")
        result = wilcoxon_rank_sum(x, y)
        assert result.p_value == pytest.approx(ref.pvalue, rel=1e-12)

    def test_empty_sample_rejected(self):
        with pytest.raises(EmptySample):
            wilcoxon_rank_sum([], [1])
        with pytest.raises(EmptySample):
            wilcoxon_rank_sum([1], [])

    def test_all_tied_values(self):
        result = wilcoxon_rank_sum([3, 3], [3, 3, 3])
        assert result.p_value == 1.0

    def test_shift_drives_p_down(self):
        x = list(range(12))
        baseline = wilcoxon_rank_sum(x, [v + 0.5 for v in x]).p_value
        shifted = wilcoxon_rank_sum(x, [v + 100 for v in x]).p_value
        assert shifted < baseline
        assert shifted == min(
            wilcoxon_rank_sum(x, [v + 100 for v in x], "less").p_value * 2,
            1.0,
        )


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.integers(0, 8), min_size=1, max_size=9),
    st.lists(st.integers(0, 8), min_size=1, max_size=9),
)
def test_u_symmetry_including_ties(x, y):
    u_xy = wilcoxon_rank_sum(x, y).statistic
    u_yx = wilcoxon_rank_sum(y, x).statistic
    assert u_xy + u_yx == pytest.approx(len(x) * len(y))


def test_compare_conditions_arity():
    with pytest.raises(ArityMismatch):
        from socbench.stats import compare_conditions

        compare_conditions([])


def test_compare_conditions_identical_summaries():
    from socbench.reports import ConditionSummary, PhaseCorrectCounts
    from socbench.stats import compare_conditions

    def summary(condition):
        return ConditionSummary(
            condition=condition,
            groups=10,
            reports_total=20,
            per_group_report_counts=(2,) * 10,
            scenario_groups={"s1": 4, "s2": 6},
            both_count=2,
            none_count=2,
            phase_correct={
                sid: PhaseCorrectCounts(
                    reporting_groups=n, recon=2, exploit=3,
                    delivery_any=1, delivery_both=0, delivery_labels={},
                )
                for sid, n in (("s1", 4), ("s2", 6))
            },
        )

    report = compare_conditions([summary("A"), summary("B")])
    for cell in report.identification + report.investigation:
        if cell.odds_ratio is not None:
            assert cell.odds_ratio == pytest.approx(1.0, abs=1e-9)
        assert not cell.significant_two_sided
        assert not cell.significant_directional
    assert report.submissions["rank_sum"]["p_two_sided"] == 1.0

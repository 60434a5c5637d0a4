"""Nonparametric tests for condition comparisons.

Fisher's exact test on 2x2 tables with the conditional-MLE odds ratio, and
the Wilcoxon rank-sum test with midranks for ties. Conventions:

* Tables are laid out rows = condition (baseline first), columns = outcome
  (positive first). The reported odds ratio is the conditional maximum
  likelihood estimate of the odds of a positive outcome in the SECOND row
  relative to the first, so "treatment 3x more likely" reads as OR = 3.
* The default two-sided Fisher p sums the probabilities of all tables with
  the same margins that are no more likely than the observed one (with a
  1e-7 relative tie tolerance). One-sided alternatives are exact tail sums.
* The rank-sum statistic is the Mann-Whitney U of the first sample
  (midranks minus n_x(n_x+1)/2). The p-value uses the exact distribution
  for tie-free samples with n_x+n_y <= 20, otherwise a normal approximation
  with tie-corrected variance and continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ArityMismatch, EmptySample

_ALTERNATIVES = ("two-sided", "less", "greater")


@dataclass(frozen=True)
class ContingencyTable:
    """2x2 counts; rows are conditions, columns are outcome yes/no."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        cells = (self.a, self.b, self.c, self.d)
        if any(not isinstance(v, int) or v < 0 for v in cells):
            raise ValueError(f"cells must be nonnegative integers, got {cells}")
        if sum(cells) == 0:
            raise ValueError("table needs at least one nonzero margin")

    @property
    def cells(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @property
    def degenerate(self) -> bool:
        """A zero row or column: the test carries no information."""
        return (
            self.a + self.b == 0
            or self.c + self.d == 0
            or self.a + self.c == 0
            or self.b + self.d == 0
        )


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic: float
    p_value: float
    odds_ratio: float | None = None
    details: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p_value out of [0,1]: {self.p_value}")

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "odds_ratio": self.odds_ratio,
            "details": self.details,
        }


# -- Fisher's exact test ------------------------------------------------------

def _hypergeom_weights(r1: int, c1: int, n: int) -> tuple[int, list[int]]:
    """Unnormalized table counts over the support of the (1,1) cell."""
    lo = max(0, c1 - (n - r1))
    hi = min(r1, c1)
    weights = [math.comb(r1, x) * math.comb(n - r1, c1 - x) for x in range(lo, hi + 1)]
    return lo, weights

# R compares table probabilities with a small relative slack so that float
# noise does not drop exact ties; kept here as an integer-exact comparison.
_TIE_REL = 10**7


def _fisher_p(table: ContingencyTable, alternative: str) -> float:
    a, b, c, d = table.cells
    r1, c1, n = a + b, a + c, a + b + c + d
    lo, weights = _hypergeom_weights(r1, c1, n)
    total = sum(weights)
    obs = weights[a - lo]
    if alternative == "less":
        kept = sum(weights[: a - lo + 1])
    elif alternative == "greater":
        kept = sum(weights[a - lo:])
    else:
        kept = sum(w for w in weights if w * _TIE_REL <= obs * (_TIE_REL + 1))
    return kept / total


def _conditional_mle(table: ContingencyTable) -> float:
    """Root of the conditional expectation equation E_psi[A] = a.

    This is the odds ratio of row 1 relative to row 2; the public result
    inverts it. Returns 0.0 / inf at the support boundary.
    """
    a, b, c, d = table.cells
    r1, c1, n = a + b, a + c, a + b + c + d
    lo, weights = _hypergeom_weights(r1, c1, n)
    hi = lo + len(weights) - 1
    if lo == hi:
        return float("nan")  # single-table support: estimate undefined
    if a == lo:
        return 0.0
    if a == hi:
        return float("inf")

    log_w = [math.log(w) for w in weights]

    def conditional_mean(log_psi: float) -> float:
        terms = [lw + (lo + i) * log_psi for i, lw in enumerate(log_w)]
        peak = max(terms)
        num = den = 0.0
        for i, t in enumerate(terms):
            e = math.exp(t - peak)
            num += e * (lo + i)
            den += e
        return num / den

    low, high = -1.0, 1.0
    while conditional_mean(low) > a:
        low *= 2
        if low < -700:
            return 0.0
    while conditional_mean(high) < a:
        high *= 2
        if high > 700:
            return float("inf")
    # bisect log(psi) well past the 1e-8 contract
    while high - low > 1e-11 * max(1.0, abs(low), abs(high)):
        mid = (low + high) / 2
        if conditional_mean(mid) < a:
            low = mid
        else:
            high = mid
    return math.exp((low + high) / 2)


def fisher_exact(
    table: ContingencyTable | Sequence[int], alternative: str = "two-sided"
) -> TestResult:
    """Fisher's exact test; statistic is the observed table's probability.

    ``alternative`` "less"/"greater" refer to the (1,1) cell, i.e. "less"
    tests whether the first row is under-represented in the first column.
    """
    if not isinstance(table, ContingencyTable):
        table = ContingencyTable(*table)
    if alternative not in _ALTERNATIVES:
        raise ValueError(f"alternative must be one of {_ALTERNATIVES}")
    a, b, c, d = table.cells

    if table.degenerate:
        return TestResult(
            method="fisher_exact",
            statistic=1.0,
            p_value=1.0,
            odds_ratio=None,
            details="degenerate margins: zero row or column, OR undefined",
        )

    r1, c1, n = a + b, a + c, a + b + c + d
    lo, weights = _hypergeom_weights(r1, c1, n)
    observed_probability = weights[a - lo] / sum(weights)

    p_value = _fisher_p(table, alternative)
    row1_mle = _conditional_mle(table)
    if math.isnan(row1_mle):
        odds_ratio = None
        orientation = "single-table support, OR undefined"
    else:
        odds_ratio = math.inf if row1_mle == 0.0 else (
            0.0 if math.isinf(row1_mle) else 1.0 / row1_mle
        )
        orientation = "odds ratio: second row relative to first (conditional MLE)"

    p_less = _fisher_p(table, "less")
    p_greater = _fisher_p(table, "greater")
    details = (
        f"{orientation}; alternative={alternative}; "
        f"p_two_sided={_fisher_p(table, 'two-sided'):.6g}; "
        f"p_less={p_less:.6g}; p_greater={p_greater:.6g}"
    )
    return TestResult(
        method="fisher_exact",
        statistic=observed_probability,
        p_value=min(p_value, 1.0),
        odds_ratio=odds_ratio,
        details=details,
    )


def fisher_directional(table: ContingencyTable | Sequence[int]) -> TestResult:
    """One-sided Fisher p in the direction the sample leans.

    This is the convention behind directional claims like "the second
    condition was three times more likely to ...": the tail toward the
    observed association, min(p_less, p_greater).
    """
    if not isinstance(table, ContingencyTable):
        table = ContingencyTable(*table)
    if table.degenerate:
        return fisher_exact(table)
    p_less = _fisher_p(table, "less")
    p_greater = _fisher_p(table, "greater")
    base = fisher_exact(table, "less" if p_less <= p_greater else "greater")
    return TestResult(
        method="fisher_exact_directional",
        statistic=base.statistic,
        p_value=base.p_value,
        odds_ratio=base.odds_ratio,
        details=base.details + "; directional=observed-leaning tail",
    )


# -- Wilcoxon rank-sum --------------------------------------------------------

def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    return ranks


def _exact_u_counts(n_x: int, n_y: int) -> list[int]:
    """count[u] = number of rank arrangements with Mann-Whitney U == u.

    Lattice recurrence c(m,n,u) = c(m-1,n,u-n) + c(m,n-1,u): the largest
    pooled value is either an x (beating all n y's) or a y.
    """
    c: list[list[list[int] | None]] = [
        [None] * (n_y + 1) for _ in range(n_x + 1)
    ]
    for n in range(n_y + 1):
        c[0][n] = [1]
    for m in range(1, n_x + 1):
        c[m][0] = [1]
        for n in range(1, n_y + 1):
            took_x = c[m - 1][n]
            took_y = c[m][n - 1]
            arr = [0] * (m * n + 1)
            for u in range(m * n + 1):
                if 0 <= u - n < len(took_x):
                    arr[u] += took_x[u - n]
                if u < len(took_y):
                    arr[u] += took_y[u]
            c[m][n] = arr
    return c[n_x][n_y]


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def wilcoxon_rank_sum(
    x: Sequence[float], y: Sequence[float], alternative: str = "two-sided"
) -> TestResult:
    """Rank-sum test; statistic is the Mann-Whitney U of ``x``."""
    if alternative not in _ALTERNATIVES:
        raise ValueError(f"alternative must be one of {_ALTERNATIVES}")
    if len(x) == 0 or len(y) == 0:
        raise EmptySample("both samples must be nonempty")
    n_x, n_y = len(x), len(y)
    pooled = list(x) + list(y)
    ranks = _midranks(pooled)
    rank_sum_x = sum(ranks[:n_x])
    u = rank_sum_x - n_x * (n_x + 1) / 2

    tie_groups: dict[float, int] = {}
    for value in pooled:
        tie_groups[value] = tie_groups.get(value, 0) + 1
    ties = [t for t in tie_groups.values() if t > 1]

    if not ties and n_x + n_y <= 20:
        counts = _exact_u_counts(n_x, n_y)
        total = math.comb(n_x + n_y, n_x)
        u_int = round(u)
        p_le = sum(counts[: u_int + 1]) / total
        p_ge = sum(counts[u_int:]) / total
        if alternative == "less":
            p = p_le
        elif alternative == "greater":
            p = p_ge
        else:
            p = min(1.0, 2 * min(p_le, p_ge))
        method_note = "exact"
        z = float("nan")
    else:
        n = n_x + n_y
        mean = n_x * n_y / 2
        tie_term = sum(t**3 - t for t in ties)
        variance = n_x * n_y / 12 * ((n + 1) - tie_term / (n * (n - 1)))
        if variance == 0:
            p = 1.0
            z = 0.0
        else:
            sd = math.sqrt(variance)
            diff = u - mean
            if alternative == "greater":
                z = (diff - 0.5) / sd
                p = _norm_sf(z)
            elif alternative == "less":
                z = (diff + 0.5) / sd
                p = _norm_sf(-z)
            else:
                corrected = max(0.0, abs(diff) - 0.5)
                z = math.copysign(corrected / sd, diff) if diff else 0.0
                p = min(1.0, 2 * _norm_sf(abs(z)))
        method_note = "normal approximation, tie-corrected, continuity-corrected"

    details = (
        f"{method_note}; n_x={n_x}; n_y={n_y}; rank_sum_x={rank_sum_x}; "
        f"ties={sorted(ties, reverse=True) if ties else 'none'}"
        + ("" if math.isnan(z) else f"; z={z:.6g}")
    )
    return TestResult(
        method="wilcoxon_rank_sum", statistic=u, p_value=p, details=details
    )


# -- condition comparison -----------------------------------------------------

@dataclass(frozen=True)
class ComparisonCell:
    """One grid row: counts for both conditions plus the test results.

    Both one-sided tails are reported so directional claims can be read off
    either way; p_directional is the observed-leaning tail (their minimum).
    """

    label: str
    baseline_yes: int
    baseline_n: int
    treatment_yes: int
    treatment_n: int
    odds_ratio: float | None
    p_two_sided: float
    p_treatment_greater: float
    p_baseline_greater: float
    leaning: str
    significant_two_sided: bool
    significant_directional: bool

    @property
    def p_directional(self) -> float:
        return min(self.p_treatment_greater, self.p_baseline_greater)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "baseline": {"yes": self.baseline_yes, "n": self.baseline_n,
                         "share": _share(self.baseline_yes, self.baseline_n)},
            "treatment": {"yes": self.treatment_yes, "n": self.treatment_n,
                          "share": _share(self.treatment_yes, self.treatment_n)},
            "odds_ratio": self.odds_ratio,
            "p_two_sided": self.p_two_sided,
            "p_treatment_greater": self.p_treatment_greater,
            "p_baseline_greater": self.p_baseline_greater,
            "p_directional": self.p_directional,
            "leaning": self.leaning,
            "significant_two_sided": self.significant_two_sided,
            "significant_directional": self.significant_directional,
        }


def _share(yes: int, n: int) -> str:
    if n == 0:
        return "0/0"
    return f"{100 * yes / n:.1f}% ({yes}/{n})"


def _cell(
    label: str, baseline_yes: int, baseline_n: int, treatment_yes: int,
    treatment_n: int, alpha: float,
) -> ComparisonCell:
    table = ContingencyTable(
        baseline_yes, baseline_n - baseline_yes, treatment_yes, treatment_n - treatment_yes
    )
    two_sided = fisher_exact(table)
    if table.degenerate:
        p_treatment_greater = p_baseline_greater = 1.0
        leaning = "none"
    else:
        # with fixed margins, "treatment greater" is the lower tail of the
        # baseline-first (1,1) cell
        p_treatment_greater = _fisher_p(table, "less")
        p_baseline_greater = _fisher_p(table, "greater")
        leaning = "treatment" if p_treatment_greater <= p_baseline_greater else "baseline"
    directional = min(p_treatment_greater, p_baseline_greater)
    return ComparisonCell(
        label=label,
        baseline_yes=baseline_yes,
        baseline_n=baseline_n,
        treatment_yes=treatment_yes,
        treatment_n=treatment_n,
        odds_ratio=two_sided.odds_ratio,
        p_two_sided=two_sided.p_value,
        p_treatment_greater=p_treatment_greater,
        p_baseline_greater=p_baseline_greater,
        leaning=leaning,
        significant_two_sided=two_sided.p_value < alpha,
        significant_directional=directional < alpha,
    )


@dataclass(frozen=True)
class ComparisonReport:
    baseline: str
    treatment: str
    alpha: float
    submissions: dict
    identification: tuple[ComparisonCell, ...]
    investigation: tuple[ComparisonCell, ...]

    def to_json(self) -> dict:
        return {
            "baseline": self.baseline,
            "treatment": self.treatment,
            "alpha": self.alpha,
            "submissions": self.submissions,
            "identification": [c.to_json() for c in self.identification],
            "investigation": [c.to_json() for c in self.investigation],
        }

    def to_text(self) -> str:
        lines = [
            f"Condition comparison: {self.treatment} vs {self.baseline} "
            f"(alpha={self.alpha})",
            "",
            "Submitted reports per group:",
            f"  {self.baseline}: n={self.submissions['baseline']['groups']}, "
            f"total={self.submissions['baseline']['reports_total']}, "
            f"mean={self.submissions['baseline']['mean']:.2f}, "
            f"sd={self.submissions['baseline']['sd']:.2f}",
            f"  {self.treatment}: n={self.submissions['treatment']['groups']}, "
            f"total={self.submissions['treatment']['reports_total']}, "
            f"mean={self.submissions['treatment']['mean']:.2f}, "
            f"sd={self.submissions['treatment']['sd']:.2f}",
            f"  rank-sum: W={self.submissions['rank_sum']['statistic']}, "
            f"p_two_sided={self.submissions['rank_sum']['p_two_sided']:.4g}, "
            f"p_directional={self.submissions['rank_sum']['p_directional']:.4g}",
            "",
        ]
        header = (
            f"  {'':38s} {self.baseline:>16s} {self.treatment:>16s}"
            f" {'OR':>8s} {'p(2s)':>8s} {'p(dir)':>8s}"
        )
        for title, cells in (
            ("Attack identification", self.identification),
            ("Attack investigation", self.investigation),
        ):
            lines.append(title + ":")
            lines.append(header)
            for cell in cells:
                odds = "-" if cell.odds_ratio is None else (
                    "inf" if math.isinf(cell.odds_ratio) else f"{cell.odds_ratio:.2f}"
                )
                mark = "*" if cell.significant_directional else " "
                lines.append(
                    f"  {cell.label:38s}"
                    f" {_share(cell.baseline_yes, cell.baseline_n):>16s}"
                    f" {_share(cell.treatment_yes, cell.treatment_n):>16s}"
                    f" {odds:>8s} {cell.p_two_sided:>8.3g} {cell.p_directional:>8.3g}{mark}"
                )
            lines.append("")
        lines.append("* directional p below alpha")
        return "\n".join(lines)


def compare_conditions(summaries: Sequence, alpha: float = 0.05) -> ComparisonReport:
    """Build the per-scenario / per-phase comparison grid for two conditions.

    The first summary is the baseline, the second the treatment; cells carry
    treatment-relative odds ratios. Expects report_eval.ConditionSummary
    objects (anything with the same attributes works).
    """
    if len(summaries) != 2:
        raise ArityMismatch(f"exactly two summaries required, got {len(summaries)}")
    base, treat = summaries

    counts_x = list(base.per_group_report_counts)
    counts_y = list(treat.per_group_report_counts)
    if counts_x and counts_y:
        two = wilcoxon_rank_sum(counts_x, counts_y)
        p_less = wilcoxon_rank_sum(counts_x, counts_y, "less").p_value
        p_greater = wilcoxon_rank_sum(counts_x, counts_y, "greater").p_value
        rank_sum = {
            "statistic": two.statistic,
            "p_two_sided": two.p_value,
            "p_treatment_greater": p_less,
            "p_baseline_greater": p_greater,
            "p_directional": min(p_less, p_greater),
            "leaning": "treatment" if p_less <= p_greater else "baseline",
            "details": two.details,
        }
    else:
        rank_sum = {
            "statistic": float("nan"), "p_two_sided": 1.0,
            "p_treatment_greater": 1.0, "p_baseline_greater": 1.0,
            "p_directional": 1.0, "leaning": "none", "details": "empty sample(s)",
        }

    submissions = {
        "baseline": _submission_stats(base),
        "treatment": _submission_stats(treat),
        "rank_sum": rank_sum,
    }

    scenario_ids = sorted(set(base.scenario_groups) | set(treat.scenario_groups))
    identification = [
        _cell(
            f"reported scenario {sid}",
            base.scenario_groups.get(sid, 0), base.groups,
            treat.scenario_groups.get(sid, 0), treat.groups,
            alpha,
        )
        for sid in scenario_ids
    ]
    identification.append(
        _cell("reported all scenarios", base.both_count, base.groups,
              treat.both_count, treat.groups, alpha)
    )
    identification.append(
        _cell("reported none", base.none_count, base.groups,
              treat.none_count, treat.groups, alpha)
    )

    investigation = []
    for sid in scenario_ids:
        b = base.phase_correct.get(sid)
        t = treat.phase_correct.get(sid)
        if b is None or t is None:
            continue
        for key, label in (
            ("recon", "reconnaissance correct"),
            ("exploit", "exploitation correct"),
            ("delivery_any", "delivery/control >=1 correct"),
            ("delivery_both", "delivery/control both correct"),
        ):
            investigation.append(
                _cell(
                    f"{sid}: {label}",
                    getattr(b, key), b.reporting_groups,
                    getattr(t, key), t.reporting_groups,
                    alpha,
                )
            )
    return ComparisonReport(
        baseline=base.condition,
        treatment=treat.condition,
        alpha=alpha,
        submissions=submissions,
        identification=tuple(identification),
        investigation=tuple(investigation),
    )


def _submission_stats(summary) -> dict:
    counts = list(summary.per_group_report_counts)
    n = len(counts)
    mean = sum(counts) / n if n else 0.0
    sd = math.sqrt(sum((c - mean) ** 2 for c in counts) / (n - 1)) if n > 1 else 0.0
    return {
        "groups": summary.groups,
        "reports_total": summary.reports_total,
        "mean": mean,
        "sd": sd,
    }

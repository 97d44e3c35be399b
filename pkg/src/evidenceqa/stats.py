"""Statistical analysis: Mann-Whitney U, Fisher's method, Pearson correlation.

The Mann-Whitney test enumerates the exact null distribution for small
samples (the intended use compares 5 epoch scores per setting) and falls
back to a tie- and continuity-corrected normal approximation for larger
ones. Fisher's method uses the closed-form chi-square survival function for
even degrees of freedom, so no special functions are needed there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

from scipy.special import stdtr

from .errors import ValidationError
from .model import Corpus
from .parsing import (
    DEFAULT_RULES,
    SegmentationRules,
    parse_all_citations,
    segment_sentences,
)

EXACT_LIMIT = 12


class Alternative(Enum):
    TWO_SIDED = "two-sided"
    LESS = "less"
    GREATER = "greater"


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    p: float


@dataclass(frozen=True)
class PearsonResult:
    r: float
    p: float


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j + 2) / 2  # average of 1-based positions i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2))


def mann_whitney_u(
    xs: Sequence[float],
    ys: Sequence[float],
    alternative: Alternative = Alternative.TWO_SIDED,
) -> MannWhitneyResult:
    """Rank-sum U statistic of xs with an exact or approximate p-value.

    "less" asks whether xs tend to be smaller than ys. Samples with combined
    size up to EXACT_LIMIT get an exact p by enumerating every assignment of
    the pooled midranks; larger samples use the normal approximation with tie
    and continuity corrections.
    """
    if not xs or not ys:
        raise ValidationError("mann_whitney_u requires non-empty samples")
    n1, n2 = len(xs), len(ys)
    total = n1 + n2
    pooled = list(xs) + list(ys)
    ranks = _midranks(pooled)
    r1 = sum(ranks[:n1])
    u = r1 - n1 * (n1 + 1) / 2

    if total <= EXACT_LIMIT:
        n_splits = math.comb(total, n1)
        at_most = 0
        at_least = 0
        offset = n1 * (n1 + 1) / 2
        for combo in combinations(range(total), n1):
            u_star = sum(ranks[i] for i in combo) - offset
            if u_star <= u:
                at_most += 1
            if u_star >= u:
                at_least += 1
        p_less = Fraction(at_most, n_splits)
        p_greater = Fraction(at_least, n_splits)
        if alternative is Alternative.LESS:
            return MannWhitneyResult(u, float(p_less))
        if alternative is Alternative.GREATER:
            return MannWhitneyResult(u, float(p_greater))
        return MannWhitneyResult(u, float(min(1, 2 * min(p_less, p_greater))))

    mu = n1 * n2 / 2
    tie_sum = 0
    seen: dict[float, int] = {}
    for value in pooled:
        seen[value] = seen.get(value, 0) + 1
    for count in seen.values():
        tie_sum += count**3 - count
    variance = (n1 * n2 / 12) * ((total + 1) - tie_sum / (total * (total - 1)))
    if variance <= 0:
        return MannWhitneyResult(u, 1.0)
    sd = math.sqrt(variance)
    p_less = _normal_cdf((u - mu + 0.5) / sd)
    p_greater = _normal_cdf(-(u - mu - 0.5) / sd)
    if alternative is Alternative.LESS:
        return MannWhitneyResult(u, p_less)
    if alternative is Alternative.GREATER:
        return MannWhitneyResult(u, p_greater)
    return MannWhitneyResult(u, min(1.0, 2 * min(p_less, p_greater)))


def fisher_combine(pvals: Sequence[float]) -> float:
    """Combine independent p-values; survival of chi-square with 2k dof.

    With even degrees of freedom the survival function is the closed form
    exp(-X/2) * sum_{j<k} (X/2)^j / j!, so the result is exact up to float
    rounding. Inputs are summed in sorted order for permutation invariance.
    """
    if not pvals:
        raise ValidationError("fisher_combine requires at least one p-value")
    for p in pvals:
        if not 0 < p <= 1:
            raise ValidationError(f"p-value {p!r} outside (0, 1]")
    x = -2 * math.fsum(math.log(p) for p in sorted(pvals))
    half = x / 2
    term = 1.0
    series = 1.0
    for j in range(1, len(pvals)):
        term *= half / j
        series += term
    survival = math.exp(-half) * series
    return max(min(survival, 1.0), 5e-324)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> PearsonResult:
    """Product-moment correlation with a two-sided t-distribution p-value."""
    if len(xs) != len(ys):
        raise ValidationError("pearson requires samples of equal length")
    n = len(xs)
    if n < 3:
        raise ValidationError("pearson requires at least 3 points")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    sxx = math.fsum((x - mean_x) ** 2 for x in xs)
    syy = math.fsum((y - mean_y) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        raise ValidationError("pearson requires nonzero variance in both samples")
    sxy = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    if abs(r) == 1.0:
        return PearsonResult(r, 0.0)
    t = r * math.sqrt((n - 2) / (1 - r * r))
    p = 2 * float(stdtr(n - 2, -abs(t)))
    return PearsonResult(r, min(1.0, p))


Runs = Mapping[str, Mapping[str, Mapping[str, Sequence[float]]]]


@dataclass(frozen=True)
class ComparisonRow:
    """MWU p-values for one (setting pair, metric) across test sets, merged."""

    setting_a: str
    setting_b: str
    alternative: Alternative
    metric: str
    per_test_set: dict[str, float]
    merged_p: float

    @property
    def stars(self) -> str:
        if self.merged_p < 0.001:
            return "**"
        if self.merged_p < 0.01:
            return "*"
        return ""


def compare_settings(
    runs: Runs,
    comparisons: Sequence[tuple[str, str, Alternative]],
) -> list[ComparisonRow]:
    """Per-test-set Mann-Whitney tests, merged per metric with Fisher's method.

    runs maps setting -> test set -> metric -> epoch scores. Each comparison
    is tested on every (test set, metric) present in both settings.
    """
    rows: list[ComparisonRow] = []
    for setting_a, setting_b, alternative in comparisons:
        for name in (setting_a, setting_b):
            if name not in runs:
                raise ValidationError(f"unknown setting {name!r}")
        common_sets = [t for t in runs[setting_a] if t in runs[setting_b]]
        if not common_sets:
            raise ValidationError(
                f"settings {setting_a!r} and {setting_b!r} share no test sets"
            )
        metrics: list[str] = []
        for test_set in common_sets:
            for metric in runs[setting_a][test_set]:
                if metric in runs[setting_b][test_set] and metric not in metrics:
                    metrics.append(metric)
        for metric in metrics:
            per_test_set: dict[str, float] = {}
            for test_set in common_sets:
                a = runs[setting_a][test_set].get(metric)
                b = runs[setting_b][test_set].get(metric)
                if a is None or b is None:
                    continue
                if len(a) < 2 or len(b) < 2:
                    raise ValidationError(
                        f"need at least 2 scores per test set, got {len(a)} and "
                        f"{len(b)} for {metric} on {test_set}"
                    )
                per_test_set[test_set] = mann_whitney_u(a, b, alternative).p
            rows.append(
                ComparisonRow(
                    setting_a=setting_a,
                    setting_b=setting_b,
                    alternative=alternative,
                    metric=metric,
                    per_test_set=per_test_set,
                    merged_p=fisher_combine(list(per_test_set.values())),
                )
            )
    return rows


def render_comparison_tsv(rows: Sequence[ComparisonRow]) -> str:
    test_sets: list[str] = []
    for row in rows:
        for name in row.per_test_set:
            if name not in test_sets:
                test_sets.append(name)
    header = ["setting_a", "setting_b", "alternative", "metric"]
    header += [f"p[{name}]" for name in test_sets]
    header += ["merged_p", "significance"]
    lines = ["\t".join(header)]
    for row in rows:
        cells = [row.setting_a, row.setting_b, row.alternative.value, row.metric]
        cells += [
            f"{row.per_test_set[name]:.6g}" if name in row.per_test_set else "-"
            for name in test_sets
        ]
        cells += [f"{row.merged_p:.6g}", row.stars]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def render_comparison_text(rows: Sequence[ComparisonRow]) -> str:
    lines = []
    for row in rows:
        parts = ", ".join(
            f"{name}: p={p:.4g}" for name, p in row.per_test_set.items()
        )
        stars = f" {row.stars}" if row.stars else ""
        lines.append(
            f"{row.setting_a} vs {row.setting_b} [{row.metric}, "
            f"{row.alternative.value}]: merged p={row.merged_p:.4g}{stars} ({parts})"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AnswerStatistics:
    """Corpus-level answer shape: sentence counts, lengths, citation variety."""

    n_records: int
    avg_sentences: float
    avg_sentence_words: float
    avg_unique_citations: float

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("records", str(self.n_records)),
            ("avg sentences per answer", f"{self.avg_sentences:.2f}"),
            ("avg words per sentence", f"{self.avg_sentence_words:.2f}"),
            ("avg unique citations per answer", f"{self.avg_unique_citations:.2f}"),
        ]


def _citation_key(raw: str) -> str:
    interior = raw[1:-1] if len(raw) >= 2 else raw
    return " ".join(interior.casefold().split())


def answer_statistics(
    corpus: Corpus, rules: SegmentationRules = DEFAULT_RULES
) -> AnswerStatistics:
    """Average sentence count, words per sentence, and unique citations."""
    if not corpus.records:
        raise ValidationError("cannot describe an empty corpus")
    sentence_counts: list[int] = []
    word_counts: list[int] = []
    citation_counts: list[int] = []
    for record in corpus.records:
        if record.sentences is not None:
            sentences = [s.text for s in record.sentences]
        else:
            sentences = segment_sentences(record.answer_text, rules)
        sentence_counts.append(len(sentences))
        unique: set[str] = set()
        for sentence in sentences:
            word_counts.append(len(sentence.split()))
            for citation in parse_all_citations(sentence):
                unique.add(_citation_key(citation.raw))
        citation_counts.append(len(unique))
    return AnswerStatistics(
        n_records=len(corpus.records),
        avg_sentences=sum(sentence_counts) / len(sentence_counts),
        avg_sentence_words=sum(word_counts) / len(word_counts) if word_counts else 0.0,
        avg_unique_citations=sum(citation_counts) / len(citation_counts),
    )

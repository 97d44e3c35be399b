"""Record and corpus scoring: source quality, attributability, format rate.

Source quality is a binary per-record judgment about which sources the
answer cited. Attributability is the fraction of answer sentences that end
with exactly one well-formed, matchable citation whose claim is entailed by
the cited source. Both use None for not-applicable, never 0.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .entailment import EntailmentQuery
from .errors import (
    EmptyAnswerError,
    MissingVerdictError,
    NoApplicableRecordsError,
    UnscoredRecordError,
)
from .model import (
    Corpus,
    RecordScores,
    Relevance,
    ScoredRecord,
    SentenceVerdict,
    Source,
)
from .parsing import (
    DEFAULT_RULES,
    SegmentationRules,
    count_citations,
    match_source,
    parse_all_citations,
    parse_citation,
    segment_sentences,
    strip_citation,
)

EntailFn = Callable[[EntailmentQuery], bool]

METRICS = (
    "source_quality",
    "attributability",
    "attributability_entail_only",
    "format_rate",
)


def source_quality(cited: Iterable[str], sources: Sequence[Source]) -> int | None:
    """Binary source-quality score, or None when relevance labels are missing.

    1 when the answer cites at least one source and none of the cited sources
    is irrelevant, or when it cites nothing and no relevant source existed.
    0 otherwise. Not-applicable when any source's relevance is unknown.
    """
    cited_set = set(cited)
    by_name = {s.name: s for s in sources}
    stray = cited_set - by_name.keys()
    if stray:
        raise ValueError(f"cited name {sorted(stray)[0]!r} is not among the sources")
    if any(s.relevance is Relevance.UNKNOWN for s in sources):
        return None
    if cited_set:
        bad = any(by_name[name].relevance is Relevance.IRRELEVANT for name in cited_set)
        return 0 if bad else 1
    any_relevant = any(s.relevance is Relevance.RELEVANT for s in sources)
    return 0 if any_relevant else 1


def _require_verdicts(sentences: Sequence[SentenceVerdict]) -> None:
    for i, sent in enumerate(sentences):
        if sent.format_ok and sent.entailed is None:
            raise MissingVerdictError(
                f"sentence {i} is format-correct but has no entailment verdict"
            )


def attributability(sentences: Sequence[SentenceVerdict]) -> Fraction | None:
    """Entailed-sentence fraction over all sentences; None for citation-free answers."""
    _require_verdicts(sentences)
    if not sentences:
        return None
    if not any(count_citations(s.text) > 0 for s in sentences):
        return None
    entailed = sum(1 for s in sentences if s.entailed is True)
    return Fraction(entailed, len(sentences))


def attributability_entail_only(
    sentences: Sequence[SentenceVerdict],
) -> Fraction | None:
    """Entailed fraction over format-correct sentences only; None if none exist."""
    _require_verdicts(sentences)
    formatted = sum(1 for s in sentences if s.format_ok)
    if formatted == 0:
        return None
    entailed = sum(1 for s in sentences if s.entailed is True)
    return Fraction(entailed, formatted)


def format_rate(sentences: Sequence[SentenceVerdict]) -> Fraction:
    if not sentences:
        raise EmptyAnswerError("cannot compute format rate of an empty answer")
    formatted = sum(1 for s in sentences if s.format_ok)
    return Fraction(formatted, len(sentences))


@dataclass(frozen=True)
class CorpusScores:
    """Corpus-level means in percent; None marks a metric with no applicable records."""

    source_quality: float | None
    attributability: float | None
    attributability_entail_only: float | None
    format_rate: float | None
    n_records: int
    applicable: dict[str, int]

    def get(self, metric: str) -> float:
        value = getattr(self, metric)
        if value is None:
            raise NoApplicableRecordsError(f"no applicable records for {metric}")
        return value

    def rows(self) -> list[tuple[str, str]]:
        """(metric, formatted percent) pairs; not-applicable renders as '-'."""
        out = []
        for metric in METRICS:
            value = getattr(self, metric)
            out.append((metric, "-" if value is None else f"{value:.2f}"))
        return out


def corpus_scores(corpus: Corpus) -> CorpusScores:
    """Arithmetic means over applicable records, in percent."""
    buckets: dict[str, list[Fraction]] = {m: [] for m in METRICS}
    for record in corpus.records:
        if record.scores is None:
            raise UnscoredRecordError(f"record {record.id} has no scores")
        for metric in METRICS:
            value = getattr(record.scores, metric)
            if value is not None:
                buckets[metric].append(Fraction(value))

    def mean_pct(values: list[Fraction]) -> float | None:
        if not values:
            return None
        return float(sum(values) / len(values) * 100)

    return CorpusScores(
        source_quality=mean_pct(buckets["source_quality"]),
        attributability=mean_pct(buckets["attributability"]),
        attributability_entail_only=mean_pct(buckets["attributability_entail_only"]),
        format_rate=mean_pct(buckets["format_rate"]),
        n_records=len(corpus.records),
        applicable={m: len(v) for m, v in buckets.items()},
    )


def _has_claim_text(claim: str) -> bool:
    return any(ch.isalnum() for ch in claim)


def score_record(
    record: ScoredRecord,
    entail: EntailFn,
    rules: SegmentationRules = DEFAULT_RULES,
) -> ScoredRecord:
    """Segment, parse, match, and judge one record's answer.

    A sentence is format-correct when it ends with exactly one citation-shaped
    span that matches a source uniquely and carries claim text beyond the
    citation itself. Only format-correct sentences are sent to the entailment
    backend. The cited-source set for source quality collects matches from
    every citation-shaped span, trailing or not.
    """
    sources = record.instruction.sources
    verdicts: list[SentenceVerdict] = []
    cited: set[str] = set()
    for text in segment_sentences(record.answer_text, rules):
        spans = count_citations(text)
        for attempt in parse_all_citations(text):
            name = match_source(attempt, sources)
            if name is not None:
                cited.add(name)
        citation = parse_citation(text)
        matched = match_source(citation, sources) if citation is not None else None
        if citation is not None:
            citation = replace(citation, matched_source=matched)
        claim = strip_citation(text)
        format_ok = (
            citation is not None
            and spans == 1
            and matched is not None
            and _has_claim_text(claim)
        )
        entailed: bool | None = None
        if format_ok:
            assert matched is not None
            evidence = next(s.content for s in sources if s.name == matched)
            entailed = bool(
                entail(
                    EntailmentQuery(
                        claim=claim,
                        evidence=evidence,
                        question=record.instruction.question.text,
                    )
                )
            )
        verdicts.append(
            SentenceVerdict(
                text=text, citation=citation, format_ok=format_ok, entailed=entailed
            )
        )
    scores = RecordScores(
        source_quality=source_quality(cited, sources),
        attributability=attributability(verdicts),
        attributability_entail_only=attributability_entail_only(verdicts),
        format_rate=format_rate(verdicts),
    )
    return replace(record, sentences=tuple(verdicts), scores=scores)


def score_corpus(
    corpus: Corpus,
    entail: EntailFn,
    rules: SegmentationRules = DEFAULT_RULES,
    concurrency: int = 1,
) -> Corpus:
    if concurrency > 1 and len(corpus.records) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            records = tuple(
                pool.map(lambda r: score_record(r, entail, rules), corpus.records)
            )
    else:
        records = tuple(score_record(r, entail, rules) for r in corpus.records)
    return replace(corpus, records=records)

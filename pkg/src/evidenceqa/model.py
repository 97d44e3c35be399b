"""Domain types shared across the toolkit.

Everything here is an immutable value object. Scores are exact rationals
(fractions.Fraction) so corpus averages never accumulate float error, and
not-applicable is represented as None, which is never conflated with 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Sequence

from . import prompts


class Relevance(Enum):
    RELEVANT = "relevant"
    IRRELEVANT = "irrelevant"
    UNKNOWN = "unknown"


class Origin(Enum):
    SYNTHESIZED = "synthesized"
    IMPORTED = "imported"


class Tier(Enum):
    BASE = "base"
    PLUS = "plus"
    PLUSPLUS = "plusplus"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Source:
    """One source paragraph offered to the answering model."""

    name: str
    content: str
    relevance: Relevance
    origin: Origin = Origin.SYNTHESIZED


@dataclass(frozen=True)
class Question:
    topic: str
    text: str
    id: str


@dataclass(frozen=True)
class Instruction:
    """A fully rendered answering task: question, source mix, prompt text."""

    question: Question
    sources: tuple[Source, ...]
    rendered_prompt: str
    generator: str | None = None

    @classmethod
    def build(
        cls,
        question: Question,
        sources: Sequence[Source],
        generator: str | None = None,
    ) -> "Instruction":
        """Construct an Instruction, deduplicating source names and rendering the prompt.

        Duplicate names get deterministic "#2", "#3"... suffixes in order of
        appearance, because citation matching requires unambiguous names.
        """
        seen: dict[str, int] = {}
        taken: set[str] = set()
        deduped: list[Source] = []
        for src in sources:
            count = seen.get(src.name, 0) + 1
            seen[src.name] = count
            name = src.name if count == 1 else f"{src.name}#{count}"
            while name in taken:
                count += 1
                seen[src.name] = count
                name = f"{src.name}#{count}"
            taken.add(name)
            deduped.append(src if name == src.name else replace(src, name=name))
        rendered = prompts.render_prompt(
            question.text, [(s.name, s.content) for s in deduped]
        )
        return cls(
            question=question,
            sources=tuple(deduped),
            rendered_prompt=rendered,
            generator=generator,
        )


@dataclass(frozen=True)
class Citation:
    """A parsed citation span. raw is the verbatim text including brackets."""

    raw: str
    author: str
    year: str
    page: str
    matched_source: str | None = None


@dataclass(frozen=True)
class SentenceVerdict:
    """Per-sentence judgment: citation format and entailment outcome.

    entailed is None when not evaluated; it may carry a bool only for
    format-correct sentences.
    """

    text: str
    citation: Citation | None
    format_ok: bool
    entailed: bool | None = None


@dataclass(frozen=True)
class RecordScores:
    """Record-level scores; None marks a score that is not applicable."""

    source_quality: int | None
    attributability: Fraction | None
    attributability_entail_only: Fraction | None
    format_rate: Fraction


@dataclass(frozen=True)
class ScoredRecord:
    """One instruction/answer pair, optionally with verdicts and scores."""

    id: str
    instruction: Instruction
    answer_text: str
    answer_generator: str | None = None
    sentences: tuple[SentenceVerdict, ...] | None = None
    scores: RecordScores | None = None
    tier: Tier = Tier.BASE
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Corpus:
    records: tuple[ScoredRecord, ...]
    tier: Tier = Tier.BASE
    manifest: dict[str, Any] = field(default_factory=dict)


def _validate_sources(record: ScoredRecord) -> list[str]:
    out: list[str] = []
    names: set[str] = set()
    n_rel = 0
    n_irr = 0
    synthesized = all(s.origin is Origin.SYNTHESIZED for s in record.instruction.sources)
    for i, src in enumerate(record.instruction.sources):
        if not src.name:
            out.append(f"source {i}: name empty")
        if not src.content:
            out.append(f"source {src.name!r}: content empty")
        if src.name in names:
            out.append(f"duplicate source name {src.name!r}")
        names.add(src.name)
        if src.relevance is Relevance.UNKNOWN and src.origin is Origin.SYNTHESIZED:
            out.append(f"source {src.name!r}: unknown relevance on synthesized source")
        if src.relevance is Relevance.RELEVANT:
            n_rel += 1
        elif src.relevance is Relevance.IRRELEVANT:
            n_irr += 1
    if synthesized:
        if not 0 <= n_rel <= 3:
            out.append(f"relevant count {n_rel} ∉ [0,3]")
        if not 3 <= n_irr <= 6:
            out.append(f"irrelevant count {n_irr} ∉ [3,6]")
    return out


def _validate_sentences(record: ScoredRecord) -> list[str]:
    from .parsing import count_citations

    out: list[str] = []
    assert record.sentences is not None
    for i, sent in enumerate(record.sentences):
        spans = count_citations(sent.text)
        if sent.format_ok:
            if sent.citation is None:
                out.append(f"sentence {i}: format_ok without a citation")
            elif sent.citation.matched_source is None:
                out.append(f"sentence {i}: format_ok without a matched source")
            if spans != 1:
                out.append(f"sentence {i}: format_ok but citation count {spans} ≠ 1")
        elif sent.entailed is not None:
            out.append(f"sentence {i}: entailment verdict on non-format-correct sentence")
    return out


def _validate_scores(record: ScoredRecord) -> list[str]:
    from .parsing import count_citations

    out: list[str] = []
    scores = record.scores
    assert scores is not None
    any_unknown = any(
        s.relevance is Relevance.UNKNOWN for s in record.instruction.sources
    )
    if any_unknown:
        if scores.source_quality is not None:
            out.append(
                "source_quality must be not-applicable when any source relevance is unknown"
            )
    elif scores.source_quality not in (0, 1):
        out.append(f"source_quality {scores.source_quality!r} ∉ {{0, 1}}")

    if record.sentences is None:
        out.append("scores present without sentence verdicts")
        return out

    n = len(record.sentences)
    entailed = sum(1 for s in record.sentences if s.entailed is True)
    formatted = sum(1 for s in record.sentences if s.format_ok)
    has_citation = any(count_citations(s.text) > 0 for s in record.sentences)

    expected_attr = Fraction(entailed, n) if n and has_citation else None
    if scores.attributability != expected_attr:
        out.append("attributability identity violated")
    expected_eo = Fraction(entailed, formatted) if formatted else None
    if scores.attributability_entail_only != expected_eo:
        out.append("attributability_entail_only identity violated")
    if n and scores.format_rate != Fraction(formatted, n):
        out.append("format_rate identity violated")
    return out


def validate_record(record: ScoredRecord) -> list[str]:
    """Check every type invariant; returns violation descriptions, empty if clean.

    Violations are data, not errors: callers decide whether to raise.
    """
    out = _validate_sources(record)
    if not record.instruction.question.text:
        out.append("question text empty")
    if not record.answer_text.strip():
        out.append("answer_text empty")
    expected_prompt = prompts.render_prompt(
        record.instruction.question.text,
        [(s.name, s.content) for s in record.instruction.sources],
    )
    if record.instruction.rendered_prompt != expected_prompt:
        out.append("rendered_prompt does not match the prompt template output")
    if record.sentences is not None:
        out.extend(_validate_sentences(record))
    if record.scores is not None:
        out.extend(_validate_scores(record))
    return out


def validate_corpus(corpus: Corpus) -> list[str]:
    """Record-level violations plus corpus-level tier and id uniqueness checks."""
    out: list[str] = []
    seen_ids: set[str] = set()
    for record in corpus.records:
        for violation in validate_record(record):
            out.append(f"record {record.id}: {violation}")
        if record.id in seen_ids:
            out.append(f"duplicate record id {record.id!r}")
        seen_ids.add(record.id)
        if corpus.tier in (Tier.PLUS, Tier.PLUSPLUS):
            if record.scores is None:
                out.append(f"record {record.id}: unscored record in {corpus.tier.value} tier")
                continue
            if record.scores.source_quality != 1:
                out.append(
                    f"record {record.id}: source_quality "
                    f"{record.scores.source_quality!r} in {corpus.tier.value} tier"
                )
        if corpus.tier is Tier.PLUSPLUS and record.scores is not None:
            attr = record.scores.attributability
            if attr is not None and attr != 1:
                out.append(f"record {record.id}: attributability {attr} in plusplus tier")
    return out

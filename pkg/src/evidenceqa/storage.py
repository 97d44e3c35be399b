"""Corpus and intermediate-file serialization.

Corpora live in JSONL: a manifest line first, then one record per line.
Field order is canonical so write-read-write round-trips are byte-stable.
Unknown record-level fields survive the round trip in each record's extra
mapping. Rational scores are stored as fraction strings ("3/4"), never as
floats, so nothing is lost to rounding.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import DuplicateIdError, MalformedLineError, TierInvariantError, ValidationError
from .model import (
    Citation,
    Corpus,
    Instruction,
    Origin,
    Question,
    RecordScores,
    Relevance,
    ScoredRecord,
    SentenceVerdict,
    Source,
    Tier,
)

_RECORD_FIELDS = (
    "type",
    "id",
    "topic",
    "question",
    "sources",
    "answer",
    "scores",
    "sentence_verdicts",
    "tier",
)


def _dump(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _fraction_out(value: Fraction | None) -> str | None:
    return None if value is None else str(value)


def _fraction_in(value: Any, line_no: int, field: str) -> Fraction | None:
    if value is None:
        return None
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise MalformedLineError(line_no, f"bad fraction in {field}: {value!r}") from exc


def _source_out(source: Source) -> dict[str, str]:
    return {
        "name": source.name,
        "content": source.content,
        "relevance": source.relevance.value,
        "origin": source.origin.value,
    }


def _source_in(obj: Any, line_no: int) -> Source:
    if not isinstance(obj, dict):
        raise MalformedLineError(line_no, f"source entry is not an object: {obj!r}")
    try:
        relevance = Relevance(obj.get("relevance", "unknown"))
        origin = Origin(obj.get("origin", "imported"))
        return Source(
            name=obj["name"], content=obj["content"], relevance=relevance, origin=origin
        )
    except (KeyError, ValueError) as exc:
        raise MalformedLineError(line_no, f"bad source entry: {exc}") from exc


def _verdict_out(verdict: SentenceVerdict) -> dict[str, Any]:
    citation = None
    if verdict.citation is not None:
        citation = {
            "raw": verdict.citation.raw,
            "author": verdict.citation.author,
            "year": verdict.citation.year,
            "page": verdict.citation.page,
            "matched_source": verdict.citation.matched_source,
        }
    return {
        "text": verdict.text,
        "citation": citation,
        "format_ok": verdict.format_ok,
        "entailed": verdict.entailed,
    }


def _verdict_in(obj: Any, line_no: int) -> SentenceVerdict:
    if not isinstance(obj, dict):
        raise MalformedLineError(line_no, f"sentence verdict is not an object: {obj!r}")
    try:
        citation = None
        if obj.get("citation") is not None:
            c = obj["citation"]
            citation = Citation(
                raw=c["raw"],
                author=c["author"],
                year=c["year"],
                page=c["page"],
                matched_source=c.get("matched_source"),
            )
        return SentenceVerdict(
            text=obj["text"],
            citation=citation,
            format_ok=bool(obj["format_ok"]),
            entailed=obj.get("entailed"),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedLineError(line_no, f"bad sentence verdict: {exc}") from exc


def record_to_line(record: ScoredRecord) -> dict[str, Any]:
    scores = None
    if record.scores is not None:
        scores = {
            "source_quality": record.scores.source_quality,
            "attributability": _fraction_out(record.scores.attributability),
            "attributability_entail_only": _fraction_out(
                record.scores.attributability_entail_only
            ),
            "format_rate": _fraction_out(record.scores.format_rate),
        }
    verdicts = None
    if record.sentences is not None:
        verdicts = [_verdict_out(v) for v in record.sentences]
    line: dict[str, Any] = {
        "type": "record",
        "id": record.id,
        "topic": record.instruction.question.topic,
        "question": record.instruction.question.text,
        "sources": [_source_out(s) for s in record.instruction.sources],
        "answer": {"text": record.answer_text, "generator": record.answer_generator},
        "scores": scores,
        "sentence_verdicts": verdicts,
        "tier": record.tier.value,
    }
    for key, value in record.extra.items():
        if key not in _RECORD_FIELDS:
            line[key] = value
    return line


def record_from_line(line: dict[str, Any], line_no: int) -> ScoredRecord:
    for field in ("id", "topic", "question", "sources", "answer"):
        if field not in line:
            raise MalformedLineError(line_no, f"missing field {field!r}")
    answer = line["answer"]
    if not isinstance(answer, dict) or "text" not in answer:
        raise MalformedLineError(line_no, "answer must be an object with a text field")
    sources = tuple(_source_in(s, line_no) for s in line["sources"])
    question = Question(topic=line["topic"], text=line["question"], id=line["id"])
    instruction = Instruction.build(question, sources)
    scores = None
    if line.get("scores") is not None:
        raw = line["scores"]
        if not isinstance(raw, dict):
            raise MalformedLineError(line_no, "scores must be an object")
        sq = raw.get("source_quality")
        if sq not in (0, 1, None):
            raise MalformedLineError(line_no, f"source_quality {sq!r} ∉ {{0, 1, null}}")
        format_rate = _fraction_in(raw.get("format_rate"), line_no, "format_rate")
        if format_rate is None:
            raise MalformedLineError(line_no, "scores present but format_rate missing")
        scores = RecordScores(
            source_quality=sq,
            attributability=_fraction_in(
                raw.get("attributability"), line_no, "attributability"
            ),
            attributability_entail_only=_fraction_in(
                raw.get("attributability_entail_only"),
                line_no,
                "attributability_entail_only",
            ),
            format_rate=format_rate,
        )
    sentences = None
    if line.get("sentence_verdicts") is not None:
        sentences = tuple(_verdict_in(v, line_no) for v in line["sentence_verdicts"])
    try:
        tier = Tier(line.get("tier", "base"))
    except ValueError as exc:
        raise MalformedLineError(line_no, f"unknown tier {line.get('tier')!r}") from exc
    extra = {k: v for k, v in line.items() if k not in _RECORD_FIELDS}
    return ScoredRecord(
        id=line["id"],
        instruction=instruction,
        answer_text=answer["text"],
        answer_generator=answer.get("generator"),
        sentences=sentences,
        scores=scores,
        tier=tier,
        extra=extra,
    )


def _check_tier(record: ScoredRecord, tier: Tier, line_no: int) -> None:
    if record.tier is not tier:
        raise TierInvariantError(
            f"line {line_no}: record tier {record.tier.value!r} differs from "
            f"corpus tier {tier.value!r}"
        )
    if tier in (Tier.PLUS, Tier.PLUSPLUS):
        if record.scores is None:
            raise TierInvariantError(
                f"line {line_no}: unscored record in {tier.value} corpus"
            )
        if record.scores.source_quality != 1:
            raise TierInvariantError(
                f"line {line_no}: source quality "
                f"{record.scores.source_quality!r} in {tier.value} corpus"
            )
    if tier is Tier.PLUSPLUS and record.scores is not None:
        attr = record.scores.attributability
        if attr is not None and attr != 1:
            raise TierInvariantError(
                f"line {line_no}: attributability {attr} in plusplus corpus"
            )


def read_corpus(path: str | Path) -> Corpus:
    """Load a corpus, enforcing manifest shape, unique ids, and tier invariants."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read corpus {path}: {exc}") from exc
    manifest: dict[str, Any] | None = None
    tier = Tier.BASE
    records: list[ScoredRecord] = []
    seen: set[str] = set()
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        if not raw_line.strip():
            continue
        try:
            line = json.loads(raw_line)
        except ValueError as exc:
            raise MalformedLineError(line_no, f"invalid JSON: {exc}") from exc
        if not isinstance(line, dict):
            raise MalformedLineError(line_no, "line is not a JSON object")
        kind = line.get("type")
        if manifest is None:
            if kind != "manifest":
                raise MalformedLineError(line_no, "first line must be a manifest")
            try:
                tier = Tier(line.get("tier", "base"))
            except ValueError as exc:
                raise MalformedLineError(
                    line_no, f"unknown tier {line.get('tier')!r}"
                ) from exc
            manifest = {k: v for k, v in line.items() if k not in ("type", "tier")}
            continue
        if kind != "record":
            raise MalformedLineError(line_no, f"unexpected line type {kind!r}")
        record = record_from_line(line, line_no)
        if record.id in seen:
            raise DuplicateIdError(f"line {line_no}: duplicate record id {record.id!r}")
        seen.add(record.id)
        _check_tier(record, tier, line_no)
        records.append(record)
    if manifest is None:
        raise ValidationError(f"corpus {path} is empty; expected a manifest line")
    return Corpus(records=tuple(records), tier=tier, manifest=manifest)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    lines = [
        _dump({"type": "manifest", "tier": corpus.tier.value, **corpus.manifest})
    ]
    lines += [_dump(record_to_line(r)) for r in corpus.records]
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_topics(topics: Sequence[str], path: str | Path) -> None:
    Path(path).write_text("\n".join(topics) + "\n", encoding="utf-8")


def read_topics(path: str | Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read topics {path}: {exc}") from exc
    return [line.strip() for line in text.splitlines() if line.strip()]


def write_questions(questions: Sequence[Question], path: str | Path) -> None:
    lines = [
        _dump({"id": q.id, "topic": q.topic, "text": q.text}) for q in questions
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_questions(path: str | Path) -> list[Question]:
    out: list[Question] = []
    for line_no, line in enumerate(_read_jsonl(path, "questions"), start=1):
        try:
            out.append(Question(topic=line["topic"], text=line["text"], id=line["id"]))
        except KeyError as exc:
            raise MalformedLineError(line_no, f"missing question field {exc}") from exc
    return out


def _read_jsonl(path: str | Path, what: str) -> Iterable[dict[str, Any]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {what} {path}: {exc}") from exc
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        if not raw_line.strip():
            continue
        try:
            line = json.loads(raw_line)
        except ValueError as exc:
            raise MalformedLineError(line_no, f"invalid JSON: {exc}") from exc
        if not isinstance(line, dict):
            raise MalformedLineError(line_no, "line is not a JSON object")
        yield line


def write_pool(pool: Sequence["PoolSource"], path: str | Path) -> None:
    lines = [
        _dump(
            {
                "topic": p.topic,
                "question_id": p.question_id,
                "name": p.source.name,
                "content": p.source.content,
                "generator": p.generator,
            }
        )
        for p in pool
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_pool(path: str | Path) -> list["PoolSource"]:
    from .datagen import PoolSource

    out: list[PoolSource] = []
    for line_no, line in enumerate(_read_jsonl(path, "sources"), start=1):
        try:
            out.append(
                PoolSource(
                    topic=line["topic"],
                    question_id=line["question_id"],
                    source=Source(
                        name=line["name"],
                        content=line["content"],
                        relevance=Relevance.RELEVANT,
                        origin=Origin.SYNTHESIZED,
                    ),
                    generator=line.get("generator", ""),
                )
            )
        except KeyError as exc:
            raise MalformedLineError(line_no, f"missing source field {exc}") from exc
    return out


def write_instructions(instructions: Sequence[Instruction], path: str | Path) -> None:
    lines = []
    for instruction in instructions:
        lines.append(
            _dump(
                {
                    "id": instruction.question.id,
                    "topic": instruction.question.topic,
                    "question": instruction.question.text,
                    "sources": [_source_out(s) for s in instruction.sources],
                    "generator": instruction.generator,
                }
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_instructions(path: str | Path) -> list[Instruction]:
    out: list[Instruction] = []
    for line_no, line in enumerate(_read_jsonl(path, "instructions"), start=1):
        try:
            question = Question(
                topic=line["topic"], text=line["question"], id=line["id"]
            )
            sources = [_source_in(s, line_no) for s in line["sources"]]
        except KeyError as exc:
            raise MalformedLineError(
                line_no, f"missing instruction field {exc}"
            ) from exc
        out.append(
            Instruction.build(question, sources, generator=line.get("generator"))
        )
    return out

"""Quality filters producing the plus and plusplus corpus tiers.

Filters decide membership only; retained records keep their contents, with
just the tier marker moved along. Both filters are idempotent and their
outputs nest: plusplus records are a subset of plus records, which are a
subset of the base records they came from.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence

from .errors import TierInvariantError, UnknownRelevanceError, UnscoredRecordError
from .model import Corpus, Relevance, ScoredRecord, Tier


def _require_scores(records: Sequence[ScoredRecord]) -> None:
    for record in records:
        if record.scores is None:
            raise UnscoredRecordError(f"record {record.id} has no scores")


def _retier(records: Sequence[ScoredRecord], tier: Tier) -> tuple[ScoredRecord, ...]:
    return tuple(
        r if r.tier is tier else replace(r, tier=tier) for r in records
    )


def filter_source_quality(corpus: Corpus) -> Corpus:
    """Retain exactly the records with a source-quality score of one."""
    _require_scores(corpus.records)
    for record in corpus.records:
        assert record.scores is not None
        if record.scores.source_quality is None:
            raise UnknownRelevanceError(
                f"record {record.id} has unlabeled sources; "
                "the source-quality filter needs relevance labels"
            )
    retained = [
        r for r in corpus.records if r.scores is not None and r.scores.source_quality == 1
    ]
    tier = corpus.tier if corpus.tier in (Tier.PLUS, Tier.PLUSPLUS) else Tier.PLUS
    manifest = dict(corpus.manifest)
    manifest["filter_source_quality"] = {
        "input": len(corpus.records),
        "output": len(retained),
    }
    return Corpus(records=_retier(retained, tier), tier=tier, manifest=manifest)


def _is_refusal(record: ScoredRecord) -> bool:
    """A citation-free answer to an instruction with no relevant source.

    Such records score source quality 1 with not-applicable attributability;
    they carry the only training signal for truthful refusals, so the
    attributability filter keeps them.
    """
    assert record.scores is not None
    return (
        record.scores.attributability is None
        and record.scores.source_quality == 1
        and not any(
            s.relevance is Relevance.RELEVANT for s in record.instruction.sources
        )
    )


def filter_attributability(corpus: Corpus) -> Corpus:
    """Retain records with full attributability, plus legitimate refusals.

    Expects a source-quality-filtered corpus: every input record must already
    have source quality 1, which also keeps the tiers properly nested.
    """
    _require_scores(corpus.records)
    for record in corpus.records:
        assert record.scores is not None
        if record.scores.source_quality != 1:
            raise TierInvariantError(
                f"record {record.id} has source quality "
                f"{record.scores.source_quality!r}; filter the corpus by "
                "source quality first"
            )
    retained = []
    refusals = 0
    for record in corpus.records:
        assert record.scores is not None
        if record.scores.attributability == 1:
            retained.append(record)
        elif _is_refusal(record):
            refusals += 1
            retained.append(record)
    manifest = dict(corpus.manifest)
    manifest["filter_attributability"] = {
        "input": len(corpus.records),
        "output": len(retained),
        "refusals_retained": refusals,
    }
    return Corpus(
        records=_retier(retained, Tier.PLUSPLUS),
        tier=Tier.PLUSPLUS,
        manifest=manifest,
    )

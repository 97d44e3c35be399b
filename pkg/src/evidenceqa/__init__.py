"""Toolkit for evidence-based QA corpora.

Synthesizes instruction/answer corpora through chat-completion endpoints,
scores answers for source quality and per-sentence attributability, filters
corpora into quality tiers, and runs the matching statistical comparisons.
"""

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
    validate_corpus,
    validate_record,
)

__version__ = "0.1.0"

__all__ = [
    "Citation",
    "Corpus",
    "Instruction",
    "Origin",
    "Question",
    "RecordScores",
    "Relevance",
    "ScoredRecord",
    "SentenceVerdict",
    "Source",
    "Tier",
    "validate_corpus",
    "validate_record",
    "__version__",
]

"""Synthetic corpus generation: topics, questions, paragraphs, instructions, answers.

Five stages, each driven through a chat-completion client. Every random
draw flows from a per-stage RNG seeded from the config seed, and draws are
planned sequentially before any concurrent requests run, so the pipeline is
a deterministic function of (seed, endpoint transcripts).
"""

from __future__ import annotations

import hashlib
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence, TypeVar

from . import prompts
from .client import ChatClient
from .errors import EmptyParseError, PoolExhaustedError
from .model import (
    Corpus,
    Instruction,
    Origin,
    Question,
    Relevance,
    ScoredRecord,
    Source,
    Tier,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_STAGE_MODELS = ("standard", "strong")


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs for the five generation stages.

    topic_stage_model and question_stage_model pick the model for those
    single-model stages; paragraph and answer requests are routed per item to
    the strong model with probability strong_model_share.
    """

    n_topics: int = 100
    questions_per_topic: int = 25
    paragraphs_per_question: int = 3
    strong_model_share: float = 0.25
    model_standard: str = "standard"
    model_strong: str = "strong"
    topic_stage_model: str = "strong"
    question_stage_model: str = "strong"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.strong_model_share <= 1:
            raise ValueError("strong_model_share must be within [0, 1]")
        for name in ("n_topics", "questions_per_topic", "paragraphs_per_question"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("topic_stage_model", "question_stage_model"):
            if getattr(self, name) not in _STAGE_MODELS:
                raise ValueError(f"{name} must be one of {_STAGE_MODELS}")

    def resolve(self, alias: str) -> str:
        return self.model_strong if alias == "strong" else self.model_standard


@dataclass(frozen=True)
class PoolSource:
    """A synthesized paragraph plus the provenance needed for source mixing."""

    topic: str
    question_id: str
    source: Source
    generator: str


def stage_rng(seed: int, stage: str) -> random.Random:
    """Independent, reproducible RNG stream per pipeline stage."""
    return random.Random(f"{seed}:{stage}")


def _user(content: str) -> list[dict[str, str]]:
    return [{"role": "user", "content": content}]


def _dedupe(items: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def _map_concurrent(
    fn: Callable[[T], R], items: Sequence[T], concurrency: int
) -> list[R]:
    if concurrency <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(fn, items))


def _topic_slug(topic: str) -> str:
    return hashlib.sha256(topic.encode("utf-8")).hexdigest()[:8]


def generate_topics(config: GenerationConfig, client: ChatClient) -> list[str]:
    """Stage 1: one completion, split on the topic separator."""
    text = client.complete(
        model=config.resolve(config.topic_stage_model),
        messages=_user(prompts.topic_prompt(config.n_topics)),
        temperature=0.0,
    )
    topics = _dedupe(
        t.strip() for t in text.split(prompts.TOPIC_SEPARATOR) if t.strip()
    )
    if not topics:
        raise EmptyParseError("no topics parsed from the completion")
    if len(topics) < config.n_topics:
        logger.info("topic shortfall: asked %d, parsed %d", config.n_topics, len(topics))
    return topics


def generate_questions(
    topic: str,
    config: GenerationConfig,
    client: ChatClient,
    topic_index: int | None = None,
) -> list[Question]:
    """Stage 2: split on the question terminator; the unterminated tail is dropped."""
    text = client.complete(
        model=config.resolve(config.question_stage_model),
        messages=_user(prompts.question_prompt(topic, config.questions_per_topic)),
        temperature=0.0,
    )
    parts = text.split(prompts.QUESTION_TERMINATOR)
    texts = _dedupe(p.strip() for p in parts[:-1] if p.strip())
    if not texts:
        raise EmptyParseError(f"no questions parsed for topic {topic!r}")
    if len(texts) < config.questions_per_topic:
        logger.info(
            "question shortfall for %r: asked %d, parsed %d",
            topic,
            config.questions_per_topic,
            len(texts),
        )
    prefix = f"t{topic_index:03d}" if topic_index is not None else _topic_slug(topic)
    return [
        Question(topic=topic, text=q, id=f"{prefix}-q{i:02d}")
        for i, q in enumerate(texts)
    ]


def _parse_paragraph(chunk: str) -> Source | None:
    """Extract the trailing bracket label as the name, the rest as content."""
    from .parsing import parse_citation, strip_citation

    citation = parse_citation(chunk)
    if citation is None or not citation.raw.startswith("["):
        return None
    content = strip_citation(chunk)
    if not content:
        return None
    return Source(
        name=citation.raw[1:-1],
        content=content,
        relevance=Relevance.RELEVANT,
        origin=Origin.SYNTHESIZED,
    )


def generate_paragraphs(
    question: Question,
    config: GenerationConfig,
    client: ChatClient,
    model: str | None = None,
) -> list[PoolSource]:
    """Stage 3: synthesize labeled paragraphs for one question.

    model is the already-routed model id; passing it explicitly keeps the
    routing draw outside the (possibly concurrent) request execution.
    """
    if model is None:
        model = config.resolve("strong")
    text = client.complete(
        model=model,
        messages=_user(
            prompts.paragraph_prompt(
                question.topic, question.text, config.paragraphs_per_question
            )
        ),
        temperature=0.0,
    )
    out: list[PoolSource] = []
    skipped = 0
    for chunk in text.split(prompts.PARAGRAPH_TERMINATOR):
        chunk = chunk.strip()
        if not chunk:
            continue
        source = _parse_paragraph(chunk)
        if source is None:
            skipped += 1
            continue
        out.append(
            PoolSource(
                topic=question.topic,
                question_id=question.id,
                source=source,
                generator=model,
            )
        )
    if skipped:
        logger.info("%d unlabeled paragraphs skipped for %s", skipped, question.id)
    if not out:
        raise EmptyParseError(f"no labeled paragraphs parsed for {question.id}")
    return out


def assemble_instruction(
    question: Question,
    relevant_pool: Sequence[Source],
    global_pool: Sequence[PoolSource],
    rng: random.Random,
) -> Instruction:
    """Stage 4: mix 0-3 relevant with 3-6 cross-topic irrelevant sources.

    Draw order is pinned: k_rel, relevant sample, k_irr, irrelevant sample,
    then a shuffle of the union. Irrelevant sources never come from the
    question's own topic.
    """
    k_rel = min(rng.randint(0, 3), len(relevant_pool))
    relevant = rng.sample(list(relevant_pool), k_rel)
    k_irr = rng.randint(3, 6)
    eligible = [p for p in global_pool if p.topic != question.topic]
    if len(eligible) < k_irr:
        raise PoolExhaustedError(
            f"need {k_irr} irrelevant sources outside topic {question.topic!r}, "
            f"only {len(eligible)} available"
        )
    drawn = rng.sample(eligible, k_irr)
    irrelevant = [
        replace(p.source, relevance=Relevance.IRRELEVANT) for p in drawn
    ]
    mixed = relevant + irrelevant
    rng.shuffle(mixed)
    return Instruction.build(question, mixed)


def generate_answer(
    instruction: Instruction,
    config: GenerationConfig,
    client: ChatClient,
    rng: random.Random | None = None,
    model: str | None = None,
) -> tuple[str, str]:
    """Stage 5: answer one instruction; returns (answer text, generator id).

    The strong model handles the request with probability strong_model_share.
    Callers may pass a pre-drawn model instead of an RNG.
    """
    if model is None:
        if rng is None:
            raise ValueError("generate_answer needs either rng or model")
        model = route_model(config, rng)
    text = client.complete(
        model=model, messages=_user(instruction.rendered_prompt), temperature=0.0
    )
    if not text.strip():
        raise EmptyParseError("empty answer completion")
    return text, model


def route_model(config: GenerationConfig, rng: random.Random) -> str:
    """One seeded routing draw: strong with probability strong_model_share."""
    strong = rng.random() < config.strong_model_share
    return config.model_strong if strong else config.model_standard


def assemble_all(
    questions: Sequence[Question],
    pool: Sequence[PoolSource],
    seed: int,
) -> list[Instruction]:
    """Assemble instructions for every question with one shared stage RNG."""
    rng = stage_rng(seed, "assemble")
    by_question: dict[str, list[Source]] = {}
    for entry in pool:
        by_question.setdefault(entry.question_id, []).append(entry.source)
    return [
        assemble_instruction(q, by_question.get(q.id, []), pool, rng)
        for q in questions
    ]


def questions_for_topics(
    topics: Sequence[str],
    config: GenerationConfig,
    client: ChatClient,
    concurrency: int = 1,
) -> list[Question]:
    """Stage 2 over all topics; ids are stable in topic order."""
    lists = _map_concurrent(
        lambda pair: generate_questions(pair[1], config, client, topic_index=pair[0]),
        list(enumerate(topics)),
        concurrency,
    )
    return [q for qs in lists for q in qs]


def paragraphs_for_questions(
    questions: Sequence[Question],
    config: GenerationConfig,
    client: ChatClient,
    concurrency: int = 1,
) -> list[PoolSource]:
    """Stage 3 over all questions; model routing is drawn before any request."""
    rng = stage_rng(config.seed, "paragraphs")
    models = [route_model(config, rng) for _ in questions]
    lists = _map_concurrent(
        lambda pair: generate_paragraphs(pair[0], config, client, model=pair[1]),
        list(zip(questions, models)),
        concurrency,
    )
    return [p for ps in lists for p in ps]


def answers_for_instructions(
    instructions: Sequence[Instruction],
    config: GenerationConfig,
    client: ChatClient,
    concurrency: int = 1,
) -> list[tuple[str, str]]:
    """Stage 5 over all instructions; model routing is drawn before any request."""
    rng = stage_rng(config.seed, "answers")
    models = [route_model(config, rng) for _ in instructions]
    return _map_concurrent(
        lambda pair: generate_answer(pair[0], config, client, model=pair[1]),
        list(zip(instructions, models)),
        concurrency,
    )


def build_corpus(
    instructions: Sequence[Instruction],
    answers: Sequence[tuple[str, str]],
    config: GenerationConfig,
    counts: dict[str, int],
) -> Corpus:
    records = tuple(
        ScoredRecord(
            id=instruction.question.id,
            instruction=instruction,
            answer_text=answer_text,
            answer_generator=generator,
            tier=Tier.BASE,
        )
        for instruction, (answer_text, generator) in zip(instructions, answers)
    )
    manifest = {
        "seed": config.seed,
        "models": {"standard": config.model_standard, "strong": config.model_strong},
        "counts": {**counts, "records": len(records)},
    }
    return Corpus(records=records, tier=Tier.BASE, manifest=manifest)


def run_pipeline(
    config: GenerationConfig, client: ChatClient, concurrency: int = 1
) -> Corpus:
    """Drive all five stages end to end, returning an unscored base corpus."""
    topics = generate_topics(config, client)
    questions = questions_for_topics(topics, config, client, concurrency)
    pool = paragraphs_for_questions(questions, config, client, concurrency)
    instructions = assemble_all(questions, pool, config.seed)
    answers = answers_for_instructions(instructions, config, client, concurrency)
    return build_corpus(
        instructions,
        answers,
        config,
        counts={
            "topics": len(topics),
            "questions": len(questions),
            "sources": len(pool),
        },
    )

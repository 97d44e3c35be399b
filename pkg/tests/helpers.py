"""Shared test fixtures: record factories and a scripted chat client."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from evidenceqa.client import ChatClient
from evidenceqa.model import (
    Corpus,
    Instruction,
    Origin,
    Question,
    RecordScores,
    Relevance,
    ScoredRecord,
    Source,
    Tier,
)


class ScriptedChat(ChatClient):
    """Chat client driven by a responder callable; records every request."""

    def __init__(self, responder: Callable[[dict], str]):
        self.responder = responder
        self.requests: list[dict] = []

    def raw_response(self, request: dict) -> dict:
        self.requests.append(request)
        return {"choices": [{"message": {"content": self.responder(request)}}]}


def prompt_of(request: dict) -> str:
    return request["messages"][0]["content"]


def make_question(topic: str = "Dark matter", text: str = "What is dark matter?", id: str = "q0") -> Question:
    return Question(topic=topic, text=text, id=id)


def make_sources(n_rel: int = 2, n_irr: int = 3, topic: str = "Dark matter") -> list[Source]:
    out = []
    for i in range(n_rel):
        out.append(
            Source(
                name=f"Rel{i}, 2020, p.{i + 1}",
                content=f"Relevant insight {i} about {topic.lower()} measured in surveys.",
                relevance=Relevance.RELEVANT,
                origin=Origin.SYNTHESIZED,
            )
        )
    for i in range(n_irr):
        out.append(
            Source(
                name=f"Irr{i}, 2021, p.{i + 1}",
                content=f"Unrelated finding {i} about coral reef bleaching events.",
                relevance=Relevance.IRRELEVANT,
                origin=Origin.SYNTHESIZED,
            )
        )
    return out


def make_instruction(
    n_rel: int = 2,
    n_irr: int = 3,
    topic: str = "Dark matter",
    question_id: str = "q0",
) -> Instruction:
    question = make_question(topic=topic, id=question_id)
    return Instruction.build(question, make_sources(n_rel, n_irr, topic))


def make_record(
    record_id: str = "q0",
    n_rel: int = 2,
    n_irr: int = 3,
    answer_text: str = "Dark matter is unseen mass (Rel0, 2020, p.1).",
    tier: Tier = Tier.BASE,
) -> ScoredRecord:
    return ScoredRecord(
        id=record_id,
        instruction=make_instruction(n_rel, n_irr, question_id=record_id),
        answer_text=answer_text,
        answer_generator="standard",
        tier=tier,
    )


def make_scores(
    sq: int | None = 1,
    attr: Fraction | None = Fraction(1),
    entail_only: Fraction | None = Fraction(1),
    fmt: Fraction = Fraction(1),
) -> RecordScores:
    return RecordScores(
        source_quality=sq,
        attributability=attr,
        attributability_entail_only=entail_only,
        format_rate=fmt,
    )


def make_corpus(records: list[ScoredRecord], tier: Tier = Tier.BASE) -> Corpus:
    return Corpus(records=tuple(records), tier=tier, manifest={"counts": {"records": len(records)}})


# --- scripted pipeline model ---
#
# A deterministic stand-in for the generation endpoint. It recognizes each
# stage by its prompt shape and fabricates parseable output. Answer behavior
# is policy-driven: "perfect" always cites correctly, "mixed" varies per
# question so downstream filters have real work to do.


def _stable_int(text: str) -> int:
    import hashlib

    return int(hashlib.sha256(text.encode("utf-8")).hexdigest(), 16)


def _answer_for(prompt: str, policy: str) -> str:
    head, _, footer = prompt.partition(" [END OF SOURCES]")
    source_lines = head.split("\n")[1:]
    question = footer.split('Can you respond to the question "', 1)[1]
    question = question.split('" by only relying', 1)[0]
    stem = question[:-1]
    pairs = []
    for line in source_lines:
        name, _, content = line.partition(": ")
        pairs.append((name, content))
    relevant = [(n, c) for n, c in pairs if stem in c]
    irrelevant = [(n, c) for n, c in pairs if stem not in c]

    def cite(name: str, claim: str) -> str:
        return f"{claim} ({name})."

    refusal = "No source addresses the question, so no answer can be given."
    if not relevant:
        return refusal
    bucket = _stable_int(question) % 4 if policy == "mixed" else 0
    if bucket == 0:
        return " ".join(cite(n, c[:-1]) for n, c in relevant[:2])
    if bucket == 1 and irrelevant:
        name, content = irrelevant[0]
        return cite(name, content[:-1])
    if bucket == 2:
        name, content = relevant[0]
        return cite(name, content[:-1]) + " " + cite(
            name, "Unsupported gibberish assertion floats here"
        )
    return refusal


def pipeline_responder(
    n_topics: int = 3,
    questions_per_topic: int = 2,
    paragraphs_per_question: int = 2,
    answer_policy: str = "perfect",
) -> Callable[[dict], str]:
    """Responder covering all five generation stages with parseable output."""

    def respond(request: dict) -> str:
        prompt = prompt_of(request)
        if prompt.startswith("Create ") and "random topics" in prompt:
            return "||".join(f"Topic {i:02d}" for i in range(n_topics))
        if "questions that could be posed" in prompt:
            topic = prompt.split("Take the topic ", 1)[1].split(" and create ", 1)[0]
            terminated = "".join(
                f"What is {topic} fact {j:02d}?\\\\"
                for j in range(questions_per_topic)
            )
            return terminated + "dangling unterminated fragment"
        if "paragraphs with the length" in prompt:
            head = prompt.split("\n", 1)[0]
            prefix = "Consider the following question within the topic "
            topic_and_question = head[len(prefix):]
            _, question = topic_and_question.split(": ", 1)
            stem = question[:-1]
            return "".join(
                f"{stem} has insight {j} carrying token{j} payload. "
                f"[{stem} Press {j}, 2020, p.{j + 1}]ENDOFPARAGRAPH"
                for j in range(paragraphs_per_question)
            )
        if prompt.startswith("Given are the following sources:"):
            return _answer_for(prompt, answer_policy)
        raise AssertionError(f"unexpected prompt: {prompt[:80]!r}")

    return respond

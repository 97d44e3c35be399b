"""Per-sentence attribution prediction backends and their AND-aggregation.

Three interchangeable backends: a remote NLI server speaking this toolkit's
/v1/entail wire contract, an LLM judge driven through a chat-completion
endpoint, and a deterministic token-overlap stub so the whole suite can run
offline. Aggregation over several backends is a logical AND, which favors
precision: a sentence counts as attributable only when every backend agrees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .client import ChatClient, HttpChatClient, post_json_with_retry
from .errors import MalformedResponseError


class BackendKind(Enum):
    REMOTE_NLI = "remote-nli"
    LLM_JUDGE = "llm-judge"
    STUB_OVERLAP = "stub-overlap"


@dataclass(frozen=True)
class EntailmentBackend:
    """Configuration handle for one attribution predictor."""

    kind: BackendKind
    endpoint: str | None = None
    model_id: str = ""
    timeout_ms: int = 60000
    retry_budget: int = 3

    def __post_init__(self) -> None:
        if self.kind is BackendKind.STUB_OVERLAP:
            if self.endpoint is not None:
                raise ValueError("stub-overlap backend takes no endpoint")
        elif not self.endpoint:
            raise ValueError(f"{self.kind.value} backend requires an endpoint")


@dataclass(frozen=True)
class EntailmentQuery:
    """One claim/evidence pair: the sentence minus its citation, the cited text."""

    claim: str
    evidence: str
    question: str = ""

    def __post_init__(self) -> None:
        if not self.claim.strip():
            raise ValueError("claim is empty")
        if not self.evidence.strip():
            raise ValueError("evidence is empty")


JUDGE_TEMPLATE = (
    "Your task is to evaluate whether a SENTENCE represents the information in a "
    "SOURCE. This criterion is defined as faithfulness. Faithfulness answers the "
    'main question of "Is the SENTENCE content justified through the SOURCE?". The '
    "SENTENCE should reflect the information given in the SOURCE. If the SOURCE "
    "information does not entail the SENTENCE, then the SENTENCE is not faithful. "
    "The SENTENCE must not contain completely new details that are not mentioned "
    "in the SOURCE. However, if the SENTENCE contains the same meaning as the "
    "SOURCE but only the wording changes, the SENTENCE is still faithful.\n"
    "\n"
    "SOURCE: +++ {0} +++\n"
    "\n"
    "SENTENCE: ||| {1} |||\n"
    "\n"
    "Answer whether the ANSWER is faithful with respect to the SOURCE given the "
    'above definition of faithfulness. Respond by starting with "[[YES]]" or '
    '"[[NO]]" and then justify your decision in at most one sentence.\n'
)


def judge_prompt(query: EntailmentQuery) -> str:
    """Fill the judge template with {0}=evidence and {1}=claim, single pass."""
    mapping = {"{0}": query.evidence, "{1}": query.claim}
    pattern = re.compile("|".join(re.escape(k) for k in mapping))
    return pattern.sub(lambda m: mapping[m.group(0)], JUDGE_TEMPLATE)


STUB_THRESHOLD = 0.6

STUB_STOPWORDS = frozenset(
    """a an the and or but if then else of in on at to from by with as is are was
    were be been being it its this that these those for not no can could will
    would should may might must do does did have has had he she they we you i
    his her their our your also than which who whom what when where how why all
    each both more most other some such only own same so too very about into
    over under again further once s t""".split()
)


def _content_tokens(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9]+", text.lower())) - STUB_STOPWORDS


def stub_overlap(claim: str, evidence: str, threshold: float = STUB_THRESHOLD) -> bool:
    """Deterministic oracle: entailed iff enough claim tokens occur in evidence.

    Unique content tokens of the claim are checked for membership in the
    evidence's tokens; the claim passes at coverage >= threshold. A claim with
    no content tokens is vacuously covered. The threshold is arbitrary; it
    exists so tests and offline runs have a fixed, fast referee.
    """
    claim_tokens = _content_tokens(claim)
    if not claim_tokens:
        return True
    evidence_tokens = _content_tokens(evidence)
    coverage = len(claim_tokens & evidence_tokens) / len(claim_tokens)
    return coverage >= threshold


def _parse_judge_verdict(text: str) -> bool:
    stripped = text.lstrip()
    if stripped.startswith("[[YES]]"):
        return True
    if stripped.startswith("[[NO]]"):
        return False
    raise MalformedResponseError(
        f"judge response lacks a leading [[YES]]/[[NO]] marker: {text[:80]!r}"
    )


def _entail_url(endpoint: str) -> str:
    base = endpoint.rstrip("/")
    if base.endswith("/v1/entail"):
        return base
    return base + "/v1/entail"


def predict(
    backend: EntailmentBackend,
    query: EntailmentQuery,
    *,
    chat_client: ChatClient | None = None,
    api_key: str | None = None,
) -> bool:
    """Ask one backend whether the claim is attributable to the evidence.

    chat_client overrides the HTTP client used for the LLM judge, which lets
    callers route judge calls through transcript recording or replay.
    """
    if backend.kind is BackendKind.STUB_OVERLAP:
        return stub_overlap(query.claim, query.evidence)
    if backend.kind is BackendKind.LLM_JUDGE:
        client = chat_client or HttpChatClient(
            endpoint=backend.endpoint or "",
            api_key=api_key,
            timeout_s=backend.timeout_ms / 1000,
            retry_budget=backend.retry_budget,
        )
        text = client.complete(
            model=backend.model_id,
            messages=[{"role": "user", "content": judge_prompt(query)}],
            temperature=0.0,
        )
        return _parse_judge_verdict(text)
    payload = post_json_with_retry(
        _entail_url(backend.endpoint or ""),
        {
            "claim": query.claim,
            "evidence": query.evidence,
            "question": query.question,
            "model_id": backend.model_id,
        },
        timeout_s=backend.timeout_ms / 1000,
        retry_budget=backend.retry_budget,
    )
    if not isinstance(payload, dict) or not isinstance(
        payload.get("attributable"), bool
    ):
        raise MalformedResponseError(
            f"entail response missing boolean 'attributable': {payload!r:.120}"
        )
    return payload["attributable"]


def predict_aggregated(
    backends: Sequence[EntailmentBackend],
    query: EntailmentQuery,
    *,
    chat_client: ChatClient | None = None,
    api_key: str | None = None,
) -> bool:
    """Logical AND over every backend's prediction.

    All backends are consulted (no short-circuit), so the outcome, including
    raised errors, never depends on backend order.
    """
    if not backends:
        raise ValueError("predict_aggregated requires at least one backend")
    results = [
        predict(b, query, chat_client=chat_client, api_key=api_key) for b in backends
    ]
    return all(results)

"""Chat-completion HTTP client with retry, plus transcript record/replay.

Transcripts make every network-driven stage reproducible: requests are
content-addressed by the SHA-256 of their canonical JSON, stored one
request/response pair per JSONL line, and replayed as cache hits.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import requests

from .errors import (
    BudgetExhaustedError,
    EndpointError,
    EndpointTimeoutError,
    MalformedLineError,
    MalformedResponseError,
    RateLimitedError,
    ServerError,
    TranscriptMissError,
)

logger = logging.getLogger(__name__)

Message = dict[str, str]


def canonical_request(
    model: str, messages: list[Message], temperature: float = 0.0
) -> dict[str, Any]:
    """Normalize a chat request so equal requests always hash equally."""
    return {"model": model, "temperature": float(temperature), "messages": messages}


def request_key(request: dict[str, Any]) -> str:
    blob = json.dumps(request, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def extract_content(payload: dict[str, Any]) -> str:
    """Pull the completion text out of a chat response payload."""
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"chat response missing content: {exc}") from exc
    if not isinstance(content, str):
        raise MalformedResponseError("chat response content is not a string")
    return content


def _post_json(
    url: str, body: dict[str, Any], headers: dict[str, str], timeout_s: float
) -> tuple[int, Any]:
    """Single POST returning (status, decoded JSON). Kept separate for tests."""
    try:
        response = requests.post(url, json=body, headers=headers, timeout=timeout_s)
    except requests.Timeout as exc:
        raise EndpointTimeoutError(f"timeout after {timeout_s}s: {url}") from exc
    except requests.RequestException as exc:
        raise EndpointError(f"request to {url} failed: {exc}") from exc
    status = response.status_code
    if status == 429:
        raise RateLimitedError(f"rate limited by {url}")
    if status >= 500:
        raise ServerError(f"server error {status} from {url}")
    if status != 200:
        raise EndpointError(f"unexpected status {status} from {url}")
    try:
        return status, response.json()
    except ValueError as exc:
        raise MalformedResponseError(f"non-JSON response from {url}") from exc


def post_json_with_retry(
    url: str,
    body: dict[str, Any],
    headers: dict[str, str] | None = None,
    timeout_s: float = 60.0,
    retry_budget: int = 3,
    sleep: Callable[[float], None] = time.sleep,
) -> Any:
    """POST with exponential backoff on retryable failures.

    retry_budget counts retries after the first attempt; when it runs out the
    last retryable failure is wrapped in BudgetExhaustedError.
    """
    headers = headers or {}
    last: EndpointError | None = None
    for attempt in range(retry_budget + 1):
        try:
            _, payload = _post_json(url, body, headers, timeout_s)
            return payload
        except EndpointError as exc:
            if not exc.retryable:
                raise
            last = exc
            if attempt < retry_budget:
                delay = 0.5 * 2**attempt
                logger.warning("retryable failure (%s), retrying in %.1fs", exc, delay)
                sleep(delay)
    raise BudgetExhaustedError(
        f"gave up after {retry_budget + 1} attempts: {last}"
    ) from last


class TranscriptStore:
    """Content-addressed request/response log, one JSON object per line."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.path = self.directory / "transcripts.jsonl"
        self._index: dict[str, Any] | None = None

    def _load(self) -> dict[str, Any]:
        if self._index is None:
            self._index = {}
            if self.path.exists():
                with self.path.open(encoding="utf-8") as handle:
                    for line_no, line in enumerate(handle, start=1):
                        if not line.strip():
                            continue
                        try:
                            entry = json.loads(line)
                            self._index[entry["key"]] = entry["response"]
                        except (ValueError, KeyError, TypeError) as exc:
                            raise MalformedLineError(
                                line_no, f"bad transcript line: {exc}"
                            ) from exc
        return self._index

    def get(self, key: str) -> Any | None:
        return self._load().get(key)

    def put(self, key: str, request: dict[str, Any], response: Any) -> None:
        index = self._load()
        if key in index:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as handle:
            blob = json.dumps(
                {"key": key, "request": request, "response": response},
                ensure_ascii=False,
            )
            handle.write(blob + "\n")
        index[key] = response


class ChatClient:
    """Base chat client: subclasses supply raw_response."""

    def raw_response(self, request: dict[str, Any]) -> dict[str, Any]:
        raise NotImplementedError

    def complete(
        self, model: str, messages: list[Message], temperature: float = 0.0
    ) -> str:
        request = canonical_request(model, messages, temperature)
        return extract_content(self.raw_response(request))


@dataclass
class HttpChatClient(ChatClient):
    endpoint: str
    api_key: str | None = None
    timeout_s: float = 60.0
    retry_budget: int = 3
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)

    def raw_response(self, request: dict[str, Any]) -> dict[str, Any]:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return post_json_with_retry(
            self.endpoint,
            request,
            headers=headers,
            timeout_s=self.timeout_s,
            retry_budget=self.retry_budget,
            sleep=self.sleep,
        )


@dataclass
class ReplayChatClient(ChatClient):
    """Serves responses from a transcript store; never touches the network."""

    store: TranscriptStore

    def raw_response(self, request: dict[str, Any]) -> dict[str, Any]:
        response = self.store.get(request_key(request))
        if response is None:
            raise TranscriptMissError(
                f"no transcript for request key {request_key(request)}"
            )
        return response


@dataclass
class RecordingChatClient(ChatClient):
    """Cache-first client: replays stored responses, records fresh ones."""

    inner: ChatClient
    store: TranscriptStore

    def raw_response(self, request: dict[str, Any]) -> dict[str, Any]:
        key = request_key(request)
        cached = self.store.get(key)
        if cached is not None:
            return cached
        response = self.inner.raw_response(request)
        self.store.put(key, request, response)
        return response

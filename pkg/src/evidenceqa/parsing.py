"""Sentence segmentation, citation extraction, and citation-to-source matching.

The segmenter is deliberately rule-based with a pinned abbreviation list so
that scoring is bit-stable across platforms. Citations are trailing
parenthesized (or square-bracketed) spans whose interior splits into
author, year, and page at top-level commas.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyAnswerError, MalformedLineError
from .model import Citation, Source

_OPEN_TO_CLOSE = {"(": ")", "[": "]"}
_CLOSE_TO_OPEN = {")": "(", "]": "["}


@dataclass(frozen=True)
class SegmentationRules:
    """Pure-data segmentation policy: abbreviation suffixes and terminators.

    Abbreviations are matched case-insensitively at word boundaries. A lone
    letter before a period is always treated as an initial ("J. Smith"), so
    it never terminates a sentence.
    """

    abbreviations: tuple[str, ...]
    terminators: tuple[str, ...] = (".", "!", "?")


DEFAULT_RULES = SegmentationRules(
    abbreviations=(
        "et al.",
        "al.",
        "p.",
        "pp.",
        "e.g.",
        "i.e.",
        "cf.",
        "vs.",
        "etc.",
        "ca.",
        "approx.",
        "no.",
        "vol.",
        "fig.",
        "figs.",
        "dr.",
        "prof.",
        "mr.",
        "mrs.",
        "ms.",
        "st.",
        "jr.",
        "sr.",
        "inc.",
        "ltd.",
        "co.",
    ),
)


def load_rules(path: str | Path) -> SegmentationRules:
    """Load SegmentationRules from a plain-text file.

    Format: section headers "[abbreviations]" and "[terminators]", one entry
    per line, "#" starts a comment. Missing terminators fall back to .!?
    """
    abbreviations: list[str] = []
    terminators: list[str] = []
    section = None
    for line_no, raw_line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("abbreviations", "terminators"):
                raise MalformedLineError(line_no, f"unknown section [{section}]")
            continue
        if section == "abbreviations":
            abbreviations.append(line)
        elif section == "terminators":
            terminators.append(line)
        else:
            raise MalformedLineError(line_no, f"entry outside a section: {line!r}")
    return SegmentationRules(
        abbreviations=tuple(abbreviations),
        terminators=tuple(terminators) if terminators else (".", "!", "?"),
    )


def _is_abbreviation(text: str, dot: int, abbreviations: Sequence[str]) -> bool:
    prefix = text[: dot + 1].casefold()
    for abbr in abbreviations:
        if prefix.endswith(abbr):
            k = len(prefix) - len(abbr)
            if k == 0 or not prefix[k - 1].isalnum():
                return True
    if dot >= 1 and text[dot - 1].isalpha():
        if dot == 1 or not text[dot - 2].isalnum():
            return True
    return False


def segment_sentences(
    text: str, rules: SegmentationRules = DEFAULT_RULES
) -> list[str]:
    """Split answer text into sentences.

    Whitespace is normalized to single spaces first. A terminator splits only
    at bracket depth zero, only when followed by a space or end of text, and
    never immediately after an abbreviation. Joining the output with single
    spaces reproduces the normalized input.
    """
    normalized = " ".join(text.split())
    if not normalized:
        raise EmptyAnswerError("answer text is empty or whitespace-only")
    folded = tuple(a.casefold() for a in rules.abbreviations)
    terminators = set(rules.terminators)
    sentences: list[str] = []
    start = 0
    depth = 0
    i = 0
    n = len(normalized)
    while i < n:
        ch = normalized[i]
        if ch in _OPEN_TO_CLOSE:
            depth += 1
        elif ch in _CLOSE_TO_OPEN:
            depth = max(0, depth - 1)
        elif ch in terminators and depth == 0:
            j = i
            while j + 1 < n and normalized[j + 1] in terminators:
                j += 1
            if ch == "." and j == i and _is_abbreviation(normalized, i, folded):
                i += 1
                continue
            if j + 1 >= n or normalized[j + 1] == " ":
                sentence = normalized[start : j + 1].strip()
                if sentence:
                    sentences.append(sentence)
                start = j + 2
                i = start
                continue
            i = j + 1
            continue
        i += 1
    tail = normalized[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _matching_close(text: str, open_pos: int) -> int | None:
    open_ch = text[open_pos]
    close_ch = _OPEN_TO_CLOSE[open_ch]
    depth = 1
    for j in range(open_pos + 1, len(text)):
        if text[j] == open_ch:
            depth += 1
        elif text[j] == close_ch:
            depth -= 1
            if depth == 0:
                return j
    return None


def _top_level_commas(interior: str) -> list[int]:
    depth = 0
    out: list[int] = []
    for i, ch in enumerate(interior):
        if ch in _OPEN_TO_CLOSE:
            depth += 1
        elif ch in _CLOSE_TO_OPEN:
            depth = max(0, depth - 1)
        elif ch == "," and depth == 0:
            out.append(i)
    return out


def find_citation_spans(sentence: str) -> list[tuple[int, int]]:
    """Non-overlapping (start, end) spans that look like citations.

    A span is citation-shaped when it is a balanced paren or bracket region
    whose interior has at least two top-level commas. Regions that fail the
    test are re-scanned from inside, so nested citations are still found.
    """
    spans: list[tuple[int, int]] = []
    i = 0
    n = len(sentence)
    while i < n:
        if sentence[i] in _OPEN_TO_CLOSE:
            close = _matching_close(sentence, i)
            if close is not None:
                interior = sentence[i + 1 : close]
                if len(_top_level_commas(interior)) >= 2:
                    spans.append((i, close + 1))
                    i = close + 1
                    continue
        i += 1
    return spans


def count_citations(sentence: str) -> int:
    return len(find_citation_spans(sentence))


def parse_all_citations(sentence: str) -> list[Citation]:
    """Decompose every citation-shaped span in the sentence, in order."""
    out: list[Citation] = []
    for start, end in find_citation_spans(sentence):
        raw = sentence[start:end]
        interior = raw[1:-1]
        commas = _top_level_commas(interior)
        out.append(
            Citation(
                raw=raw,
                author=interior[: commas[-2]].strip(),
                year=interior[commas[-2] + 1 : commas[-1]].strip(),
                page=interior[commas[-1] + 1 :].strip(),
            )
        )
    return out


def parse_citation(sentence: str) -> Citation | None:
    """Parse the citation that ends a sentence, or return None.

    The citation is the balanced paren or bracket span sitting at the end of
    the sentence, just before any terminator characters. Its interior is
    decomposed at top-level commas: everything before the second-to-last
    comma is the author, then year, then page.
    """
    text = sentence.rstrip()
    end = len(text)
    while end > 0 and text[end - 1] in ".!? ":
        end -= 1
    if end == 0 or text[end - 1] not in _CLOSE_TO_OPEN:
        return None
    close_ch = text[end - 1]
    open_ch = _CLOSE_TO_OPEN[close_ch]
    depth = 1
    start = None
    for j in range(end - 2, -1, -1):
        if text[j] == close_ch:
            depth += 1
        elif text[j] == open_ch:
            depth -= 1
            if depth == 0:
                start = j
                break
    if start is None:
        return None
    raw = text[start:end]
    interior = raw[1:-1]
    commas = _top_level_commas(interior)
    if len(commas) < 2:
        return None
    author = interior[: commas[-2]].strip()
    year = interior[commas[-2] + 1 : commas[-1]].strip()
    page = interior[commas[-1] + 1 :].strip()
    return Citation(raw=raw, author=author, year=year, page=page)


def strip_citation(sentence: str) -> str:
    """Remove the sentence's trailing citation span, tidying whitespace."""
    citation = parse_citation(sentence)
    if citation is None:
        return sentence.strip()
    idx = sentence.rfind(citation.raw)
    stripped = sentence[:idx] + sentence[idx + len(citation.raw) :]
    stripped = " ".join(stripped.split())
    return re.sub(r"\s+([.!?,;:])", r"\1", stripped)


def _fold_case_space(name: str) -> str:
    return " ".join(name.casefold().split())


_PUNCT_TABLE = str.maketrans("", "", ".,()[]")


def _fold_punct(name: str) -> str:
    return "".join(name.casefold().translate(_PUNCT_TABLE).split())


def match_source(citation: Citation, sources: Sequence[Source]) -> str | None:
    """Match a citation against source names, strictest normalization first.

    Rungs: exact interior match, then case and whitespace folding, then
    dropping ".,()[]" punctuation entirely. A rung with one survivor wins;
    a rung with two or more is ambiguous and yields no match.
    """
    if not sources:
        return None
    interior = citation.raw[1:-1] if len(citation.raw) >= 2 else citation.raw
    rungs = (lambda s: s, _fold_case_space, _fold_punct)
    for rung in rungs:
        wanted = rung(interior)
        hits = [s.name for s in sources if rung(s.name) == wanted]
        if len(hits) == 1:
            return hits[0]
        if len(hits) >= 2:
            return None
    return None

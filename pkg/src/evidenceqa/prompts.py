"""Prompt templates and renderers.

Every template here is pinned byte-for-byte: downstream parsing, golden
files, and transcript replay all depend on stable prompt text. Slots are
filled with str.replace rather than str.format so that user text containing
braces can never corrupt a template.
"""

from __future__ import annotations

from typing import Sequence

# Delimiters the generation prompts instruct the model to emit. The parsers
# in datagen split on exactly these strings.
TOPIC_SEPARATOR = "||"
QUESTION_TERMINATOR = "\\\\"  # two literal backslash characters
PARAGRAPH_TERMINATOR = "ENDOFPARAGRAPH"

_ANSWER_HEADER = "Given are the following sources: [BEGIN OF SOURCES]"
_ANSWER_FOOTER = (
    'Can you respond to the question "{QUESTION}" by only relying on the sources. '
    "Ignore all sources that do not provide an answer to the question.\n"
    "Do not include any knowledge from outside of these sources. Only write a single "
    "paragraph. Each sentence must end with the reference in the form of (author, "
    "year, page number). Strictly follow this format. Citing multiple sources in one "
    "sentence is not allowed.\n"
    "However, if no source addresses the question, admit truthfully that no answer "
    "can be given.\n"
    "Answer the question concisely and avoid being verbose."
)

TOPIC_PROMPT = (
    "Create {n} random topics from the scientific areas of finance, sustainability, "
    "physics, social sciences and natural sciences. Please seperate each topic with "
    "'||'. Use no enumeration or additional signs to seperate the topics."
)

QUESTION_PROMPT = (
    "Take the topic {topic} and create {n} questions that could be posed in the "
    "field. Make the questions diverse and differentiable from each other.\n"
    "\n"
    "End every question with '\\\\'. Use no enumeration or additional signs to "
    "seperate the questions."
)

PARAGRAPH_PROMPT = (
    "Consider the following question within the topic {topic}: {question}\n"
    "\n"
    "Please create {m} paragraphs with the length of 2-4 sentences that partially "
    "address this question. The question should not fully be answered by one "
    "paragraph but rather helpful content in respect to the question should be "
    "displayed. Each paragraph should be in the style of a book or research "
    "article.\n"
    "\n"
    "Furthermore, the paragraphs can display different perspectives and should not "
    "overlap much. The paragaphs should also alternate in level of detail and "
    "addressed readers, i.e., some paragraphs can be very scientifc while others "
    "would rather serve a general public.\n"
    "\n"
    "It is important that the paragraphs stand for themselves. They don't read like "
    "one article but excerpts from multiple articles.\n"
    "\n"
    "Please be creative with the beginning of the paragraphs.\n"
    "\n"
    "In the end of each paragraph give author, year and page in the following "
    "format '[author, year, page]'. Follow this example: '[Mishra et al., 2019, "
    "p.54]'.\n"
    "\n"
    "Make up author, year and page, if you don't have this information. Authors can "
    "also be institutions.\n"
    "\n"
    "End every paragaph with 'ENDOFPARAGRAPH'. Use no enumeration or additional "
    "signs to seperate the paragraphs. Also do not give any further information "
    'like "Paragraph 1: ...".'
)


def render_prompt(question: str, sources: Sequence[tuple[str, str]]) -> str:
    """Render the answer-generation prompt for a question and (name, content) pairs.

    Each source occupies its own line between the BEGIN/END markers; the end
    marker trails the last source on the same line. No normalization is
    applied to names, contents, or the question.
    """
    if sources:
        block = "\n".join(f"{name}: {content}" for name, content in sources)
        head = f"{_ANSWER_HEADER}\n{block} [END OF SOURCES]"
    else:
        head = f"{_ANSWER_HEADER} [END OF SOURCES]"
    return head + "\n\n" + _ANSWER_FOOTER.replace("{QUESTION}", question)


def topic_prompt(n: int) -> str:
    return TOPIC_PROMPT.replace("{n}", str(n))


def question_prompt(topic: str, n: int) -> str:
    return QUESTION_PROMPT.replace("{topic}", topic).replace("{n}", str(n))


def paragraph_prompt(topic: str, question: str, m: int) -> str:
    out = PARAGRAPH_PROMPT.replace("{topic}", topic)
    out = out.replace("{question}", question)
    return out.replace("{m}", str(m))

"""Inference prompt formatting and the label-to-verdict mapping.

The prompt template is configurable because checkpoints are only as good as
the template they were trained with; operators should pass the template
matching their checkpoint via --template-file. The default below is a
generic verification prompt for models that answer with a single label.
"""

import re

DEFAULT_TEMPLATE = (
    "Verify whether the evidence supports the claim. Reply with a single "
    "label: attributable if the evidence fully supports the claim, "
    "otherwise unsupported.\n"
    "Claim: {claim}\n"
    "Evidence: {evidence}"
)

POSITIVE_LABEL = "attributable"

_PLACEHOLDER = re.compile(r"\{(claim|evidence|question)\}")


def format_prompt(
    claim: str, evidence: str, question: str = "", template: str = DEFAULT_TEMPLATE
) -> str:
    """Substitute {claim}/{evidence}/{question} in a single pass.

    One pass means placeholder-like text inside the claim or evidence is
    never re-expanded.
    """
    values = {"claim": claim, "evidence": evidence, "question": question}
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)


def map_label(raw: str) -> bool:
    """True only for the exact positive label, after trimming and casefolding.

    Any other output, including near misses with trailing punctuation, maps
    to False: unverifiable output must never count as a positive verdict.
    """
    return raw.strip().casefold() == POSITIVE_LABEL

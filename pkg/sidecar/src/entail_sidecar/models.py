"""Verifier implementations behind the /v1/entail endpoint.

A verifier turns one (claim, evidence, question) triple into a raw label
string. Two kinds ship here: an offline deterministic token-overlap stub,
and a lazily loaded seq2seq checkpoint decoded greedily so identical
requests always yield identical labels.
"""

import logging
import re
import threading

from .template import DEFAULT_TEMPLATE, POSITIVE_LABEL, format_prompt

logger = logging.getLogger(__name__)

NEGATIVE_LABEL = "unsupported"


class VerifierError(RuntimeError):
    """A verifier failed to produce a label for a well-formed request."""


class StubVerifier:
    """Offline heuristic: positive label iff enough claim tokens occur in evidence."""

    def __init__(self, name: str = "stub", threshold: float = 0.6):
        if not 0.0 <= threshold <= 1.0:
            raise ValueError(f"threshold {threshold} outside [0, 1]")
        self.name = name
        self.threshold = threshold

    def ready(self) -> bool:
        return True

    def load(self) -> None:
        pass

    def label(self, claim: str, evidence: str, question: str = "") -> str:
        claim_tokens = set(re.findall(r"[a-z0-9]+", claim.lower()))
        if not claim_tokens:
            return POSITIVE_LABEL
        evidence_tokens = set(re.findall(r"[a-z0-9]+", evidence.lower()))
        coverage = len(claim_tokens & evidence_tokens) / len(claim_tokens)
        return POSITIVE_LABEL if coverage >= self.threshold else NEGATIVE_LABEL


class Seq2SeqVerifier:
    """A local sequence-to-sequence checkpoint decoded greedily.

    The checkpoint loads lazily on first load() call; until then ready() is
    False and the server reports itself as warming. Generation is serialized
    per checkpoint to bound memory.
    """

    def __init__(
        self,
        name: str,
        device: str = "cpu",
        template: str = DEFAULT_TEMPLATE,
        max_new_tokens: int = 16,
    ):
        self.name = name
        self.device = device
        self.template = template
        self.max_new_tokens = max_new_tokens
        self._lock = threading.Lock()
        self._model = None
        self._tokenizer = None

    def ready(self) -> bool:
        return self._model is not None

    def load(self) -> None:
        if self._model is not None:
            return
        try:
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:
            raise VerifierError(
                "transformers is not installed; install the 'hf' extra to "
                "serve seq2seq checkpoints"
            ) from exc
        logger.info("loading checkpoint %s on %s", self.name, self.device)
        self._tokenizer = AutoTokenizer.from_pretrained(self.name)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(self.name).to(self.device)
        self._model.eval()

    def label(self, claim: str, evidence: str, question: str = "") -> str:
        if self._model is None:
            raise VerifierError(f"checkpoint {self.name} is not loaded")
        prompt = format_prompt(claim, evidence, question, self.template)
        with self._lock:
            try:
                inputs = self._tokenizer(prompt, return_tensors="pt").to(self.device)
                output = self._model.generate(
                    **inputs,
                    do_sample=False,
                    num_beams=1,
                    max_new_tokens=self.max_new_tokens,
                )
                return self._tokenizer.decode(output[0], skip_special_tokens=True)
            except VerifierError:
                raise
            except Exception as exc:
                raise VerifierError(f"inference failed on {self.name}: {exc}") from exc


def build_verifiers(specs, device: str = "cpu", template: str = DEFAULT_TEMPLATE):
    """Turn CLI model specs into verifiers.

    "stub" (optionally "stub:<threshold>") selects the offline heuristic;
    anything else is treated as a seq2seq checkpoint path or hub id.
    """
    verifiers = []
    for spec in specs:
        if spec == "stub" or spec.startswith("stub:"):
            threshold = 0.6
            if ":" in spec:
                try:
                    threshold = float(spec.split(":", 1)[1])
                except ValueError:
                    raise ValueError(f"bad stub threshold in {spec!r}")
            verifiers.append(StubVerifier(name=spec, threshold=threshold))
        else:
            verifiers.append(Seq2SeqVerifier(name=spec, device=device, template=template))
    names = [v.name for v in verifiers]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate model ids: {names}")
    return verifiers

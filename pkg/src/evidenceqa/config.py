"""Run configuration: a flat key=value file plus typed accessors.

Settings cover endpoints, model ids, generation knobs, and the segmentation
rules path. API credentials never live here; the file only names the
environment variable to read them from.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Mapping

from .datagen import GenerationConfig
from .errors import MalformedLineError, ValidationError

DEFAULT_API_KEY_ENV = "EVIDENCEQA_API_KEY"

_GENERATION_INT_KEYS = ("n_topics", "questions_per_topic", "paragraphs_per_question")
_GENERATION_STR_KEYS = (
    "model_standard",
    "model_strong",
    "topic_stage_model",
    "question_stage_model",
)


def load_settings(path: str | Path) -> dict[str, str]:
    """Parse a key=value settings file; '#' starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    settings: dict[str, str] = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MalformedLineError(line_no, f"expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        settings[key.strip()] = value.strip()
    return settings


def generation_config(settings: Mapping[str, str], seed: int) -> GenerationConfig:
    """Build a GenerationConfig from settings, with the seed supplied by the caller."""
    kwargs: dict[str, object] = {"seed": seed}
    try:
        for key in _GENERATION_INT_KEYS:
            if key in settings:
                kwargs[key] = int(settings[key])
        if "strong_model_share" in settings:
            kwargs["strong_model_share"] = float(settings["strong_model_share"])
    except ValueError as exc:
        raise ValidationError(f"bad numeric setting: {exc}") from exc
    for key in _GENERATION_STR_KEYS:
        if key in settings:
            kwargs[key] = settings[key]
    try:
        return GenerationConfig(**kwargs)  # type: ignore[arg-type]
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def api_key(settings: Mapping[str, str]) -> str | None:
    env_var = settings.get("api_key_env", DEFAULT_API_KEY_ENV)
    return os.environ.get(env_var)

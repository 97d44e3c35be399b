"""Command line entry point for serving verifiers."""

import logging
import sys
from pathlib import Path

import click
import uvicorn

from .app import create_app
from .models import build_verifiers
from .template import DEFAULT_TEMPLATE


@click.command()
@click.option(
    "--model",
    "models",
    multiple=True,
    default=("stub",),
    show_default=True,
    help="Checkpoint path or hub id; 'stub' or 'stub:<threshold>' serves the "
    "offline heuristic. Repeat to serve several models.",
)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8400, show_default=True)
@click.option("--device", default="cpu", show_default=True)
@click.option(
    "--template-file",
    default=None,
    help="Prompt template with {claim}/{evidence}/{question} placeholders; "
    "pass the template your checkpoint was trained with.",
)
def serve(models, host, port, device, template_file) -> None:
    """Serve attribution verdicts over POST /v1/entail."""
    template = DEFAULT_TEMPLATE
    if template_file:
        template = Path(template_file).read_text(encoding="utf-8")
    try:
        verifiers = build_verifiers(models, device=device, template=template)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    app = create_app(verifiers)
    uvicorn.run(app, host=host, port=port)


def run() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(serve.main(standalone_mode=True))

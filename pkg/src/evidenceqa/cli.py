"""Command-line surface tying the pipeline stages together.

Exit codes: 0 success, 1 validation failure, 2 endpoint failure, 64 usage
error. All randomness flows from --seed; with a transcripts directory every
endpoint interaction is recorded on first contact and replayed afterwards.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Sequence

import click

from . import config as config_mod
from . import datagen, prompts, storage
from .client import (
    ChatClient,
    HttpChatClient,
    RecordingChatClient,
    ReplayChatClient,
    TranscriptStore,
)
from .entailment import BackendKind, EntailmentBackend, predict_aggregated
from .errors import EndpointError, ValidationError
from .filters import filter_attributability, filter_source_quality
from .parsing import DEFAULT_RULES, SegmentationRules, load_rules
from .scoring import corpus_scores, score_corpus
from .stats import (
    Alternative,
    answer_statistics,
    compare_settings,
    pearson,
    render_comparison_text,
    render_comparison_tsv,
)

logger = logging.getLogger(__name__)


@dataclass
class AppContext:
    settings: dict[str, str]
    seed: int
    transcripts_dir: Path | None
    concurrency: int

    def store(self) -> TranscriptStore | None:
        if self.transcripts_dir is None:
            return None
        return TranscriptStore(self.transcripts_dir)

    def chat_client(self) -> ChatClient:
        endpoint = self.settings.get("chat_endpoint")
        store = self.store()
        if endpoint:
            client: ChatClient = HttpChatClient(
                endpoint=endpoint,
                api_key=config_mod.api_key(self.settings),
                timeout_s=int(self.settings.get("timeout_ms", "60000")) / 1000,
                retry_budget=int(self.settings.get("retry_budget", "3")),
            )
            if store is not None:
                client = RecordingChatClient(inner=client, store=store)
            return client
        if store is not None:
            return ReplayChatClient(store=store)
        raise EndpointError(
            "no chat endpoint configured and no transcripts directory to replay from"
        )

    def rules(self) -> SegmentationRules:
        path = self.settings.get("rules_path")
        return load_rules(path) if path else DEFAULT_RULES

    def generation_config(self) -> datagen.GenerationConfig:
        return config_mod.generation_config(self.settings, self.seed)


@click.group()
@click.option("--config", "config_path", default=None, help="key=value settings file.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for all sampling.")
@click.option(
    "--transcripts-dir",
    default=None,
    help="Directory for endpoint transcripts (record on miss, replay on hit).",
)
@click.option("--concurrency", type=int, default=1, show_default=True, help="Concurrent requests per stage.")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: str | None,
    seed: int,
    transcripts_dir: str | None,
    concurrency: int,
) -> None:
    """Synthesize, score, filter, and analyze evidence-based QA corpora."""
    settings = config_mod.load_settings(config_path) if config_path else {}
    ctx.obj = AppContext(
        settings=settings,
        seed=seed,
        transcripts_dir=Path(transcripts_dir) if transcripts_dir else None,
        concurrency=max(1, concurrency),
    )


@cli.group()
def gen() -> None:
    """Corpus generation stages, in pipeline order."""


@gen.command("topics")
@click.option("-o", "--output", required=True, help="Output topics file, one per line.")
@click.pass_obj
def gen_topics(app: AppContext, output: str) -> None:
    """Generate the topic list."""
    topics = datagen.generate_topics(app.generation_config(), app.chat_client())
    storage.write_topics(topics, output)
    click.echo(f"{len(topics)} topics -> {output}")


@gen.command("questions")
@click.option("--topics", "topics_path", required=True, help="Topics file from `gen topics`.")
@click.option("-o", "--output", required=True, help="Output questions JSONL.")
@click.pass_obj
def gen_questions(app: AppContext, topics_path: str, output: str) -> None:
    """Generate questions for every topic."""
    topics = storage.read_topics(topics_path)
    questions = datagen.questions_for_topics(
        topics, app.generation_config(), app.chat_client(), app.concurrency
    )
    storage.write_questions(questions, output)
    click.echo(f"{len(questions)} questions -> {output}")


@gen.command("sources")
@click.option("--questions", "questions_path", required=True, help="Questions JSONL.")
@click.option("-o", "--output", required=True, help="Output sources JSONL.")
@click.pass_obj
def gen_sources(app: AppContext, questions_path: str, output: str) -> None:
    """Synthesize labeled source paragraphs for every question."""
    questions = storage.read_questions(questions_path)
    pool = datagen.paragraphs_for_questions(
        questions, app.generation_config(), app.chat_client(), app.concurrency
    )
    storage.write_pool(pool, output)
    click.echo(f"{len(pool)} sources -> {output}")


@gen.command("instructions")
@click.option("--questions", "questions_path", required=True, help="Questions JSONL.")
@click.option("--sources", "sources_path", required=True, help="Sources JSONL.")
@click.option("-o", "--output", required=True, help="Output instructions JSONL.")
@click.pass_obj
def gen_instructions(
    app: AppContext, questions_path: str, sources_path: str, output: str
) -> None:
    """Mix relevant and cross-topic irrelevant sources into instructions."""
    questions = storage.read_questions(questions_path)
    pool = storage.read_pool(sources_path)
    instructions = datagen.assemble_all(questions, pool, app.seed)
    storage.write_instructions(instructions, output)
    click.echo(f"{len(instructions)} instructions -> {output}")


@gen.command("answers")
@click.option(
    "--instructions", "instructions_path", required=True, help="Instructions JSONL."
)
@click.option("-o", "--output", required=True, help="Output corpus JSONL.")
@click.pass_obj
def gen_answers(app: AppContext, instructions_path: str, output: str) -> None:
    """Answer every instruction, producing the unscored base corpus."""
    instructions = storage.read_instructions(instructions_path)
    cfg = app.generation_config()
    answers = datagen.answers_for_instructions(
        instructions, cfg, app.chat_client(), app.concurrency
    )
    corpus = datagen.build_corpus(instructions, answers, cfg, counts={})
    storage.write_corpus(corpus, output)
    click.echo(f"{len(corpus.records)} records -> {output}")


def _build_backends(
    app: AppContext,
    kinds: Sequence[str],
    nli_endpoints: Sequence[str],
    judge_endpoint: str | None,
    stub_flag: bool,
) -> tuple[list[EntailmentBackend], str | None]:
    wanted = set(kinds)
    if stub_flag:
        wanted.add("stub")
    timeout_ms = int(app.settings.get("timeout_ms", "60000"))
    retry_budget = int(app.settings.get("retry_budget", "3"))
    nli = list(nli_endpoints)
    if "remote-nli" in wanted and not nli:
        configured = app.settings.get("nli_endpoint")
        if not configured:
            raise click.UsageError(
                "--backend remote-nli needs --nli-endpoint or nli_endpoint in the config"
            )
        nli = [configured]
    judge = judge_endpoint
    if "llm-judge" in wanted and not judge:
        judge = app.settings.get("judge_endpoint")
        if not judge:
            raise click.UsageError(
                "--backend llm-judge needs --judge-endpoint or judge_endpoint in the config"
            )
    backends: list[EntailmentBackend] = []
    if "stub" in wanted:
        backends.append(EntailmentBackend(kind=BackendKind.STUB_OVERLAP))
    for endpoint in nli:
        backends.append(
            EntailmentBackend(
                kind=BackendKind.REMOTE_NLI,
                endpoint=endpoint,
                model_id=app.settings.get("nli_model", ""),
                timeout_ms=timeout_ms,
                retry_budget=retry_budget,
            )
        )
    if judge:
        backends.append(
            EntailmentBackend(
                kind=BackendKind.LLM_JUDGE,
                endpoint=judge,
                model_id=app.settings.get("judge_model", "judge"),
                timeout_ms=timeout_ms,
                retry_budget=retry_budget,
            )
        )
    if not backends:
        raise click.UsageError(
            "no entailment backend selected; pass --stub, --nli-endpoint, or --judge-endpoint"
        )
    return backends, judge


@cli.command("score")
@click.argument("input_path")
@click.option("-o", "--output", required=True, help="Output scored corpus JSONL.")
@click.option(
    "--backend",
    "backend_kinds",
    multiple=True,
    type=click.Choice(["stub", "remote-nli", "llm-judge"]),
    help="Backend kind; repeat to aggregate several with logical AND.",
)
@click.option(
    "--nli-endpoint",
    "nli_endpoints",
    multiple=True,
    help="Entailment server URL; repeat for multi-model AND aggregation.",
)
@click.option("--judge-endpoint", default=None, help="Chat endpoint for the LLM judge.")
@click.option("--stub", is_flag=True, help="Use the offline token-overlap stub.")
@click.pass_obj
def score_cmd(
    app: AppContext,
    input_path: str,
    output: str,
    backend_kinds: Sequence[str],
    nli_endpoints: Sequence[str],
    judge_endpoint: str | None,
    stub: bool,
) -> None:
    """Segment, parse, and score every record of a corpus."""
    corpus = storage.read_corpus(input_path)
    backends, judge = _build_backends(
        app, backend_kinds, nli_endpoints, judge_endpoint, stub
    )
    judge_client: ChatClient | None = None
    store = app.store()
    if judge and store is not None:
        judge_client = RecordingChatClient(
            inner=HttpChatClient(
                endpoint=judge,
                api_key=config_mod.api_key(app.settings),
                timeout_s=int(app.settings.get("timeout_ms", "60000")) / 1000,
                retry_budget=int(app.settings.get("retry_budget", "3")),
            ),
            store=store,
        )
    entail = partial(
        predict_aggregated,
        backends,
        chat_client=judge_client,
        api_key=config_mod.api_key(app.settings),
    )
    scored = score_corpus(
        corpus, lambda q: entail(query=q), app.rules(), app.concurrency
    )
    storage.write_corpus(scored, output)
    click.echo(f"{len(scored.records)} records scored -> {output}")
    for metric, value in corpus_scores(scored).rows():
        click.echo(f"  mean {metric} (%): {value}")


@cli.group("filter")
def filter_group() -> None:
    """Quality filters producing the plus and plusplus tiers."""


@filter_group.command("source-quality")
@click.argument("input_path")
@click.option("-o", "--output", required=True, help="Output plus-tier corpus JSONL.")
def filter_sq(input_path: str, output: str) -> None:
    """Keep records whose source-quality score is 1."""
    corpus = storage.read_corpus(input_path)
    filtered = filter_source_quality(corpus)
    storage.write_corpus(filtered, output)
    click.echo(
        f"{len(corpus.records)} -> {len(filtered.records)} records "
        f"[{filtered.tier.value}] -> {output}"
    )


@filter_group.command("attributability")
@click.argument("input_path")
@click.option("-o", "--output", required=True, help="Output plusplus-tier corpus JSONL.")
def filter_attr(input_path: str, output: str) -> None:
    """Keep fully attributable records and legitimate refusals."""
    corpus = storage.read_corpus(input_path)
    filtered = filter_attributability(corpus)
    storage.write_corpus(filtered, output)
    refusals = filtered.manifest.get("filter_attributability", {}).get(
        "refusals_retained", 0
    )
    click.echo(
        f"{len(corpus.records)} -> {len(filtered.records)} records "
        f"[{filtered.tier.value}], {refusals} refusals retained -> {output}"
    )


@cli.group("stats")
def stats_group() -> None:
    """Statistical reports over runs and corpora."""


def _load_json(path: str, what: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read {what} {path}: {exc}") from exc
    except ValueError as exc:
        raise ValidationError(f"{what} {path} is not valid JSON: {exc}") from exc


def _validate_runs(data: Any) -> dict[str, dict[str, dict[str, list[float]]]]:
    if not isinstance(data, dict):
        raise ValidationError("runs file must map setting -> test set -> metric -> scores")
    for setting, test_sets in data.items():
        if not isinstance(test_sets, dict):
            raise ValidationError(f"setting {setting!r} must map test sets to metrics")
        for test_set, metrics in test_sets.items():
            if not isinstance(metrics, dict):
                raise ValidationError(
                    f"test set {test_set!r} of {setting!r} must map metrics to scores"
                )
            for metric, scores in metrics.items():
                if not isinstance(scores, list) or not all(
                    isinstance(s, (int, float)) for s in scores
                ):
                    raise ValidationError(
                        f"scores for {setting!r}/{test_set!r}/{metric!r} must be a list of numbers"
                    )
    return data


@stats_group.command("compare")
@click.argument("runs_path")
@click.option(
    "--comparison",
    "comparison_specs",
    multiple=True,
    required=True,
    help="SETTING_A:SETTING_B:ALTERNATIVE with alternative less|greater|two-sided.",
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["text", "tsv"]),
    default="text",
    show_default=True,
)
@click.option("-o", "--output", default=None, help="Write the report here instead of stdout.")
def stats_compare(
    runs_path: str, comparison_specs: Sequence[str], fmt: str, output: str | None
) -> None:
    """Mann-Whitney tests per test set, merged per metric with Fisher's method."""
    runs = _validate_runs(_load_json(runs_path, "runs"))
    comparisons: list[tuple[str, str, Alternative]] = []
    for spec in comparison_specs:
        parts = spec.split(":")
        if len(parts) != 3:
            raise click.UsageError(
                f"comparison {spec!r} must look like A:B:less|greater|two-sided"
            )
        try:
            alternative = Alternative(parts[2])
        except ValueError:
            raise click.UsageError(f"unknown alternative {parts[2]!r} in {spec!r}")
        comparisons.append((parts[0], parts[1], alternative))
    rows = compare_settings(runs, comparisons)
    report = (
        render_comparison_tsv(rows) if fmt == "tsv" else render_comparison_text(rows)
    )
    if output:
        Path(output).write_text(report, encoding="utf-8")
        click.echo(f"report -> {output}")
    else:
        click.echo(report, nl=False)


@stats_group.command("correlate")
@click.argument("data_path")
@click.option("--x", "x_name", required=True, help="Name of the first series.")
@click.option("--y", "y_name", required=True, help="Name of the second series.")
def stats_correlate(data_path: str, x_name: str, y_name: str) -> None:
    """Pearson correlation between two named score series in a JSON file."""
    data = _load_json(data_path, "series")
    if not isinstance(data, dict):
        raise ValidationError("series file must map names to lists of numbers")
    for name in (x_name, y_name):
        if name not in data:
            raise ValidationError(f"series {name!r} not found in {data_path}")
    result = pearson(data[x_name], data[y_name])
    click.echo(f"r={result.r:.4f} p={result.p:.4g} n={len(data[x_name])}")


@stats_group.command("describe")
@click.argument("corpus_paths", nargs=-1, required=True)
@click.pass_obj
def stats_describe(app: AppContext, corpus_paths: Sequence[str]) -> None:
    """Answer-shape statistics (and score means, when scored) per corpus."""
    rules = app.rules()
    for path in corpus_paths:
        corpus = storage.read_corpus(path)
        shape = answer_statistics(corpus, rules)
        click.echo(f"{path} [{corpus.tier.value}]")
        for label, value in shape.rows():
            click.echo(f"  {label}: {value}")
        if corpus.records and all(r.scores is not None for r in corpus.records):
            for metric, value in corpus_scores(corpus).rows():
                click.echo(f"  mean {metric} (%): {value}")


@cli.command("render-prompt")
@click.option("--question", required=True, help="Question text to splice in.")
@click.option(
    "--source",
    "source_specs",
    multiple=True,
    help="Source as NAME=CONTENT; repeat to add more.",
)
def render_prompt_cmd(question: str, source_specs: Sequence[str]) -> None:
    """Print the exact answering prompt for a question and sources."""
    pairs: list[tuple[str, str]] = []
    for spec in source_specs:
        if "=" not in spec:
            raise click.UsageError(f"source {spec!r} must look like NAME=CONTENT")
        name, _, content = spec.partition("=")
        pairs.append((name, content))
    click.echo(prompts.render_prompt(question, pairs), nl=False)


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point returning an exit code instead of raising SystemExit."""
    try:
        cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="evidenceqa",
            standalone_mode=False,
        )
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 64
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        return 130
    except ValidationError as exc:
        click.echo(f"validation error: {exc}", err=True)
        return 1
    except EndpointError as exc:
        click.echo(f"endpoint error: {exc}", err=True)
        return 2
    return 0


def run() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(main())

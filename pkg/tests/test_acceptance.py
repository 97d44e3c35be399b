"""Acceptance checks for the whole toolkit, one test per guarantee.

Each test verifies a core behavior against an independent oracle: literal
set-algebra re-derivations, brute-force permutation enumeration, closed-form
identities, golden bytes, or full replay of the offline pipeline.
"""

import json
import math
import random
import time
from collections import Counter
from dataclasses import replace
from fractions import Fraction
from itertools import chain, combinations
from pathlib import Path

import pytest
from helpers import (
    ScriptedChat,
    make_corpus,
    make_record,
    make_scores,
    make_sources,
    pipeline_responder,
)

from evidenceqa import cli, config as config_mod, datagen, storage
from evidenceqa.client import RecordingChatClient, ReplayChatClient, TranscriptStore
from evidenceqa.datagen import PoolSource, assemble_instruction
from evidenceqa.filters import filter_attributability, filter_source_quality
from evidenceqa.model import (
    Origin,
    Question,
    Relevance,
    SentenceVerdict,
    Source,
    Tier,
)
from evidenceqa.parsing import match_source, parse_citation
from evidenceqa.prompts import render_prompt
from evidenceqa.scoring import (
    attributability,
    attributability_entail_only,
    format_rate,
    source_quality,
)
from evidenceqa.stats import Alternative, fisher_combine, mann_whitney_u, pearson

GOLDEN = Path(__file__).parent / "data" / "answer_prompt_golden.txt"


def test_source_quality_matches_setwise_enumeration():
    """Exhaustive truth table against a literal set-algebra re-derivation."""
    start = time.monotonic()
    cases = 0
    for n_rel in range(0, 4):
        for n_irr in range(3, 7):
            sources = make_sources(n_rel, n_irr)
            names = [s.name for s in sources]
            rel = {s.name for s in sources if s.relevance is Relevance.RELEVANT}
            irr = {s.name for s in sources if s.relevance is Relevance.IRRELEVANT}
            subsets = chain.from_iterable(
                combinations(names, k) for k in range(len(names) + 1)
            )
            for subset in subsets:
                cited = set(subset)
                expected = (
                    1
                    if (cited and not (cited & irr)) or (not cited and not rel)
                    else 0
                )
                assert source_quality(cited, sources) == expected
                cases += 1
            unknown = [replace(sources[0], relevance=Relevance.UNKNOWN)] + sources[1:]
            for subset in ([], [names[0]], names):
                assert source_quality(subset, unknown) is None
    assert cases == 1800
    assert time.monotonic() - start < 1.0


def _verdict(kind: int) -> SentenceVerdict:
    if kind == 0:
        return SentenceVerdict(
            text="A supported claim (A, 2020, p.1).",
            citation=None,
            format_ok=True,
            entailed=True,
        )
    if kind == 1:
        return SentenceVerdict(
            text="An unsupported claim (B, 2021, p.2).",
            citation=None,
            format_ok=True,
            entailed=False,
        )
    if kind == 2:
        return SentenceVerdict(
            text="Odd (A, 2020, p.1) middle (B, 2021, p.2).",
            citation=None,
            format_ok=False,
            entailed=None,
        )
    return SentenceVerdict(
        text="Just plain words here.", citation=None, format_ok=False, entailed=None
    )


def test_attributability_identity_on_randomized_verdicts():
    """attr = entailed/n = 1 - (format-bad + unformatted)/n, and entail_only >= attr."""
    start = time.monotonic()
    rng = random.Random(2024)
    for _ in range(10_000):
        n = rng.randint(1, 8)
        kinds = [rng.randrange(4) for _ in range(n)]
        verdicts = [_verdict(k) for k in kinds]
        n_ent = sum(1 for k in kinds if k == 0)
        n_fmt_bad = sum(1 for k in kinds if k == 1)
        n_unformatted = sum(1 for k in kinds if k in (2, 3))
        attr = attributability(verdicts)
        if all(k == 3 for k in kinds):
            assert attr is None
            continue
        assert attr == Fraction(n_ent, n)
        assert attr == 1 - Fraction(n_fmt_bad + n_unformatted, n)
        assert abs(float(attr) - n_ent / n) <= 1e-12
        eo = attributability_entail_only(verdicts)
        if n_ent + n_fmt_bad == 0:
            assert eo is None
        else:
            assert eo == Fraction(n_ent, n_ent + n_fmt_bad)
            assert eo >= attr
        assert format_rate(verdicts) == Fraction(n_ent + n_fmt_bad, n)
    assert time.monotonic() - start < 1.0


def test_filter_nesting_and_idempotence_at_scale():
    """Tier membership is nested, monotone, and stable on a 2,000-record corpus."""
    start = time.monotonic()
    rng = random.Random(99)
    records = []
    for i in range(2000):
        kind = rng.randrange(4)
        sq = rng.randrange(2)
        if kind == 0:
            attr, eo, fmt, n_rel = Fraction(1), Fraction(1), Fraction(1), 2
        elif kind == 1:
            attr, eo, fmt, n_rel = Fraction(1, 2), Fraction(1, 2), Fraction(1), 2
        elif kind == 2:
            attr, eo, fmt, n_rel = None, None, Fraction(0), rng.choice([0, 2])
        else:
            attr, eo, fmt, n_rel = Fraction(0), Fraction(0), Fraction(1), 2
        records.append(
            replace(
                make_record(record_id=f"r{i:04d}", n_rel=n_rel),
                scores=make_scores(sq=sq, attr=attr, entail_only=eo, fmt=fmt),
            )
        )
    base = make_corpus(records)

    plus = filter_source_quality(base)
    plusplus = filter_attributability(plus)

    base_ids = [r.id for r in base.records]
    plus_ids = [r.id for r in plus.records]
    plusplus_ids = [r.id for r in plusplus.records]
    assert set(plusplus_ids) <= set(plus_ids) <= set(base_ids)
    assert plus_ids == [i for i in base_ids if i in set(plus_ids)]
    assert plusplus_ids == [i for i in plus_ids if i in set(plusplus_ids)]

    assert all(r.scores.source_quality == 1 for r in plus.records)
    for record in plusplus.records:
        if record.scores.attributability is None:
            assert not any(
                s.relevance is Relevance.RELEVANT for s in record.instruction.sources
            )
            assert record.scores.source_quality == 1
        else:
            assert record.scores.attributability == 1

    again_plus = filter_source_quality(plus)
    assert again_plus.records == plus.records
    assert again_plus.tier is Tier.PLUS
    again_plusplus = filter_attributability(plusplus)
    assert again_plusplus.records == plusplus.records
    assert again_plusplus.tier is Tier.PLUSPLUS
    assert time.monotonic() - start < 5.0


def test_citation_parser_field_level_examples():
    cit = parse_citation("The capital grew rapidly (Online2602022, 2019, p.8).")
    assert (cit.author, cit.year, cit.page) == ("Online2602022", "2019", "p.8")
    assert cit.raw == "(Online2602022, 2019, p.8)"

    cit = parse_citation("Temperatures rose sharply (Morse et al., 2018, p. 67).")
    assert (cit.author, cit.year, cit.page) == ("Morse et al.", "2018", "p. 67")
    assert cit.raw == "(Morse et al., 2018, p. 67)"

    cit = parse_citation("Labeled paragraph text [Mishra et al., 2019, p.54]")
    assert (cit.author, cit.year, cit.page) == ("Mishra et al.", "2019", "p.54")
    assert cit.raw == "[Mishra et al., 2019, p.54]"

    sources = [
        Source(
            name="Morse et al., 2018, p. 67",
            content="Observed warming.",
            relevance=Relevance.RELEVANT,
            origin=Origin.SYNTHESIZED,
        ),
        Source(
            name="Lee, 2020, p.3",
            content="Unrelated text.",
            relevance=Relevance.IRRELEVANT,
            origin=Origin.SYNTHESIZED,
        ),
    ]
    matched = parse_citation("A fact stands (Morse et al., 2018, p. 67).")
    assert match_source(matched, sources) == "Morse et al., 2018, p. 67"
    hallucinated = parse_citation(
        "The archive was documented (Hudsonsonian Institution, 2017, p. 28)."
    )
    assert (hallucinated.author, hallucinated.year, hallucinated.page) == (
        "Hudsonsonian Institution",
        "2017",
        "p. 28",
    )
    assert match_source(hallucinated, sources) is None


def test_prompt_renderer_matches_golden_bytes():
    rendered = render_prompt(
        "How do coral reefs respond to ocean warming?",
        [
            (
                "Reef Watch, 2021, p.12",
                "Coral reefs bleach when water warms beyond seasonal maxima.",
            ),
            (
                "Mishra et al., 2019, p.54",
                "Symbiotic algae leave coral tissue under prolonged heat stress.",
            ),
        ],
    )
    assert rendered.encode("utf-8") == GOLDEN.read_bytes()


def _pairwise_double_u(xs, ys) -> int:
    """Twice the pairwise U statistic, exactly, as an integer."""
    doubled = 0
    for x in xs:
        for y in ys:
            if x > y:
                doubled += 2
            elif x == y:
                doubled += 1
    return doubled


def _permutation_p(xs, ys):
    """Enumerate every relabeling of the pooled sample and count extremes."""
    pooled = list(xs) + list(ys)
    n1 = len(xs)
    observed = _pairwise_double_u(xs, ys)
    total = at_most = at_least = 0
    for idx in combinations(range(len(pooled)), n1):
        chosen_set = set(idx)
        first = [pooled[i] for i in idx]
        second = [pooled[i] for i in range(len(pooled)) if i not in chosen_set]
        doubled = _pairwise_double_u(first, second)
        total += 1
        if doubled <= observed:
            at_most += 1
        if doubled >= observed:
            at_least += 1
    return observed, Fraction(at_most, total), Fraction(at_least, total)


def test_exact_mann_whitney_matches_permutation_oracle():
    assert mann_whitney_u([1, 2], [3, 4], Alternative.LESS).p == pytest.approx(
        1 / 6, abs=1e-12
    )
    assert mann_whitney_u(
        [1, 2, 3, 4, 5], [6, 7, 8, 9, 10], Alternative.LESS
    ).p == pytest.approx(1 / 252, abs=1e-12)

    rng = random.Random(614)
    for _ in range(500):
        n1 = rng.randint(1, 5)
        n2 = rng.randint(1, 10 - n1)
        xs = [rng.randrange(5) for _ in range(n1)]
        ys = [rng.randrange(5) for _ in range(n2)]
        doubled, p_less, p_greater = _permutation_p(xs, ys)
        result = mann_whitney_u(xs, ys, Alternative.LESS)
        assert result.u * 2 == doubled
        assert abs(result.p - float(p_less)) <= 1e-9
        assert (
            abs(mann_whitney_u(xs, ys, Alternative.GREATER).p - float(p_greater))
            <= 1e-9
        )
        two_sided = min(Fraction(1), 2 * min(p_less, p_greater))
        assert (
            abs(mann_whitney_u(xs, ys, Alternative.TWO_SIDED).p - float(two_sided))
            <= 1e-9
        )


def test_fisher_identity_pinned_value_and_permutation_invariance():
    for p in (5e-300, 1e-12, 0.001, 0.05, 0.3, 0.5, 0.77, 1.0):
        assert abs(fisher_combine([p]) - p) <= 1e-12

    x = -4.0 * math.log(0.5)
    expected = math.exp(-x / 2) * (1 + x / 2)
    assert abs(fisher_combine([0.5, 0.5]) - expected) <= 1e-9

    rng = random.Random(31)
    for _ in range(100):
        pvals = [rng.uniform(1e-6, 1.0) for _ in range(rng.randint(2, 8))]
        shuffled = pvals[:]
        rng.shuffle(shuffled)
        assert fisher_combine(pvals) == fisher_combine(shuffled)


def test_pearson_perfect_lines_and_affine_invariance():
    xs = [1.0, 2.0, 3.0, 4.0, 5.0]
    up = pearson(xs, [3 + 2 * x for x in xs])
    assert up.r == pytest.approx(1.0, abs=1e-12)
    assert up.p == 0.0
    down = pearson(xs, [10 - 4 * x for x in xs])
    assert down.r == pytest.approx(-1.0, abs=1e-12)
    assert down.p == 0.0

    rng = random.Random(7)
    base_x = [rng.uniform(0, 10) for _ in range(12)]
    base_y = [rng.uniform(0, 10) for _ in range(12)]
    plain = pearson(base_x, base_y)
    moved = pearson(
        [2.0 + 3.0 * x for x in base_x], [5.0 + 7.0 * y for y in base_y]
    )
    assert abs(plain.r - moved.r) <= 1e-12
    flipped = pearson(base_x, [5.0 - 7.0 * y for y in base_y])
    assert abs(plain.r + flipped.r) <= 1e-12


def test_pipeline_replay_determinism_and_sampling_histogram(tmp_path):
    transcripts = tmp_path / "transcripts"
    config = config_mod.generation_config(
        {"n_topics": "3", "questions_per_topic": "2", "paragraphs_per_question": "2"},
        seed=5,
    )
    recorder = RecordingChatClient(
        inner=ScriptedChat(pipeline_responder(3, 2, 2)),
        store=TranscriptStore(transcripts),
    )
    datagen.run_pipeline(config, recorder)

    outputs = []
    for name in ("one.jsonl", "two.jsonl"):
        replay = ReplayChatClient(store=TranscriptStore(transcripts))
        corpus = datagen.run_pipeline(config, replay)
        path = tmp_path / name
        storage.write_corpus(corpus, path)
        outputs.append(path)
    assert outputs[0].read_bytes() == outputs[1].read_bytes()

    question = Question(topic="T0", text="About T0?", id="t0-q0")
    relevant = make_sources(4, 0, topic="T0")
    pool = [
        PoolSource(
            topic="Other",
            question_id="qx",
            source=Source(
                name=f"Other{j}, 2020, p.{j + 1}",
                content="Cross topic filler paragraph.",
                relevance=Relevance.RELEVANT,
                origin=Origin.SYNTHESIZED,
            ),
            generator="std",
        )
        for j in range(8)
    ]
    rng = random.Random(20240818)
    rel_counts: Counter = Counter()
    irr_counts: Counter = Counter()
    for _ in range(10_000):
        inst = assemble_instruction(question, relevant, pool, rng)
        rel_counts[
            sum(1 for s in inst.sources if s.relevance is Relevance.RELEVANT)
        ] += 1
        irr_counts[
            sum(1 for s in inst.sources if s.relevance is Relevance.IRRELEVANT)
        ] += 1
    for value in range(0, 4):
        assert 2300 <= rel_counts[value] <= 2700
    for value in range(3, 7):
        assert 2300 <= irr_counts[value] <= 2700


def test_offline_end_to_end_corpus_build_score_filter_report(tmp_path):
    cfg = tmp_path / "settings.cfg"
    cfg.write_text(
        "n_topics=5\nquestions_per_topic=10\nparagraphs_per_question=2\n",
        encoding="utf-8",
    )
    transcripts = tmp_path / "transcripts"
    config = config_mod.generation_config(config_mod.load_settings(cfg), seed=7)
    datagen.run_pipeline(
        config,
        RecordingChatClient(
            inner=ScriptedChat(pipeline_responder(5, 10, 2, answer_policy="mixed")),
            store=TranscriptStore(transcripts),
        ),
    )

    args = ["--config", str(cfg), "--seed", "7", "--transcripts-dir", str(transcripts)]
    paths = {
        name: str(tmp_path / f"{name}.jsonl")
        for name in ("questions", "sources", "instructions", "base", "scored", "plus", "plusplus")
    }
    topics = str(tmp_path / "topics.txt")

    start = time.monotonic()
    steps = [
        ["gen", "topics", "-o", topics],
        ["gen", "questions", "--topics", topics, "-o", paths["questions"]],
        ["gen", "sources", "--questions", paths["questions"], "-o", paths["sources"]],
        [
            "gen", "instructions",
            "--questions", paths["questions"],
            "--sources", paths["sources"],
            "-o", paths["instructions"],
        ],
        ["gen", "answers", "--instructions", paths["instructions"], "-o", paths["base"]],
        ["score", paths["base"], "-o", paths["scored"], "--stub"],
        ["filter", "source-quality", paths["scored"], "-o", paths["plus"]],
        ["filter", "attributability", paths["plus"], "-o", paths["plusplus"]],
        ["stats", "describe", paths["scored"], paths["plus"], paths["plusplus"]],
    ]
    for argv in steps:
        assert cli.main(args + argv) == 0, argv

    scored = storage.read_corpus(paths["scored"])
    plus = storage.read_corpus(paths["plus"])
    plusplus = storage.read_corpus(paths["plusplus"])
    assert len(scored.records) == 50
    assert all(r.scores is not None for r in scored.records)
    assert 1 <= len(plusplus.records) <= len(plus.records) <= 50
    assert len(plusplus.records) < 50

    runs = {
        "base": {
            "main": {
                "source_quality": [
                    float(r.scores.source_quality) * 100.0 for r in scored.records
                ]
            }
        },
        "plus": {
            "main": {"source_quality": [100.0 for _ in plus.records]}
        },
    }
    runs_path = tmp_path / "runs.json"
    runs_path.write_text(json.dumps(runs), encoding="utf-8")
    report = tmp_path / "report.tsv"
    assert (
        cli.main(
            [
                "stats", "compare", str(runs_path),
                "--comparison", "base:plus:less",
                "--format", "tsv", "-o", str(report),
            ]
        )
        == 0
    )
    lines = report.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("setting_a\tsetting_b\talternative\tmetric")
    assert len(lines) == 2
    assert time.monotonic() - start < 30.0

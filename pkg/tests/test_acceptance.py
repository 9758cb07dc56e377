"""Acceptance gate: one budgeted end-to-end check per shipped guarantee.

Each test carries ``@pytest.mark.acceptance("<label>")`` so the run closes
with a one-line PASS/FAIL summary per guarantee, and each asserts its own
wall-clock budget so the fast paths stay fast.
"""

import itertools
import json
import random
import re
import time
from collections import Counter

import pytest

from vistruct.assembler import (
    DEFAULT_POOL,
    build_single_stage_dataset,
    render_training_sequence,
)
from vistruct.backends import ScriptedBackend, request_text
from vistruct.cli import main
from vistruct.corpus import (
    ASSISTANT,
    ImageCaptionPair,
    ImageRef,
    SeedRecord,
    TaskTriplet,
)
from vistruct.evalharness import score_multilabel_f1, score_rouge_l, score_token_recall
from vistruct.filterkit import (
    DEFAULT_COT_CONNECTIVE,
    assemble_cot,
    filter_triplets,
    split_cot_response,
)
from vistruct.quality import (
    TASK_TYPES,
    QualityAnnotation,
    ResponseAnnotation,
    diversity_score,
    filter_quality_report,
    rescale_likert,
)
from vistruct.seedkit import apply_blank_augmentation, render_synthesizer_tuning
from vistruct.synthclient import (
    STATUS_OK,
    parse_completion,
    render_completion,
    synthesize_batch,
)
from vistruct.templates import DESCRIBE_IMAGE_PROMPT, INFORMATIVE_MARKER, PRECISE_MARKER


class _Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc_info):
        self.elapsed = time.perf_counter() - self.start
        return False


def _assert_budget(watch: _Stopwatch, seconds: float) -> None:
    assert watch.elapsed < seconds, f"took {watch.elapsed:.2f}s, budget is {seconds}s"


# Triplet fields for the randomized suites draw words from a vocabulary that
# exercises unicode, digits, punctuation, embedded newlines/tabs, and the bare
# role words, then reject any composition that collides with a turn boundary,
# a response-style marker, or the reasoning connective. Those strings are turn
# syntax, not payload, so a field containing them is not a valid field.
_WORDS = (
    "the", "left", "lung", "heart", "image", "shows", "a", "small",
    "nodule", "No.", "Yes,", "clearly", "survey", "map", "42", "7%",
    "x-ray", "CT", "область", "腫瘍", "café", "(b)", "answer:", "user",
    "assistant", "User", "Assistant", "precise", "informative",
    "response.", "what", "is", "why?", "therefore", "it", "is,",
    "multi\nline", "tab\tseparated", "  indented", "trailing ",
)
_FORBIDDEN = (
    "\nUser: ",
    "\nAssistant: ",
    PRECISE_MARKER,
    INFORMATIVE_MARKER,
    DEFAULT_COT_CONNECTIVE,
)


def _random_field(rng: random.Random) -> str:
    while True:
        text = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 8)))
        if text.strip() and not any(bad in text for bad in _FORBIDDEN):
            return text


def _random_triplet(rng: random.Random) -> TaskTriplet:
    return TaskTriplet(
        instruction=_random_field(rng),
        informative_response=_random_field(rng),
        precise_response=_random_field(rng),
    )


GOLDEN_RECORD = SeedRecord(
    pair=ImageCaptionPair(
        id="golden-1",
        image=ImageRef.blank(16, 16),
        caption="A chest radiograph in frontal view.",
    ),
    triplet=TaskTriplet(
        instruction="Which organ is abnormal?",
        informative_response=(
            "The cardiac silhouette is enlarged, so the abnormal organ is the heart."
        ),
        precise_response="Heart.",
    ),
    source_task_name="demo",
)

GOLDEN_TEXT = (
    "User: <Image>Describe the image.\n"
    "Assistant: A chest radiograph in frontal view.\n"
    "User: Answer with a precise response. Which organ is abnormal?\n"
    "Assistant: Heart.\n"
    "User: Answer with an informative response. Which organ is abnormal?\n"
    "Assistant: The cardiac silhouette is enlarged, so the abnormal organ is the heart."
)


@pytest.mark.acceptance("format golden: fixed strings, triplet-region mask, byte-stable (<1s)")
def test_format_golden_suite():
    with _Stopwatch() as watch:
        rendered = render_synthesizer_tuning(GOLDEN_RECORD)

        assert rendered.rendered_text == GOLDEN_TEXT
        for fixed in (DESCRIBE_IMAGE_PROMPT, PRECISE_MARKER, INFORMATIVE_MARKER):
            assert fixed in rendered.rendered_text
        assert rendered.rendered_text.count(DESCRIBE_IMAGE_PROMPT) == 1
        assert rendered.rendered_text.count(PRECISE_MARKER) == 1
        assert rendered.rendered_text.count(INFORMATIVE_MARKER) == 1

        triplet = GOLDEN_RECORD.triplet
        assert rendered.masked_texts() == [
            f"{PRECISE_MARKER} {triplet.instruction}",
            triplet.precise_response,
            f"{INFORMATIVE_MARKER} {triplet.instruction}",
            triplet.informative_response,
        ]
        region_start = GOLDEN_TEXT.index(PRECISE_MARKER)
        assert rendered.masked_region_text() == GOLDEN_TEXT[region_start:]

        raw = GOLDEN_TEXT.encode("utf-8")
        caption_start = raw.index(GOLDEN_RECORD.pair.caption.encode("utf-8"))
        caption_end = caption_start + len(GOLDEN_RECORD.pair.caption.encode("utf-8"))
        for start, end in rendered.mask_spans:
            assert end <= caption_start or start >= caption_end

        again = render_synthesizer_tuning(
            SeedRecord(
                pair=ImageCaptionPair(
                    id="golden-1",
                    image=ImageRef.blank(16, 16),
                    caption="A chest radiograph in frontal view.",
                ),
                triplet=TaskTriplet(
                    instruction="Which organ is abnormal?",
                    informative_response=triplet.informative_response,
                    precise_response="Heart.",
                ),
                source_task_name="demo",
            )
        )
        assert again.rendered_bytes() == rendered.rendered_bytes()
        assert again.mask_spans == rendered.mask_spans
        assert again.image_refs == rendered.image_refs
    _assert_budget(watch, 1.0)


@pytest.mark.acceptance("round-trip: 10,000 randomized triplets parse back exactly (<10s)")
def test_round_trip_ten_thousand():
    rng = random.Random(20260816)
    failures = 0
    with _Stopwatch() as watch:
        for _ in range(10_000):
            triplet = _random_triplet(rng)
            parsed = parse_completion(render_completion(triplet))
            if parsed.triplet != triplet or parsed.instruction_mismatch:
                failures += 1
    assert failures == 0
    _assert_budget(watch, 10.0)


@pytest.mark.acceptance("filter fidelity: scripted 30% labels give retention exactly 0.300 (<5s)")
def test_filter_fidelity_scripted_thirty_percent():
    triplets = [
        TaskTriplet(
            instruction=f"What occupies region {i:04d}?",
            informative_response=(
                f"Region {i:04d} holds the calibration object placed there for the survey."
            ),
            precise_response=f"Object {i:04d}.",
        )
        for i in range(1000)
    ]
    scripted = frozenset(i for i in range(1000) if i % 10 < 3)
    assert len(scripted) == 300

    index_re = re.compile(r"region (\d{4})\?")

    def reply(request):
        index = int(index_re.search(request_text(request)).group(1))
        if index in scripted:
            return "consistent"
        return "inconsistent" if index % 2 else "open"

    with _Stopwatch() as watch:
        kept, stats = filter_triplets(triplets, ScriptedBackend([("", reply)]), max_in_flight=8)
    assert stats.total == 1000
    assert stats.consistent == 300
    assert stats.judge_failures == 0
    assert stats.retention_rate == 0.300
    assert kept == [t for i, t in enumerate(triplets) if i in scripted]
    _assert_budget(watch, 5.0)


@pytest.mark.acceptance("cot assembly: 1,000 triplets keep order and split back exactly (<5s)")
def test_cot_assembly_thousand():
    rng = random.Random(11)
    with _Stopwatch() as watch:
        for _ in range(1000):
            triplet = _random_triplet(rng)
            task = assemble_cot(triplet)
            informative_at = task.response.find(triplet.informative_response)
            assert informative_at >= 0
            tail = informative_at + len(triplet.informative_response)
            assert task.response.find(triplet.precise_response, tail) >= 0
            assert split_cot_response(task.response) == (
                triplet.informative_response,
                triplet.precise_response,
            )
    _assert_budget(watch, 5.0)


@pytest.mark.acceptance("single-stage: 100 pairs / 37 tasks -> 37 four-turn + 63 two-turn (<5s)")
def test_single_stage_assembly_counts_and_masks():
    pairs = [
        ImageCaptionPair(
            id=f"pair-{i:03d}",
            image=ImageRef.blank(8, 8) if i % 2 else ImageRef.file(f"images/{i:03d}.png"),
            caption=f"Survey frame {i:03d} over the study area.",
        )
        for i in range(100)
    ]
    surviving = sorted(random.Random(37).sample(range(100), 37))
    tasks = {
        pairs[i].id: assemble_cot(
            TaskTriplet(
                instruction=f"What does frame {i:03d} show?",
                informative_response=(
                    f"The frame centers on plot {i:03d}, matching the survey layout."
                ),
                precise_response=f"Plot {i:03d}.",
            )
        )
        for i in surviving
    }

    with _Stopwatch() as watch:
        examples = build_single_stage_dataset(pairs, tasks, rng_seed=3)

        assert len(examples) == 100
        assert [e.source_pair_id for e in examples] == [p.id for p in pairs]
        four_turn = [e for e in examples if len(e.turns) == 4]
        two_turn = [e for e in examples if len(e.turns) == 2]
        assert len(four_turn) == 37
        assert len(two_turn) == 63
        assert {e.source_pair_id for e in four_turn} == {pairs[i].id for i in surviving}

        for example in examples:
            rendered = render_training_sequence(example)
            assistant_texts = [t.text for t in example.turns if t.role == ASSISTANT]
            assert rendered.masked_texts() == assistant_texts
    _assert_budget(watch, 5.0)


_SYMBOLS = ("x", "y", "z")


def _contains_subsequence(sequence, candidate):
    iterator = iter(sequence)
    return all(token in iterator for token in candidate)


def _lcs_exhaustive(a, b):
    """LCS length by enumerating subsequences of the shorter sequence."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    for length in range(len(short), 0, -1):
        seen = set()
        for combo in itertools.combinations(short, length):
            if combo in seen:
                continue
            seen.add(combo)
            if _contains_subsequence(long_, combo):
                return length
    return 0


def _f_measure(lcs, len_pred, len_gold):
    if not lcs or not len_pred or not len_gold:
        return 0.0
    precision = lcs / len_pred
    recall = lcs / len_gold
    return 2 * precision * recall / (precision + recall)


def _sequences_up_to(max_len):
    frontier = [()]
    out = [()]
    for _ in range(max_len):
        frontier = [seq + (s,) for seq in frontier for s in _SYMBOLS]
        out.extend(frontier)
    return out


def _check_rouge_pair(a, b):
    expected = _f_measure(_lcs_exhaustive(a, b), len(a), len(b))
    got = score_rouge_l(" ".join(a), " ".join(b))
    assert abs(got - expected) <= 1e-9, (a, b, got, expected)


@pytest.mark.acceptance("metric oracles: rouge-l matches exhaustive enumeration + worked examples (<30s)")
def test_metric_oracles():
    with _Stopwatch() as watch:
        sequences = _sequences_up_to(8)
        assert len(sequences) == 9841
        by_len: dict[int, list[tuple[str, ...]]] = {}
        for seq in sequences:
            by_len.setdefault(len(seq), []).append(seq)

        # Exhaustive: every pair whose lengths sum to at most 8, which
        # includes the full product of all pairs up to length 3 a side.
        checked = 0
        for len_a in range(9):
            for len_b in range(9 - len_a):
                for a in by_len[len_a]:
                    for b in by_len[len_b]:
                        _check_rouge_pair(a, b)
                        checked += 1
        assert checked == 83_653

        # Every length<=8 sequence again, against seeded random partners of
        # unrestricted length, so long-vs-long pairs are exercised too.
        rng = random.Random(8)
        for seq in sequences:
            for _ in range(2):
                partner = tuple(rng.choice(_SYMBOLS) for _ in range(rng.randint(0, 8)))
                _check_rouge_pair(seq, partner)

        assert abs(score_rouge_l("a b c d", "b d") - 2 / 3) <= 1e-9
        assert (
            abs(
                score_multilabel_f1(
                    "[candy, egg tart]", ("candy",), ("candy", "egg tart", "rice")
                )
                - 2 / 3
            )
            <= 1e-9
        )
        assert score_token_recall("right lung", "left lung") == 0.5
    _assert_budget(watch, 30.0)


@pytest.mark.acceptance("quality: diversity in steps of 5, likert endpoints, filter report row (<1s)")
def test_quality_scoring():
    with _Stopwatch() as watch:
        for distinct in range(1, len(TASK_TYPES) + 1):
            annotations = [
                QualityAnnotation(f"q-{i}", TASK_TYPES[i % distinct], 3, 3, 3)
                for i in range(40)
            ]
            score = diversity_score(annotations)
            assert score == 5.0 * distinct
            assert score % 5 == 0

        assert rescale_likert([1]) == 0.0
        assert rescale_likert([3]) == 50.0
        assert rescale_likert([5]) == 100.0
        assert rescale_likert([1, 3, 5]) == 50.0

        pre = [
            ResponseAnnotation(
                sample_id=f"pre-{i}",
                consistent=i < 303,
                precise_correct=i < 643,
                informative_correct=i < 610,
            )
            for i in range(1000)
        ]
        post = [
            ResponseAnnotation(
                sample_id=f"post-{i}",
                consistent=i < 922,
                precise_correct=True,
                informative_correct=True,
                combined_correct=i < 751,
            )
            for i in range(1000)
        ]
        report = filter_quality_report(pre, post)
        assert abs(report.pre_consistency - 30.3) <= 1e-9
        assert abs(report.pre_precise_accuracy - 64.3) <= 1e-9
        assert abs(report.pre_informative_accuracy - 61.0) <= 1e-9
        assert abs(report.post_consistency - 92.2) <= 1e-9
        assert abs(report.post_accuracy - 75.1) <= 1e-9
    _assert_budget(watch, 1.0)


_FRAME_RE = re.compile(r"frame (\d{3})")
_PARCEL_RE = re.compile(r"Parcel (\d{3})\.")


def _pipeline_synth_reply(request):
    index = int(_FRAME_RE.search(request_text(request)).group(1))
    if index % 17 == 5:
        return "no turn structure here at all"
    question = f"What is mapped at frame {index:03d}?"
    return (
        f"User: Answer with a precise response. {question}\n"
        f"Assistant: Parcel {index:03d}.\n"
        f"User: Answer with an informative response. {question}\n"
        f"Assistant: The frame covers parcel {index:03d} on the cadastral grid."
    )


def _pipeline_judge_reply(request):
    index = int(_PARCEL_RE.search(request_text(request)).group(1))
    if index % 5 in (0, 1):
        return "consistent"
    return "inconsistent" if index % 5 == 2 else "open"


@pytest.mark.acceptance("concurrency: pipeline byte-identical at in-flight 1/8/64 (<30s)")
def test_concurrency_transparency():
    pairs = [
        ImageCaptionPair(
            id=f"pair-{i:03d}",
            image=ImageRef.blank(8, 8),
            caption=f"frame {i:03d} of the flight line",
        )
        for i in range(200)
    ]

    def run(flight):
        synthesizer = ScriptedBackend(
            [("", _pipeline_synth_reply)], latency=(0.0, 0.004), latency_seed=1
        )
        judge = ScriptedBackend(
            [("", _pipeline_judge_reply)], latency=(0.0, 0.004), latency_seed=2
        )
        outcomes = synthesize_batch(pairs, synthesizer, max_in_flight=flight)
        owners = {
            outcome.triplet: pair.id
            for pair, outcome in zip(pairs, outcomes)
            if outcome.status == STATUS_OK
        }
        kept, stats = filter_triplets(list(owners), judge, max_in_flight=flight)
        tasks = {owners[t]: assemble_cot(t) for t in kept}
        examples = build_single_stage_dataset(pairs, tasks, rng_seed=11)
        rendered = [render_training_sequence(e) for e in examples]
        return json.dumps(
            {
                "outcomes": [o.to_dict() for o in outcomes],
                "stats": stats.to_dict(),
                "tasks": {pid: task.to_dict() for pid, task in sorted(tasks.items())},
                "examples": [e.to_dict() for e in examples],
                "rendered": [r.to_dict() for r in rendered],
            },
            sort_keys=True,
            ensure_ascii=False,
        ).encode("utf-8")

    with _Stopwatch() as watch:
        serial = run(1)
        assert run(8) == serial
        assert run(64) == serial
    # The scripted set produces real mixtures, not a degenerate all-keep run.
    payload = json.loads(serial)
    assert payload["stats"]["consistent"] > 0
    assert payload["stats"]["inconsistent"] > 0
    assert payload["stats"]["open"] > 0
    assert any(o["status"] != "ok" for o in payload["outcomes"])
    _assert_budget(watch, 30.0)


@pytest.mark.acceptance("blank augmentation: 10 of 100 exactly; per-index rate 5-15% over 1,000 seeds (<10s)")
def test_blank_augmentation_rates():
    records = [
        SeedRecord(
            pair=ImageCaptionPair(
                id=f"seed-{i:03d}",
                image=ImageRef.file(f"images/{i:03d}.png"),
                caption=f"Ground photo {i:03d}.",
            ),
            triplet=TaskTriplet(
                instruction=f"What is item {i:03d}?",
                informative_response=f"The photo shows catalog item {i:03d} in context.",
                precise_response=f"Item {i:03d}.",
            ),
        )
        for i in range(100)
    ]

    with _Stopwatch() as watch:
        augmented, replaced = apply_blank_augmentation(records, 0.10, rng_seed=0)
        assert len(replaced) == 10
        blanks = [i for i, r in enumerate(augmented) if r.pair.image.kind == "blank"]
        assert blanks == sorted(replaced)
        for i, (before, after) in enumerate(zip(records, augmented)):
            if i in replaced:
                assert after.pair.image.kind == "blank"
                assert after.pair.id == before.pair.id
                assert after.pair.caption == before.pair.caption
                assert after.triplet == before.triplet
            else:
                assert after is before

        counts = Counter()
        for seed in range(1000):
            _, chosen = apply_blank_augmentation(records, 0.10, rng_seed=seed)
            assert len(chosen) == 10
            counts.update(chosen)
        for index in range(100):
            share = counts[index] / 1000
            assert 0.05 <= share <= 0.15, (index, share)
    _assert_budget(watch, 10.0)


def _smoke_completion(i):
    question = f"What number is printed on tile {i:02d}?"
    return (
        f"User: Answer with a precise response. {question}\n"
        f"Assistant: Number {i:02d}.\n"
        f"User: Answer with an informative response. {question}\n"
        f"Assistant: Tile {i:02d} of the mosaic carries the printed number {i:02d}."
    )


def _write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def _smoke_project(root):
    """A 50-pair toy corpus with scripted backends; returns the config path."""
    blank = ImageRef.blank(16, 16).to_dict()
    _write_jsonl(
        root / "pairs.jsonl",
        [
            {"id": f"pair-{i:02d}", "image": blank, "caption": f"aerial tile {i:02d}"}
            for i in range(50)
        ],
    )
    _write_jsonl(
        root / "seed_tasks.jsonl",
        [
            {
                "id": f"seed-{i:02d}",
                "image": f"seeds/{i:02d}.png",
                "instruction": f"Seed question {i:02d}?",
                "precise_response": f"Seed answer {i:02d}.",
                "task_name": "toy",
            }
            for i in range(50)
        ],
    )
    _write_jsonl(
        root / "seed_captions.jsonl",
        [
            {
                "id": f"seed-{i:02d}",
                "caption": f"seed caption {i:02d}",
                "informative_response": f"A longer seed explanation {i:02d}.",
            }
            for i in range(50)
        ],
    )
    _write_jsonl(
        root / "eval_closed.jsonl",
        [
            {"id": "e0", "image": blank, "gold": "yes", "fields": {"question": "Is the lung clear?"}},
            {"id": "e1", "image": blank, "gold": "no", "fields": {"question": "Is there flooding?"}},
            {"id": "e2", "image": blank, "gold": "no", "fields": {"question": "Is the lung collapsed?"}},
            {"id": "e3", "image": blank, "gold": "yes", "fields": {"question": "Is the road damaged?"}},
        ],
    )
    judge_rules = (
        [{"contains": f"tile {i:02d}?", "reply": "inconsistent"} for i in range(50) if i % 5 == 1]
        + [{"contains": f"tile {i:02d}?", "reply": "open"} for i in range(50) if i % 5 == 2]
        + [{"contains": "", "reply": "consistent"}]
    )
    config = {
        "output_dir": "out",
        "pairs": "pairs.jsonl",
        "seed_sources": {"tasks": "seed_tasks.jsonl", "captions": "seed_captions.jsonl"},
        "eval_tasks": {"slake_closed": "eval_closed.jsonl"},
        "blank_fraction": 0.1,
        "rng_seed": 7,
        "max_in_flight": 4,
        "backends": {
            "synthesizer": {
                "type": "scripted",
                "rules": [
                    {"contains": f"aerial tile {i:02d}", "reply": _smoke_completion(i)}
                    for i in range(50)
                ],
            },
            "judge": {"type": "scripted", "rules": judge_rules},
            "eval": {
                "type": "scripted",
                "rules": [
                    {"contains": "lung", "reply": "Yes."},
                    {"contains": "", "reply": "No."},
                ],
            },
        },
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return config_path


@pytest.mark.acceptance("end-to-end: six commands on 50 pairs, exit 0, manifest conserves counts (<60s)")
def test_end_to_end_smoke(tmp_path, capsys):
    config = _smoke_project(tmp_path)
    out = tmp_path / "out"

    with _Stopwatch() as watch:
        for argv in (
            ["seed-build", "--config", str(config)],
            ["augment", "--config", str(config)],
            ["synthesize", "--config", str(config)],
            ["filter", "--config", str(config)],
            ["assemble", "--config", str(config)],
            ["evaluate", "--config", str(config), "--task", "slake_closed"],
        ):
            assert main(argv) == 0, capsys.readouterr().out
    _assert_budget(watch, 60.0)

    def read_json(name):
        return json.loads((out / name).read_text(encoding="utf-8"))

    def count_lines(name):
        return len((out / name).read_text(encoding="utf-8").splitlines())

    join_report = read_json("join_report.json")
    assert join_report["matched"] == 50
    assert count_lines("seed.jsonl") == 50

    augment_report = read_json("augment_report.json")
    assert augment_report["replaced"] == 5
    assert count_lines("seed_augmented.jsonl") == 50
    augmented = [
        json.loads(line)
        for line in (out / "seed_augmented.jsonl").read_text(encoding="utf-8").splitlines()
    ]
    assert sum(1 for row in augmented if row["pair"]["image"]["kind"] == "blank") == 5

    synth_stats = read_json("synth_stats.json")
    assert synth_stats["total"] == 50
    assert (
        synth_stats["ok"] + synth_stats["parse_failures"] + synth_stats["backend_failures"]
        == synth_stats["total"]
    )
    assert synth_stats["ok"] == 50
    assert count_lines("outcomes.jsonl") == 50

    filter_stats = read_json("filter_stats.json")
    assert filter_stats["total"] == synth_stats["ok"]
    assert (
        filter_stats["consistent"]
        + filter_stats["inconsistent"]
        + filter_stats["open"]
        + filter_stats["judge_failures"]
        == filter_stats["total"]
    )
    assert filter_stats["consistent"] == 30
    assert filter_stats["inconsistent"] == 10
    assert filter_stats["open"] == 10
    assert filter_stats["retention_rate"] == filter_stats["consistent"] / filter_stats["total"]
    assert count_lines("kept_tasks.jsonl") == filter_stats["consistent"]

    manifest = read_json("manifest_single.json")
    assert manifest["total"] == 50
    assert manifest["total"] == count_lines("training_single.jsonl")
    counts = manifest["counts_by_provenance"]
    assert sum(counts.values()) == manifest["total"]
    assert counts["caption_plus_synthetic"] == filter_stats["consistent"]
    assert counts["caption_only"] == manifest["total"] - filter_stats["consistent"]
    assert manifest["rng_seed"] == 7
    assert manifest["pool_fingerprint"] == DEFAULT_POOL.fingerprint()

    eval_report = read_json("eval_slake_closed.json")
    assert eval_report["n"] == 4
    assert eval_report["n"] == len(eval_report["per_instance"])
    assert eval_report["failures"] == 0
    assert eval_report["mean_score"] == 50.0

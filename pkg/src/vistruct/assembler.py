"""Post-training dataset assembly.

Single-stage assembly interleaves caption learning and task learning in one
dataset: every pair contributes a two-turn caption exchange (with a caption
question drawn deterministically from a pool), and pairs that have a
surviving synthesized task get two further turns carrying the task. The
two-stage baseline splits the same material into a caption-only stage and a
task-only stage, optionally repeating the caption data in stage two.

Loss always falls on assistant turns only.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Sequence

from .corpus import (
    ASSISTANT,
    PROVENANCE_CAPTION_ONLY,
    PROVENANCE_CAPTION_PLUS_SYNTHETIC,
    PROVENANCE_STAGE1,
    PROVENANCE_STAGE2,
    USER,
    ChatTurn,
    ImageCaptionPair,
    LossMaskedSequence,
    TrainingExample,
)
from .errors import ConfigError, DataError, EmptyPoolError
from .filterkit import CotTask
from .templates import DEFAULT_TEMPLATE, ChatTemplate, render_sequence

DEFAULT_CAPTION_QUESTIONS = (
    "Describe the image.",
    "What is shown in this image?",
    "Give a detailed description of the picture.",
    "Summarize the content of the image.",
    "What can you see in the image?",
    "Provide a caption for this image.",
    "Explain what this image depicts.",
    "Describe the scene in the image.",
    "What does this picture show?",
    "Write a description of the image.",
)


@dataclass(frozen=True)
class CaptionQuestionPool:
    """The fixed set of ways to ask for a caption."""

    questions: tuple[str, ...] = DEFAULT_CAPTION_QUESTIONS

    def __post_init__(self):
        object.__setattr__(self, "questions", tuple(self.questions))
        if not self.questions:
            raise EmptyPoolError("caption question pool is empty")
        for question in self.questions:
            if not isinstance(question, str) or not question.strip():
                raise EmptyPoolError("caption questions must be non-empty strings")
        if len(set(self.questions)) != len(self.questions):
            raise EmptyPoolError("caption questions must be distinct")

    def fingerprint(self) -> str:
        blob = json.dumps(list(self.questions), ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


DEFAULT_POOL = CaptionQuestionPool()


def load_pool(path: str | Path) -> CaptionQuestionPool:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(raw, Mapping):
        raw = raw.get("questions")
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a list of questions or an object with a 'questions' key")
    return CaptionQuestionPool(tuple(raw))


def pick_caption_question(pool: CaptionQuestionPool, rng_seed: int, index: int) -> str:
    """Deterministic pick for example ``index``: same seed, same question.

    Each index gets its own derived stream, so picks are independent of batch
    boundaries and of how many picks happened before.
    """
    rng = random.Random(f"{rng_seed}:{index}")
    return pool.questions[rng.randrange(len(pool.questions))]


def _caption_turns(pair: ImageCaptionPair, question: str) -> tuple[ChatTurn, ChatTurn]:
    return (
        ChatTurn(USER, question, image=pair.image),
        ChatTurn(ASSISTANT, pair.caption, loss_bearing=True),
    )


def _task_turns(task: CotTask) -> tuple[ChatTurn, ChatTurn]:
    return (
        ChatTurn(USER, task.instruction),
        ChatTurn(ASSISTANT, task.response, loss_bearing=True),
    )


def build_single_stage(
    pair: ImageCaptionPair,
    task: CotTask | None,
    pool: CaptionQuestionPool,
    rng_seed: int,
    index: int,
) -> TrainingExample:
    """One single-stage example: caption exchange, plus the task if present."""
    question = pick_caption_question(pool, rng_seed, index)
    turns = _caption_turns(pair, question)
    if task is None:
        return TrainingExample(turns, PROVENANCE_CAPTION_ONLY, pair.id)
    return TrainingExample(turns + _task_turns(task), PROVENANCE_CAPTION_PLUS_SYNTHETIC, pair.id)


def build_single_stage_dataset(
    pairs: Sequence[ImageCaptionPair],
    tasks: Mapping[str, CotTask],
    pool: CaptionQuestionPool = DEFAULT_POOL,
    rng_seed: int = 0,
) -> list[TrainingExample]:
    """One example per pair, in pair order; task keys must refer to known pairs."""
    _check_task_ids(pairs, tasks)
    return [
        build_single_stage(pair, tasks.get(pair.id), pool, rng_seed, index)
        for index, pair in enumerate(pairs)
    ]


def build_two_stage(
    pairs: Sequence[ImageCaptionPair],
    tasks: Mapping[str, CotTask],
    pool: CaptionQuestionPool = DEFAULT_POOL,
    rng_seed: int = 0,
    reuse_caption: bool = False,
) -> tuple[list[TrainingExample], list[TrainingExample]]:
    """Two-stage baseline: caption-only stage one, task-only stage two.

    Stage-two task examples keep the image on their user turn (there is no
    caption context to lean on). With ``reuse_caption`` the stage-one caption
    examples are additionally appended to stage two, re-tagged.
    """
    _check_task_ids(pairs, tasks)
    stage1: list[TrainingExample] = []
    stage2: list[TrainingExample] = []
    for index, pair in enumerate(pairs):
        question = pick_caption_question(pool, rng_seed, index)
        stage1.append(TrainingExample(_caption_turns(pair, question), PROVENANCE_STAGE1, pair.id))
        task = tasks.get(pair.id)
        if task is not None:
            turns = (
                ChatTurn(USER, task.instruction, image=pair.image),
                ChatTurn(ASSISTANT, task.response, loss_bearing=True),
            )
            stage2.append(TrainingExample(turns, PROVENANCE_STAGE2, pair.id))
    if reuse_caption:
        for example in stage1:
            stage2.append(
                TrainingExample(example.turns, PROVENANCE_STAGE2, example.source_pair_id)
            )
    return stage1, stage2


def _check_task_ids(pairs: Sequence[ImageCaptionPair], tasks: Mapping[str, CotTask]) -> None:
    known = {pair.id for pair in pairs}
    unknown = sorted(set(tasks) - known)
    if unknown:
        raise DataError(f"tasks reference unknown pair ids: {', '.join(unknown[:5])}")


def render_training_sequence(
    example: TrainingExample,
    template: ChatTemplate = DEFAULT_TEMPLATE,
    include_control_tokens: bool = False,
) -> LossMaskedSequence:
    """Render an assembled example; loss spans cover assistant turns only."""
    return render_sequence(example.turns, template, include_control_tokens)


def dataset_manifest(
    examples: Sequence[TrainingExample],
    *,
    mode: str,
    rng_seed: int,
    pool: CaptionQuestionPool,
    extra: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Counts by provenance plus the knobs that produced the dataset."""
    counts = Counter(example.provenance for example in examples)
    manifest: dict[str, Any] = {
        "mode": mode,
        "total": len(examples),
        "counts_by_provenance": {key: counts[key] for key in sorted(counts)},
        "rng_seed": rng_seed,
        "pool_fingerprint": pool.fingerprint(),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    return manifest

"""Seed-set construction for synthesizer tuning.

Seeds come from two existing instruction corpora joined on a shared id: a
task-style source contributing (image, instruction, precise response) and a
caption-style source contributing (caption, informative response). A fixed
fraction of seed images is then replaced with generated blanks so the tuned
model also sees image-free context, and each seed renders to a six-turn
conversation whose last four turns bear loss.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .corpus import (
    ASSISTANT,
    DEFAULT_BLANK_SIZE,
    PROVENANCE_SYNTHESIZER_TUNING,
    USER,
    ChatTurn,
    ImageCaptionPair,
    ImageRef,
    LossMaskedSequence,
    SeedRecord,
    TaskTriplet,
    TrainingExample,
)
from .errors import DuplicateIdError, FractionOutOfRangeError, ValidationError
from .templates import (
    DEFAULT_TEMPLATE,
    DESCRIBE_IMAGE_PROMPT,
    INFORMATIVE_MARKER,
    PRECISE_MARKER,
    ChatTemplate,
    render_sequence,
)


@dataclass(frozen=True)
class SourceJoinReport:
    """Accounting for a two-source join: every input record lands somewhere."""

    matched: int
    unmatched_task: int
    unmatched_caption: int

    def __post_init__(self):
        for name in ("matched", "unmatched_task", "unmatched_caption"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")

    @property
    def task_total(self) -> int:
        return self.matched + self.unmatched_task

    @property
    def caption_total(self) -> int:
        return self.matched + self.unmatched_caption

    def to_dict(self) -> dict[str, Any]:
        return {
            "matched": self.matched,
            "unmatched_task": self.unmatched_task,
            "unmatched_caption": self.unmatched_caption,
            "task_total": self.task_total,
            "caption_total": self.caption_total,
        }


def _image_ref_from(value: Any) -> ImageRef:
    if isinstance(value, str):
        return ImageRef.file(value)
    if isinstance(value, Mapping):
        return ImageRef.from_dict(dict(value))
    raise ValidationError("image must be a path string or an image ref object")


def merge_seed_sources(
    task_rows: Sequence[Mapping[str, Any]],
    caption_rows: Sequence[Mapping[str, Any]],
) -> tuple[list[SeedRecord], SourceJoinReport]:
    """Join the two seed sources on id.

    Task rows need ``id``, ``image``, ``instruction``, ``precise_response``
    (optionally ``task_name``); caption rows need ``id``, ``caption``,
    ``informative_response``. Output order follows the task source. Ids must
    be unique within each source; a repeat raises DuplicateIdError.
    """
    captions: dict[str, Mapping[str, Any]] = {}
    for row in caption_rows:
        row_id = _require_id(row, "caption source")
        if row_id in captions:
            raise DuplicateIdError("caption source", row_id)
        captions[row_id] = row

    records: list[SeedRecord] = []
    task_ids: set[str] = set()
    for row in task_rows:
        row_id = _require_id(row, "task source")
        if row_id in task_ids:
            raise DuplicateIdError("task source", row_id)
        task_ids.add(row_id)
        other = captions.get(row_id)
        if other is None:
            continue
        _require_fields(row, "task source", row_id, "image", "instruction", "precise_response")
        _require_fields(other, "caption source", row_id, "caption", "informative_response")
        pair = ImageCaptionPair(
            id=row_id,
            image=_image_ref_from(row["image"]),
            caption=other["caption"],
        )
        triplet = TaskTriplet(
            instruction=row["instruction"],
            informative_response=other["informative_response"],
            precise_response=row["precise_response"],
        )
        records.append(SeedRecord(pair=pair, triplet=triplet, source_task_name=row.get("task_name")))

    matched = len(records)
    report = SourceJoinReport(
        matched=matched,
        unmatched_task=len(task_rows) - matched,
        unmatched_caption=len(caption_rows) - matched,
    )
    return records, report


def _require_id(row: Mapping[str, Any], source: str) -> str:
    row_id = row.get("id")
    if not row_id or not isinstance(row_id, str):
        raise ValidationError(f"{source} row lacks a non-empty string id")
    return row_id


def _require_fields(row: Mapping[str, Any], source: str, row_id: str, *names: str) -> None:
    missing = [name for name in names if name not in row]
    if missing:
        raise ValidationError(f"{source} row {row_id!r} is missing: {', '.join(missing)}")


def blank_replacement_count(n: int, fraction: float) -> int:
    """How many of n records get a blank image: round(fraction * n), half up."""
    if not 0.0 <= fraction <= 1.0:
        raise FractionOutOfRangeError(f"fraction must be within [0, 1], got {fraction}")
    return int(math.floor(fraction * n + 0.5))


def apply_blank_augmentation(
    records: Sequence[SeedRecord],
    fraction: float,
    rng_seed: int,
    blank_size: tuple[int, int] = (DEFAULT_BLANK_SIZE, DEFAULT_BLANK_SIZE),
) -> tuple[list[SeedRecord], frozenset[int]]:
    """Replace a sampled fraction of seed images with generated blanks.

    Sampling is without replacement, uniform over indices, and fully
    determined by ``rng_seed``. Everything except the sampled images (order,
    captions, triplets) is unchanged. Returns the new records plus the set of
    replaced indices.
    """
    count = blank_replacement_count(len(records), fraction)
    rng = random.Random(rng_seed)
    chosen = frozenset(rng.sample(range(len(records)), count)) if count else frozenset()
    width, height = blank_size
    out: list[SeedRecord] = []
    for index, record in enumerate(records):
        if index in chosen:
            pair = ImageCaptionPair(
                id=record.pair.id,
                image=ImageRef.blank(width, height),
                caption=record.pair.caption,
                domain_tag=record.pair.domain_tag,
            )
            record = SeedRecord(pair=pair, triplet=record.triplet, source_task_name=record.source_task_name)
        out.append(record)
    return out, chosen


def synthesizer_tuning_example(record: SeedRecord) -> TrainingExample:
    """Lay a seed out as the six-turn tuning conversation.

    Turns 1-2 (describe request, caption) carry no loss; turns 3-6 (precise
    exchange, then informative exchange) do.
    """
    triplet = record.triplet
    turns = (
        ChatTurn(USER, DESCRIBE_IMAGE_PROMPT, image=record.pair.image),
        ChatTurn(ASSISTANT, record.pair.caption),
        ChatTurn(USER, f"{PRECISE_MARKER} {triplet.instruction}", loss_bearing=True),
        ChatTurn(ASSISTANT, triplet.precise_response, loss_bearing=True),
        ChatTurn(USER, f"{INFORMATIVE_MARKER} {triplet.instruction}", loss_bearing=True),
        ChatTurn(ASSISTANT, triplet.informative_response, loss_bearing=True),
    )
    return TrainingExample(
        turns=turns,
        provenance=PROVENANCE_SYNTHESIZER_TUNING,
        source_pair_id=record.pair.id,
    )


def render_synthesizer_tuning(
    record: SeedRecord,
    template: ChatTemplate = DEFAULT_TEMPLATE,
    include_control_tokens: bool = False,
) -> LossMaskedSequence:
    example = synthesizer_tuning_example(record)
    return render_sequence(example.turns, template, include_control_tokens)

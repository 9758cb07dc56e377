"""Core data model and JSONL interchange for every pipeline stage.

All types validate their invariants at construction and are immutable
afterwards, so records can be shared freely across worker threads.
Interchange files are JSONL: one UTF-8 encoded JSON object per line, with
newlines inside field values escaped by the JSON encoder.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable

from PIL import Image

from .errors import DataError, ValidationError

USER = "user"
ASSISTANT = "assistant"
SYSTEM = "system"

PROVENANCE_CAPTION_ONLY = "caption_only"
PROVENANCE_CAPTION_PLUS_SYNTHETIC = "caption_plus_synthetic"
PROVENANCE_SYNTHESIZER_TUNING = "synthesizer_tuning"
PROVENANCE_STAGE1 = "stage1"
PROVENANCE_STAGE2 = "stage2"

PROVENANCES = (
    PROVENANCE_CAPTION_ONLY,
    PROVENANCE_CAPTION_PLUS_SYNTHETIC,
    PROVENANCE_SYNTHESIZER_TUNING,
    PROVENANCE_STAGE1,
    PROVENANCE_STAGE2,
)

# caption_only / caption_plus_synthetic / synthesizer_tuning have fixed shapes;
# the two stage provenances tag examples of the first two shapes.
_FIXED_TURN_COUNTS = {
    PROVENANCE_CAPTION_ONLY: 2,
    PROVENANCE_CAPTION_PLUS_SYNTHETIC: 4,
    PROVENANCE_SYNTHESIZER_TUNING: 6,
}

DEFAULT_BLANK_SIZE = 336

_MEDIA_TYPES = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".gif": "image/gif",
    ".webp": "image/webp",
    ".bmp": "image/bmp",
}


@dataclass(frozen=True)
class ImageRef:
    """Reference to an image: a file on disk, a generated blank, or inline bytes.

    Exactly the fields relevant to ``kind`` may be set, which keeps the JSON
    form canonical. Use the ``file`` / ``blank`` / ``inline`` constructors.
    """

    kind: str
    path: str | None = None
    width: int | None = None
    height: int | None = None
    data: str | None = None
    media_type: str | None = None

    def __post_init__(self):
        if self.kind == "file":
            if not self.path or not isinstance(self.path, str):
                raise ValidationError("file image ref needs a non-empty path")
            self._forbid("width", "height", "data", "media_type")
        elif self.kind == "blank":
            for side in (self.width, self.height):
                if not isinstance(side, int) or isinstance(side, bool) or side <= 0:
                    raise ValidationError("blank image ref needs positive integer width and height")
            self._forbid("path", "data", "media_type")
        elif self.kind == "inline":
            if not self.data or not isinstance(self.data, str):
                raise ValidationError("inline image ref needs base64 data")
            if not self.media_type or not isinstance(self.media_type, str):
                raise ValidationError("inline image ref needs a media type")
            self._forbid("path", "width", "height")
        else:
            raise ValidationError(f"unknown image kind {self.kind!r}")

    def _forbid(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is not None:
                raise ValidationError(f"{name!r} is not a field of {self.kind!r} image refs")

    @classmethod
    def file(cls, path: str | Path) -> "ImageRef":
        return cls(kind="file", path=str(path))

    @classmethod
    def blank(cls, width: int = DEFAULT_BLANK_SIZE, height: int = DEFAULT_BLANK_SIZE) -> "ImageRef":
        return cls(kind="blank", width=width, height=height)

    @classmethod
    def inline(cls, data: bytes | str, media_type: str = "image/png") -> "ImageRef":
        if isinstance(data, bytes):
            data = base64.b64encode(data).decode("ascii")
        return cls(kind="inline", data=data, media_type=media_type)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "file":
            return {"kind": "file", "path": self.path}
        if self.kind == "blank":
            return {"kind": "blank", "width": self.width, "height": self.height}
        return {"kind": "inline", "data": self.data, "media_type": self.media_type}

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ImageRef":
        if not isinstance(raw, dict):
            raise ValidationError("image ref must be a JSON object")
        kind = raw.get("kind")
        if kind == "file":
            return cls(kind="file", path=raw.get("path"))
        if kind == "blank":
            return cls(kind="blank", width=raw.get("width"), height=raw.get("height"))
        if kind == "inline":
            return cls(kind="inline", data=raw.get("data"), media_type=raw.get("media_type"))
        raise ValidationError(f"unknown image kind {kind!r}")


def blank_image_bytes(width: int = DEFAULT_BLANK_SIZE, height: int = DEFAULT_BLANK_SIZE) -> bytes:
    """Deterministic all-white PNG used for modality-balancing blanks."""
    img = Image.new("RGB", (width, height), (255, 255, 255))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def image_bytes(ref: ImageRef) -> tuple[bytes, str]:
    """Materialize an image ref into (payload bytes, media type)."""
    if ref.kind == "blank":
        return blank_image_bytes(ref.width, ref.height), "image/png"
    if ref.kind == "inline":
        return base64.b64decode(ref.data), ref.media_type
    path = Path(ref.path)
    media = _MEDIA_TYPES.get(path.suffix.lower(), "image/png")
    return path.read_bytes(), media


def image_data_uri(ref: ImageRef) -> str:
    payload, media = image_bytes(ref)
    return f"data:{media};base64,{base64.b64encode(payload).decode('ascii')}"


@dataclass(frozen=True)
class ImageCaptionPair:
    """One target-domain image with its caption; the unit of synthesis."""

    id: str
    image: ImageRef
    caption: str
    domain_tag: str | None = None

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise ValidationError("pair id must be a non-empty string")
        if not isinstance(self.image, ImageRef):
            raise ValidationError("pair image must be an ImageRef")
        if not isinstance(self.caption, str) or not self.caption.strip():
            raise ValidationError("caption must be non-empty after whitespace trim")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "image": self.image.to_dict(), "caption": self.caption}
        if self.domain_tag is not None:
            out["domain_tag"] = self.domain_tag
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ImageCaptionPair":
        _require_keys(raw, "id", "image", "caption")
        return cls(
            id=raw["id"],
            image=ImageRef.from_dict(raw["image"]),
            caption=raw["caption"],
            domain_tag=raw.get("domain_tag"),
        )


@dataclass(frozen=True)
class TaskTriplet:
    """A synthesized task: instruction plus its two response styles."""

    instruction: str
    informative_response: str
    precise_response: str

    def __post_init__(self):
        for name in ("instruction", "informative_response", "precise_response"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise ValidationError(f"triplet {name} must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "instruction": self.instruction,
            "informative_response": self.informative_response,
            "precise_response": self.precise_response,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "TaskTriplet":
        _require_keys(raw, "instruction", "informative_response", "precise_response")
        return cls(raw["instruction"], raw["informative_response"], raw["precise_response"])


@dataclass(frozen=True)
class SeedRecord:
    """Synthesizer-tuning seed: an image-caption pair joined with a task triplet."""

    pair: ImageCaptionPair
    triplet: TaskTriplet
    source_task_name: str | None = None

    def __post_init__(self):
        if not isinstance(self.pair, ImageCaptionPair):
            raise ValidationError("seed pair must be an ImageCaptionPair")
        if not isinstance(self.triplet, TaskTriplet):
            raise ValidationError("seed triplet must be a TaskTriplet")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"pair": self.pair.to_dict(), "triplet": self.triplet.to_dict()}
        if self.source_task_name is not None:
            out["source_task_name"] = self.source_task_name
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "SeedRecord":
        _require_keys(raw, "pair", "triplet")
        return cls(
            pair=ImageCaptionPair.from_dict(raw["pair"]),
            triplet=TaskTriplet.from_dict(raw["triplet"]),
            source_task_name=raw.get("source_task_name"),
        )


@dataclass(frozen=True)
class ChatTurn:
    """One rendered conversation turn. Images attach to user turns only."""

    role: str
    text: str
    image: ImageRef | None = None
    loss_bearing: bool = False

    def __post_init__(self):
        if self.role not in (USER, ASSISTANT):
            raise ValidationError(f"turn role must be {USER!r} or {ASSISTANT!r}, got {self.role!r}")
        if not isinstance(self.text, str):
            raise ValidationError("turn text must be a string")
        if self.image is not None:
            if self.role != USER:
                raise ValidationError("only user turns may carry an image")
            if not isinstance(self.image, ImageRef):
                raise ValidationError("turn image must be an ImageRef")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"role": self.role, "text": self.text, "loss_bearing": self.loss_bearing}
        if self.image is not None:
            out["image"] = self.image.to_dict()
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ChatTurn":
        _require_keys(raw, "role", "text")
        image = raw.get("image")
        return cls(
            role=raw["role"],
            text=raw["text"],
            image=ImageRef.from_dict(image) if image is not None else None,
            loss_bearing=bool(raw.get("loss_bearing", False)),
        )


def _is_char_boundary(raw: bytes, offset: int) -> bool:
    # UTF-8 continuation bytes look like 0b10xxxxxx.
    return offset == len(raw) or (raw[offset] & 0xC0) != 0x80


@dataclass(frozen=True)
class LossMaskedSequence:
    """Rendered conversation text plus the byte spans that bear loss.

    Spans are half-open ``(start, end)`` offsets into the UTF-8 encoding of
    ``rendered_text``, sorted, non-overlapping, and aligned to character
    boundaries.
    """

    rendered_text: str
    mask_spans: tuple[tuple[int, int], ...]
    image_refs: tuple[ImageRef, ...] = ()

    def __post_init__(self):
        if not isinstance(self.rendered_text, str):
            raise ValidationError("rendered_text must be a string")
        object.__setattr__(self, "mask_spans", tuple((int(a), int(b)) for a, b in self.mask_spans))
        object.__setattr__(self, "image_refs", tuple(self.image_refs))
        raw = self.rendered_text.encode("utf-8")
        prev_end = 0
        for start, end in self.mask_spans:
            if not (0 <= start < end <= len(raw)):
                raise ValidationError(f"mask span ({start}, {end}) escapes the rendered text")
            if start < prev_end:
                raise ValidationError("mask spans must be sorted and non-overlapping")
            if not _is_char_boundary(raw, start) or not _is_char_boundary(raw, end):
                raise ValidationError(f"mask span ({start}, {end}) splits a UTF-8 character")
            prev_end = end
        for ref in self.image_refs:
            if not isinstance(ref, ImageRef):
                raise ValidationError("image_refs must hold ImageRef values")

    def rendered_bytes(self) -> bytes:
        return self.rendered_text.encode("utf-8")

    def masked_texts(self) -> list[str]:
        """Decode each loss-bearing span back to text."""
        raw = self.rendered_bytes()
        return [raw[start:end].decode("utf-8") for start, end in self.mask_spans]

    def masked_region_text(self) -> str:
        """Decode the contiguous region from the first span start to the last span end."""
        if not self.mask_spans:
            return ""
        raw = self.rendered_bytes()
        return raw[self.mask_spans[0][0]:self.mask_spans[-1][1]].decode("utf-8")

    def to_dict(self) -> dict[str, Any]:
        return {
            "rendered_text": self.rendered_text,
            "mask_spans": [list(span) for span in self.mask_spans],
            "image_refs": [ref.to_dict() for ref in self.image_refs],
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "LossMaskedSequence":
        _require_keys(raw, "rendered_text", "mask_spans")
        return cls(
            rendered_text=raw["rendered_text"],
            mask_spans=tuple((span[0], span[1]) for span in raw["mask_spans"]),
            image_refs=tuple(ImageRef.from_dict(r) for r in raw.get("image_refs", ())),
        )


@dataclass(frozen=True)
class TrainingExample:
    """A chat-format training example with a provenance tag.

    Turns strictly alternate user/assistant starting with user. The three
    shaped provenances pin their turn counts: caption_only has 2 turns,
    caption_plus_synthetic has 4, synthesizer_tuning has 6.
    """

    turns: tuple[ChatTurn, ...]
    provenance: str
    source_pair_id: str

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        if not self.source_pair_id or not isinstance(self.source_pair_id, str):
            raise ValidationError("source_pair_id must be a non-empty string")
        if not self.turns:
            raise ValidationError("a training example needs at least one turn")
        for i, turn in enumerate(self.turns):
            if not isinstance(turn, ChatTurn):
                raise ValidationError("turns must hold ChatTurn values")
            expected = USER if i % 2 == 0 else ASSISTANT
            if turn.role != expected:
                raise ValidationError(
                    f"turn {i} must be a {expected} turn; turns alternate starting with user"
                )
        expected_count = _FIXED_TURN_COUNTS.get(self.provenance)
        if expected_count is not None and len(self.turns) != expected_count:
            raise ValidationError(
                f"{self.provenance} examples have {expected_count} turns, got {len(self.turns)}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "turns": [turn.to_dict() for turn in self.turns],
            "provenance": self.provenance,
            "source_pair_id": self.source_pair_id,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "TrainingExample":
        _require_keys(raw, "turns", "provenance", "source_pair_id")
        return cls(
            turns=tuple(ChatTurn.from_dict(t) for t in raw["turns"]),
            provenance=raw["provenance"],
            source_pair_id=raw["source_pair_id"],
        )


@dataclass(frozen=True)
class Reject:
    """One skipped input line and the reason it was skipped."""

    line_no: int
    reason: str

    def to_dict(self) -> dict[str, Any]:
        return {"line_no": self.line_no, "reason": self.reason}


def _require_keys(raw: dict[str, Any], *keys: str) -> None:
    if not isinstance(raw, dict):
        raise ValidationError("record must be a JSON object")
    missing = [key for key in keys if key not in raw]
    if missing:
        raise ValidationError(f"record is missing keys: {', '.join(missing)}")


def write_jsonl(records: Iterable[Any], path: str | Path) -> int:
    """Write records (dicts or objects with to_dict) to a JSONL file.

    Returns the number of lines written. Values are encoded with
    ``ensure_ascii=False``; the JSON encoder escapes embedded newlines, so
    every record occupies exactly one line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            raw = record if isinstance(record, dict) else record.to_dict()
            fh.write(json.dumps(raw, ensure_ascii=False))
            fh.write("\n")
            count += 1
    return count


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    """Strictly read a JSONL file our own stages wrote; malformed lines raise."""
    rows: list[dict[str, Any]] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise DataError(f"{path}:{line_no}: expected a JSON object")
            rows.append(row)
    return rows


def load_records(
    path: str | Path,
    from_dict: Callable[[dict[str, Any]], Any],
    limit: int | None = None,
) -> tuple[list[Any], list[Reject]]:
    """Tolerantly read externally produced JSONL.

    Malformed lines become Reject entries instead of aborting the read; the
    optional limit keeps the first N valid records.
    """
    records: list[Any] = []
    rejects: list[Reject] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if limit is not None and len(records) >= limit:
                break
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                rejects.append(Reject(line_no, f"invalid JSON: {exc}"))
                continue
            if not isinstance(raw, dict):
                rejects.append(Reject(line_no, "expected a JSON object"))
                continue
            try:
                records.append(from_dict(raw))
            except ValidationError as exc:
                rejects.append(Reject(line_no, str(exc)))
    return records, rejects


def load_pairs(
    path: str | Path, limit: int | None = None
) -> tuple[list[ImageCaptionPair], list[Reject]]:
    """Load image-caption pairs, skipping malformed lines and duplicate ids.

    Every accepted pair is valid; every skipped line is reported with its line
    number and reason. ``limit`` keeps the first N valid pairs.
    """
    pairs: list[ImageCaptionPair] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if limit is not None and len(pairs) >= limit:
                break
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                rejects.append(Reject(line_no, f"invalid JSON: {exc}"))
                continue
            if not isinstance(raw, dict):
                rejects.append(Reject(line_no, "expected a JSON object"))
                continue
            try:
                pair = ImageCaptionPair.from_dict(raw)
            except ValidationError as exc:
                rejects.append(Reject(line_no, str(exc)))
                continue
            if pair.id in seen:
                rejects.append(Reject(line_no, f"duplicate pair id {pair.id!r}"))
                continue
            seen.add(pair.id)
            pairs.append(pair)
    return pairs, rejects

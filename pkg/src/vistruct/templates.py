"""Chat template description and loss-masked rendering.

The default template renders conversations in the plain text form::

    User: <Image>Describe the image.
    Assistant: a chest x-ray with a small left pleural effusion

One turn per line, role prefixes as control tokens, and a literal image
placeholder where a user turn carries an image. Rendering also computes the
byte spans of loss-bearing turn content.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .corpus import ASSISTANT, USER, ChatTurn, ImageRef, LossMaskedSequence
from .errors import MissingPlaceholderError, TemplateError

# Fixed conversation strings. The synthesizer is tuned on and prompted with
# these exact forms, so they must never drift.
DESCRIBE_IMAGE_PROMPT = "Describe the image."
PRECISE_MARKER = "Answer with a precise response."
INFORMATIVE_MARKER = "Answer with an informative response."


@dataclass(frozen=True)
class ChatTemplate:
    """Control strings that frame conversation turns in rendered text."""

    role_user: str = "User: "
    role_assistant: str = "Assistant: "
    turn_separator: str = "\n"
    image_placeholder: str = "<Image>"
    system_preamble: str | None = None

    def __post_init__(self):
        for name in ("role_user", "role_assistant", "turn_separator", "image_placeholder"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise TemplateError(f"template {name} must be a non-empty string")
        if self.role_user == self.role_assistant:
            raise TemplateError("user and assistant role prefixes must differ")

    def to_dict(self) -> dict[str, Any]:
        return {
            "role_user": self.role_user,
            "role_assistant": self.role_assistant,
            "turn_separator": self.turn_separator,
            "image_placeholder": self.image_placeholder,
            "system_preamble": self.system_preamble,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ChatTemplate":
        if not isinstance(raw, Mapping):
            raise TemplateError("chat template must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {key: raw[key] for key in raw.keys() & known}
        return cls(**kwargs)

    def role_prefix(self, role: str) -> str:
        return self.role_user if role == USER else self.role_assistant


DEFAULT_TEMPLATE = ChatTemplate()


def load_template(path: str | Path) -> ChatTemplate:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TemplateError(f"{path}: invalid JSON: {exc}") from exc
    return ChatTemplate.from_dict(raw)


def render_sequence(
    turns: Sequence[ChatTurn],
    template: ChatTemplate = DEFAULT_TEMPLATE,
    include_control_tokens: bool = False,
) -> LossMaskedSequence:
    """Render turns to text and record the byte spans that bear loss.

    By default a loss-bearing turn contributes the span of its text content
    only; role prefixes, image placeholders, and separators stay unmasked.
    With ``include_control_tokens=True`` each span extends left to the start
    of the turn's role prefix.
    """
    parts: list[str] = []
    spans: list[tuple[int, int]] = []
    images: list[ImageRef] = []
    pos = 0

    def emit(text: str) -> tuple[int, int]:
        nonlocal pos
        start = pos
        if text:
            parts.append(text)
            pos += len(text.encode("utf-8"))
        return start, pos

    first = True
    if template.system_preamble:
        emit(template.system_preamble)
        first = False
    for turn in turns:
        if not first:
            emit(template.turn_separator)
        first = False
        turn_start, _ = emit(template.role_prefix(turn.role))
        if turn.image is not None:
            images.append(turn.image)
            emit(template.image_placeholder)
        text_start, text_end = emit(turn.text)
        if turn.loss_bearing:
            span_start = turn_start if include_control_tokens else text_start
            if text_end > span_start:
                spans.append((span_start, text_end))
    return LossMaskedSequence("".join(parts), tuple(spans), tuple(images))


def render_conversation_text(items: Iterable[Any], template: ChatTemplate = DEFAULT_TEMPLATE) -> str:
    """Render anything turn-shaped (role/text/optional image) to plain text.

    Accepts ChatTurn values or backend chat messages alike, so prompt text and
    training-sequence text produced from the same turns compare byte-for-byte.
    """
    turns = [
        ChatTurn(role=item.role, text=item.text, image=getattr(item, "image", None))
        for item in items
    ]
    return render_sequence(turns, template).rendered_text


_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")


def template_placeholders(template_text: str) -> list[str]:
    """Placeholder names referenced by a prompt template, in order of appearance."""
    seen: list[str] = []
    for match in _PLACEHOLDER_RE.finditer(template_text):
        if match.group(1) not in seen:
            seen.append(match.group(1))
    return seen


def fill_placeholders(template_text: str, values: Mapping[str, str]) -> str:
    """Substitute ``{name}`` placeholders in a single pass.

    Substituted values are never rescanned, so braces inside field values
    cannot inject further substitutions. Unknown placeholders raise.
    """

    def _sub(match: re.Match[str]) -> str:
        name = match.group(1)
        if name not in values:
            raise MissingPlaceholderError(name)
        return values[name]

    return _PLACEHOLDER_RE.sub(_sub, template_text)

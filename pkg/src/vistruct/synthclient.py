"""Prompting a tuned synthesizer and parsing its completions.

The synthesizer saw six-turn conversations during tuning, so at synthesis
time we hand it the first two turns (describe request with the image, then
the caption as the assistant's reply) and it continues with the remaining
four: a precise exchange followed by an informative exchange. Parsing walks
the fixed instruction markers and turn boundaries; anything that deviates is
a typed parse failure carrying the raw text for the audit trail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from .backends import ChatBackend, ChatMessage, ChatRequest, bounded_map
from .corpus import ASSISTANT, USER, ChatTurn, ImageCaptionPair, TaskTriplet
from .errors import (
    EmptyFieldError,
    MalformedTurnError,
    MissingMarkerError,
    TripletParseError,
    ValidationError,
)
from .templates import (
    DEFAULT_TEMPLATE,
    DESCRIBE_IMAGE_PROMPT,
    INFORMATIVE_MARKER,
    PRECISE_MARKER,
    ChatTemplate,
    render_sequence,
)

STATUS_OK = "ok"
STATUS_PARSE_FAILURE = "parse_failure"
STATUS_BACKEND_FAILURE = "backend_failure"

_STATUSES = (STATUS_OK, STATUS_PARSE_FAILURE, STATUS_BACKEND_FAILURE)


@dataclass(frozen=True)
class ParsedCompletion:
    triplet: TaskTriplet
    instruction_mismatch: bool


@dataclass(frozen=True)
class SynthesisOutcome:
    """Result of synthesizing one pair: a triplet or a typed failure.

    Exactly one variant is populated. Parse failures keep the raw completion
    verbatim so failed generations stay auditable.
    """

    pair_id: str
    status: str
    triplet: TaskTriplet | None = None
    reason: str | None = None
    raw_text: str | None = None
    instruction_mismatch: bool = False

    def __post_init__(self):
        if not self.pair_id or not isinstance(self.pair_id, str):
            raise ValidationError("outcome pair_id must be a non-empty string")
        if self.status == STATUS_OK:
            if self.triplet is None or self.reason is not None:
                raise ValidationError("ok outcomes carry a triplet and no reason")
        elif self.status == STATUS_PARSE_FAILURE:
            if self.triplet is not None or not self.reason or self.raw_text is None:
                raise ValidationError("parse failures carry a reason and the raw text")
        elif self.status == STATUS_BACKEND_FAILURE:
            if self.triplet is not None or not self.reason or self.raw_text is not None:
                raise ValidationError("backend failures carry a reason only")
        else:
            raise ValidationError(f"unknown outcome status {self.status!r}")

    @classmethod
    def ok(cls, pair_id: str, triplet: TaskTriplet, instruction_mismatch: bool = False) -> "SynthesisOutcome":
        return cls(pair_id, STATUS_OK, triplet=triplet, instruction_mismatch=instruction_mismatch)

    @classmethod
    def parse_failure(cls, pair_id: str, reason: str, raw_text: str) -> "SynthesisOutcome":
        return cls(pair_id, STATUS_PARSE_FAILURE, reason=reason, raw_text=raw_text)

    @classmethod
    def backend_failure(cls, pair_id: str, reason: str) -> "SynthesisOutcome":
        return cls(pair_id, STATUS_BACKEND_FAILURE, reason=reason)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "status": self.status,
            "triplet": self.triplet.to_dict() if self.triplet else None,
            "reason": self.reason,
            "raw_text": self.raw_text,
            "instruction_mismatch": self.instruction_mismatch,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "SynthesisOutcome":
        triplet = raw.get("triplet")
        return cls(
            pair_id=raw["pair_id"],
            status=raw["status"],
            triplet=TaskTriplet.from_dict(triplet) if triplet else None,
            reason=raw.get("reason"),
            raw_text=raw.get("raw_text"),
            instruction_mismatch=bool(raw.get("instruction_mismatch", False)),
        )


def build_synthesis_prompt(
    pair: ImageCaptionPair,
    template: ChatTemplate = DEFAULT_TEMPLATE,
    *,
    max_new_tokens: int = 1024,
    temperature: float = 0.0,
) -> ChatRequest:
    """Prompt whose last completed turn is the caption, ready to continue.

    The request itself is structured (the backend applies its own wire
    format); ``template`` governs how these two turns render to text, which
    is byte-identical to the first two turns of the tuning conversation.
    """
    del template  # structure only; rendering happens at the text boundary
    return ChatRequest(
        messages=(
            ChatMessage(USER, DESCRIBE_IMAGE_PROMPT, image=pair.image),
            ChatMessage(ASSISTANT, pair.caption),
        ),
        max_new_tokens=max_new_tokens,
        temperature=temperature,
    )


def render_completion(triplet: TaskTriplet, template: ChatTemplate = DEFAULT_TEMPLATE) -> str:
    """Render the four turns a well-behaved synthesizer emits for a triplet."""
    turns = (
        ChatTurn(USER, f"{PRECISE_MARKER} {triplet.instruction}"),
        ChatTurn(ASSISTANT, triplet.precise_response),
        ChatTurn(USER, f"{INFORMATIVE_MARKER} {triplet.instruction}"),
        ChatTurn(ASSISTANT, triplet.informative_response),
    )
    return render_sequence(turns, template).rendered_text


def parse_completion(raw: str, template: ChatTemplate = DEFAULT_TEMPLATE) -> ParsedCompletion:
    """Parse a synthesizer completion into a task triplet.

    Walks the precise marker, the assistant reply, the informative marker,
    and the closing assistant reply, using the template's separator plus role
    prefixes as turn boundaries. Strict: a missing marker, a missing
    boundary, or an empty field raises instead of guessing. When the two
    instruction occurrences disagree, the precise turn's copy wins and the
    result is flagged.
    """
    assistant_boundary = template.turn_separator + template.role_assistant
    user_boundary = template.turn_separator + template.role_user

    precise_at = raw.find(PRECISE_MARKER)
    if precise_at < 0:
        raise MissingMarkerError("precise")
    after_marker = precise_at + len(PRECISE_MARKER)

    reply_boundary = raw.find(assistant_boundary, after_marker)
    if reply_boundary < 0:
        raise MalformedTurnError("no assistant turn follows the precise instruction")
    instruction = _strip_marker_gap(raw[after_marker:reply_boundary])
    if not instruction.strip():
        raise EmptyFieldError("instruction")
    precise_start = reply_boundary + len(assistant_boundary)

    informative_at = raw.find(INFORMATIVE_MARKER, precise_start)
    if informative_at < 0:
        raise MissingMarkerError("informative")
    turn_break = raw.rfind(user_boundary, precise_start, informative_at)
    if turn_break < 0:
        raise MalformedTurnError("informative instruction does not open a user turn")
    precise_response = raw[precise_start:turn_break]
    if not precise_response.strip():
        raise EmptyFieldError("precise_response")

    after_marker = informative_at + len(INFORMATIVE_MARKER)
    reply_boundary = raw.find(assistant_boundary, after_marker)
    if reply_boundary < 0:
        raise MalformedTurnError("no assistant turn follows the informative instruction")
    second_instruction = _strip_marker_gap(raw[after_marker:reply_boundary])
    informative_response = raw[reply_boundary + len(assistant_boundary):]
    # Anything after a further user turn is the model running on; drop it.
    overrun = informative_response.find(user_boundary)
    if overrun >= 0:
        informative_response = informative_response[:overrun]
    if not informative_response.strip():
        raise EmptyFieldError("informative_response")

    mismatch = second_instruction != instruction
    triplet = TaskTriplet(
        instruction=instruction,
        informative_response=informative_response,
        precise_response=precise_response,
    )
    return ParsedCompletion(triplet=triplet, instruction_mismatch=mismatch)


def _strip_marker_gap(text: str) -> str:
    # The marker and the instruction are joined by one space when rendered.
    return text[1:] if text.startswith(" ") else text


def parse_task_triplet(raw: str, template: ChatTemplate = DEFAULT_TEMPLATE) -> TaskTriplet:
    return parse_completion(raw, template).triplet


def synthesize_batch(
    pairs: Sequence[ImageCaptionPair],
    backend: ChatBackend,
    max_in_flight: int = 1,
    template: ChatTemplate = DEFAULT_TEMPLATE,
) -> list[SynthesisOutcome]:
    """Synthesize one outcome per pair, in input order.

    Individual failures never abort the batch: backend exceptions and parse
    errors become failure outcomes. Results are index-aligned with the input
    regardless of max_in_flight.
    """

    def one(pair: ImageCaptionPair) -> SynthesisOutcome:
        request = build_synthesis_prompt(pair, template)
        try:
            raw = backend.complete(request)
        except Exception as exc:
            return SynthesisOutcome.backend_failure(pair.id, f"{type(exc).__name__}: {exc}")
        try:
            parsed = parse_completion(raw, template)
        except TripletParseError as exc:
            return SynthesisOutcome.parse_failure(pair.id, str(exc), raw)
        return SynthesisOutcome.ok(pair.id, parsed.triplet, parsed.instruction_mismatch)

    return bounded_map(one, pairs, max_in_flight)


def synthesis_stats(outcomes: Sequence[SynthesisOutcome]) -> dict[str, Any]:
    ok = sum(1 for o in outcomes if o.status == STATUS_OK)
    parse_failures = sum(1 for o in outcomes if o.status == STATUS_PARSE_FAILURE)
    backend_failures = sum(1 for o in outcomes if o.status == STATUS_BACKEND_FAILURE)
    mismatches = sum(1 for o in outcomes if o.instruction_mismatch)
    total = len(outcomes)
    return {
        "total": total,
        "ok": ok,
        "parse_failures": parse_failures,
        "backend_failures": backend_failures,
        "instruction_mismatches": mismatches,
        "parse_failure_rate": parse_failures / total if total else 0.0,
    }

"""Consistency filtering and chain-of-thought assembly.

A judge model reads each synthesized triplet and labels the relation between
its two responses: consistent (the precise answer agrees with the informative
explanation), inconsistent (they disagree), or open (the instruction does not
pin down a single answer). Only consistent triplets survive. Surviving
triplets become chain-of-thought tasks whose response reasons first
(informative) and concludes second (precise), joined by a fixed connective.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Sequence

from .backends import ChatBackend, ChatMessage, ChatRequest, bounded_map
from .corpus import USER, TaskTriplet
from .errors import AmbiguousLabelError, NoLabelFoundError, ValidationError
from .templates import fill_placeholders

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
OPEN = "open"

LABELS = (CONSISTENT, INCONSISTENT, OPEN)

DEFAULT_JUDGE_PROMPT = """\
You are reviewing a visual-instruction task written for an image. The task \
has one instruction and two answers: a precise response (short and direct) \
and an informative response (longer and explanatory).

Instruction: {instruction}
Precise response: {precise}
Informative response: {informative}

Classify the pair of responses:
- consistent: the precise response states the same answer that the \
informative response supports or explains.
- inconsistent: the two responses disagree about the answer.
- open: the instruction allows many valid answers, so agreement between the \
two responses cannot be judged.

Answer on the final line with exactly one word: consistent, inconsistent, or \
open."""

DEFAULT_COT_CONNECTIVE = "\n\nTherefore, the answer is: "


@dataclass(frozen=True)
class FilterStats:
    """Label counts for one filtering run plus the retention rate."""

    total: int
    consistent: int
    inconsistent: int
    open: int
    judge_failures: int
    retention_rate: float

    def __post_init__(self):
        parts = self.consistent + self.inconsistent + self.open + self.judge_failures
        if parts != self.total:
            raise ValidationError(f"label counts sum to {parts}, total says {self.total}")
        expected = self.consistent / self.total if self.total else 0.0
        if self.retention_rate != expected:
            raise ValidationError("retention_rate must equal consistent / total")

    @classmethod
    def from_counts(cls, consistent: int, inconsistent: int, open: int, judge_failures: int) -> "FilterStats":
        total = consistent + inconsistent + open + judge_failures
        return cls(
            total=total,
            consistent=consistent,
            inconsistent=inconsistent,
            open=open,
            judge_failures=judge_failures,
            retention_rate=consistent / total if total else 0.0,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "consistent": self.consistent,
            "inconsistent": self.inconsistent,
            "open": self.open,
            "judge_failures": self.judge_failures,
            "retention_rate": self.retention_rate,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "FilterStats":
        return cls(
            total=raw["total"],
            consistent=raw["consistent"],
            inconsistent=raw["inconsistent"],
            open=raw["open"],
            judge_failures=raw["judge_failures"],
            retention_rate=raw["retention_rate"],
        )


@dataclass(frozen=True)
class JudgeOutcome:
    """One judged triplet: a label, or the reason judging failed."""

    label: str | None = None
    failure: str | None = None

    def __post_init__(self):
        if (self.label is None) == (self.failure is None):
            raise ValidationError("exactly one of label/failure must be set")
        if self.label is not None and self.label not in LABELS:
            raise ValidationError(f"unknown label {self.label!r}")


@dataclass(frozen=True)
class CotTask:
    """A training task whose response reasons first and concludes second."""

    instruction: str
    response: str
    source_triplet: TaskTriplet

    def __post_init__(self):
        if not self.instruction or not isinstance(self.instruction, str):
            raise ValidationError("cot task instruction must be non-empty")
        if not isinstance(self.source_triplet, TaskTriplet):
            raise ValidationError("source_triplet must be a TaskTriplet")
        informative_at = self.response.find(self.source_triplet.informative_response)
        if informative_at < 0:
            raise ValidationError("cot response must contain the informative response verbatim")
        tail = informative_at + len(self.source_triplet.informative_response)
        if self.response.find(self.source_triplet.precise_response, tail) < 0:
            raise ValidationError("cot response must contain the precise response after the informative one")

    def to_dict(self) -> dict[str, Any]:
        return {
            "instruction": self.instruction,
            "response": self.response,
            "source_triplet": self.source_triplet.to_dict(),
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "CotTask":
        return cls(
            instruction=raw["instruction"],
            response=raw["response"],
            source_triplet=TaskTriplet.from_dict(raw["source_triplet"]),
        )


def build_consistency_prompt(triplet: TaskTriplet, prompt_template: str = DEFAULT_JUDGE_PROMPT) -> str:
    """Fill the judge prompt with all three triplet fields."""
    return fill_placeholders(
        prompt_template,
        {
            "instruction": triplet.instruction,
            "precise": triplet.precise_response,
            "informative": triplet.informative_response,
        },
    )


_LABEL_RE = re.compile(r"\b(consistent|inconsistent|open)\b")


def parse_consistency_label(raw: str) -> str:
    """Read the judge's label from the final non-empty line of its reply.

    Case-insensitive, word-boundary matching, so "inconsistent" never counts
    as "consistent". More than one distinct label on that line is ambiguous;
    repeating a single label is fine.
    """
    lines = [line for line in raw.splitlines() if line.strip()]
    if not lines:
        raise NoLabelFoundError("judge reply is empty")
    found = _LABEL_RE.findall(lines[-1].lower())
    if not found:
        raise NoLabelFoundError(f"no label on the final line: {lines[-1]!r}")
    if len(set(found)) > 1:
        raise AmbiguousLabelError(f"multiple labels on the final line: {lines[-1]!r}")
    return found[0]


def judge_request(triplet: TaskTriplet, prompt_template: str = DEFAULT_JUDGE_PROMPT) -> ChatRequest:
    prompt = build_consistency_prompt(triplet, prompt_template)
    return ChatRequest(messages=(ChatMessage(USER, prompt),), max_new_tokens=64, temperature=0.0)


def judge_triplets(
    triplets: Sequence[TaskTriplet],
    judge: ChatBackend,
    max_in_flight: int = 1,
    prompt_template: str = DEFAULT_JUDGE_PROMPT,
) -> list[JudgeOutcome]:
    """Label every triplet, index-aligned with the input.

    Backend exceptions and unparsable replies become failure outcomes rather
    than aborting the batch.
    """

    def one(triplet: TaskTriplet) -> JudgeOutcome:
        try:
            raw = judge.complete(judge_request(triplet, prompt_template))
        except Exception as exc:
            return JudgeOutcome(failure=f"backend: {type(exc).__name__}: {exc}")
        try:
            return JudgeOutcome(label=parse_consistency_label(raw))
        except (NoLabelFoundError, AmbiguousLabelError) as exc:
            return JudgeOutcome(failure=f"label: {exc}")

    return bounded_map(one, triplets, max_in_flight)


def filter_triplets(
    triplets: Sequence[TaskTriplet],
    judge: ChatBackend,
    max_in_flight: int = 1,
    prompt_template: str = DEFAULT_JUDGE_PROMPT,
) -> tuple[list[TaskTriplet], FilterStats]:
    """Keep only the triplets the judge labels consistent, preserving order."""
    outcomes = judge_triplets(triplets, judge, max_in_flight, prompt_template)
    kept = [t for t, o in zip(triplets, outcomes) if o.label == CONSISTENT]
    stats = FilterStats.from_counts(
        consistent=sum(1 for o in outcomes if o.label == CONSISTENT),
        inconsistent=sum(1 for o in outcomes if o.label == INCONSISTENT),
        open=sum(1 for o in outcomes if o.label == OPEN),
        judge_failures=sum(1 for o in outcomes if o.failure is not None),
    )
    return kept, stats


def assemble_cot(triplet: TaskTriplet, connective: str = DEFAULT_COT_CONNECTIVE) -> CotTask:
    """Join the two responses into one reasoning-then-conclusion response.

    Callers should only pass triplets that survived the consistency filter;
    assembly itself does not re-judge.
    """
    return CotTask(
        instruction=triplet.instruction,
        response=f"{triplet.informative_response}{connective}{triplet.precise_response}",
        source_triplet=triplet,
    )


def split_cot_response(response: str, connective: str = DEFAULT_COT_CONNECTIVE) -> tuple[str, str]:
    """Invert assemble_cot at the first occurrence of the connective."""
    informative, sep, precise = response.partition(connective)
    if not sep:
        raise ValidationError("response does not contain the connective")
    return informative, precise


def format_filter_stats(stats: FilterStats) -> str:
    rows = [
        ("total", stats.total),
        ("consistent", stats.consistent),
        ("inconsistent", stats.inconsistent),
        ("open", stats.open),
        ("judge failures", stats.judge_failures),
    ]
    width = max(len(name) for name, _ in rows)
    lines = [f"{name:<{width}}  {value:>6}" for name, value in rows]
    lines.append(f"{'retention':<{width}}  {stats.retention_rate * 100:>5.1f}%")
    return "\n".join(lines)

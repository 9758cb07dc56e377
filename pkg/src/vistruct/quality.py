"""Quality scoring over human annotations of synthesized data.

Two annotation shapes feed these reports. QualityAnnotation grades one
sampled task on a fixed task-type taxonomy plus three 1-5 scales (required
knowledge, complexity, accuracy). ResponseAnnotation records agreement
judgments about one task's responses, which is what the pre/post filter
comparison aggregates.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .corpus import Reject, load_records
from .errors import EmptyAnnotationsError, ValidationError

TASK_TYPES = (
    "Domain Classification",
    "Object Recognition",
    "Pose and Activity Recognition",
    "Logo Detection",
    "Face and Expression Classification",
    "Scene Classification",
    "Sentiment Analysis",
    "Caption Generation",
    "Text Detection and OCR",
    "Image-Text Matching",
    "Anomaly Detection",
    "Style Classification",
    "Attribute and Context Recognition",
    "Task-Oriented Image Recognition",
    "Step-by-Step Guidance",
    "Data Representation and Visualization",
    "Utility and Affordance Recognition",
    "Visual Grounding",
    "Segmentation",
    "Visual Storytelling",
)

LIKERT_MIN = 1
LIKERT_MAX = 5


def _check_likert(name: str, value: Any) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not LIKERT_MIN <= value <= LIKERT_MAX:
        raise ValidationError(f"{name} must be an integer in [{LIKERT_MIN}, {LIKERT_MAX}]")


@dataclass(frozen=True)
class QualityAnnotation:
    """One sampled task graded by a human: type plus three 1-5 scales."""

    sample_id: str
    task_type: str
    knowledge: int
    complexity: int
    accuracy: int

    def __post_init__(self):
        if not self.sample_id or not isinstance(self.sample_id, str):
            raise ValidationError("sample_id must be a non-empty string")
        if self.task_type not in TASK_TYPES:
            raise ValidationError(f"unknown task type {self.task_type!r}")
        _check_likert("knowledge", self.knowledge)
        _check_likert("complexity", self.complexity)
        _check_likert("accuracy", self.accuracy)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "task_type": self.task_type,
            "knowledge": self.knowledge,
            "complexity": self.complexity,
            "accuracy": self.accuracy,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "QualityAnnotation":
        for key in ("sample_id", "task_type", "knowledge", "complexity", "accuracy"):
            if key not in raw:
                raise ValidationError(f"annotation is missing {key!r}")
        return cls(
            sample_id=raw["sample_id"],
            task_type=raw["task_type"],
            knowledge=raw["knowledge"],
            complexity=raw["complexity"],
            accuracy=raw["accuracy"],
        )


@dataclass(frozen=True)
class ResponseAnnotation:
    """Agreement judgments about one task's responses.

    ``combined_correct`` grades the assembled reasoning-then-conclusion
    response and may be absent for tasks annotated before assembly.
    """

    sample_id: str
    consistent: bool
    precise_correct: bool
    informative_correct: bool
    combined_correct: bool | None = None

    def __post_init__(self):
        if not self.sample_id or not isinstance(self.sample_id, str):
            raise ValidationError("sample_id must be a non-empty string")
        for name in ("consistent", "precise_correct", "informative_correct"):
            if not isinstance(getattr(self, name), bool):
                raise ValidationError(f"{name} must be a boolean")
        if self.combined_correct is not None and not isinstance(self.combined_correct, bool):
            raise ValidationError("combined_correct must be a boolean when present")

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "consistent": self.consistent,
            "precise_correct": self.precise_correct,
            "informative_correct": self.informative_correct,
            "combined_correct": self.combined_correct,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ResponseAnnotation":
        for key in ("sample_id", "consistent", "precise_correct", "informative_correct"):
            if key not in raw:
                raise ValidationError(f"annotation is missing {key!r}")
        return cls(
            sample_id=raw["sample_id"],
            consistent=raw["consistent"],
            precise_correct=raw["precise_correct"],
            informative_correct=raw["informative_correct"],
            combined_correct=raw.get("combined_correct"),
        )


def load_quality_annotations(path: str | Path, limit: int | None = None) -> tuple[list[QualityAnnotation], list[Reject]]:
    return load_records(path, QualityAnnotation.from_dict, limit)


def load_response_annotations(path: str | Path, limit: int | None = None) -> tuple[list[ResponseAnnotation], list[Reject]]:
    return load_records(path, ResponseAnnotation.from_dict, limit)


def diversity_score(annotations: Sequence[QualityAnnotation]) -> float:
    """Share of the taxonomy covered, as a 0-100 score."""
    if not annotations:
        raise EmptyAnnotationsError("diversity needs at least one annotation")
    distinct = {annotation.task_type for annotation in annotations}
    return 100.0 * len(distinct) / len(TASK_TYPES)


def rescale_likert(scores: Sequence[int]) -> float:
    """Affine map of a mean 1-5 score onto 0-100 (1 -> 0, 5 -> 100)."""
    if not scores:
        raise EmptyAnnotationsError("rescale needs at least one score")
    for score in scores:
        _check_likert("score", score)
    mean = sum(scores) / len(scores)
    return 100.0 * (mean - LIKERT_MIN) / (LIKERT_MAX - LIKERT_MIN)


@dataclass(frozen=True)
class QualitySummary:
    diversity: float
    knowledge: float
    complexity: float
    accuracy: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "diversity": self.diversity,
            "knowledge": self.knowledge,
            "complexity": self.complexity,
            "accuracy": self.accuracy,
        }


def summarize_quality(annotations: Sequence[QualityAnnotation]) -> QualitySummary:
    """The four 0-100 quality numbers for one annotated sample set."""
    return QualitySummary(
        diversity=diversity_score(annotations),
        knowledge=rescale_likert([a.knowledge for a in annotations]),
        complexity=rescale_likert([a.complexity for a in annotations]),
        accuracy=rescale_likert([a.accuracy for a in annotations]),
    )


def task_type_distribution(annotations: Sequence[QualityAnnotation]) -> dict[str, int]:
    """Count per taxonomy category, every category present, taxonomy order."""
    if not annotations:
        raise EmptyAnnotationsError("distribution needs at least one annotation")
    counts = {category: 0 for category in TASK_TYPES}
    for annotation in annotations:
        counts[annotation.task_type] += 1
    return counts


@dataclass(frozen=True)
class FilterQualityReport:
    """Pre/post filter response quality, each side on its own denominator."""

    pre_n: int
    post_n: int
    pre_consistency: float
    pre_precise_accuracy: float
    pre_informative_accuracy: float
    post_consistency: float
    post_accuracy: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "pre_n": self.pre_n,
            "post_n": self.post_n,
            "pre_consistency": self.pre_consistency,
            "pre_precise_accuracy": self.pre_precise_accuracy,
            "pre_informative_accuracy": self.pre_informative_accuracy,
            "post_consistency": self.post_consistency,
            "post_accuracy": self.post_accuracy,
        }


def _percent(hits: int, total: int) -> float:
    return 100.0 * hits / total if total else 0.0


def filter_quality_report(
    pre: Sequence[ResponseAnnotation],
    post: Sequence[ResponseAnnotation],
) -> FilterQualityReport:
    """Aggregate response annotations taken before and after filtering.

    Pre-filter rows report consistency plus per-response accuracy; post-filter
    rows report consistency plus the accuracy of the assembled response
    (averaged over rows that grade it).
    """
    if not pre or not post:
        raise EmptyAnnotationsError("both annotation sets must be non-empty")
    combined = [a for a in post if a.combined_correct is not None]
    return FilterQualityReport(
        pre_n=len(pre),
        post_n=len(post),
        pre_consistency=_percent(sum(a.consistent for a in pre), len(pre)),
        pre_precise_accuracy=_percent(sum(a.precise_correct for a in pre), len(pre)),
        pre_informative_accuracy=_percent(sum(a.informative_correct for a in pre), len(pre)),
        post_consistency=_percent(sum(a.consistent for a in post), len(post)),
        post_accuracy=_percent(sum(bool(a.combined_correct) for a in combined), len(combined)),
    )


def format_filter_quality(report: FilterQualityReport) -> str:
    lines = [
        f"before filter (n={report.pre_n})",
        f"  consistency       {report.pre_consistency:5.1f}",
        f"  precise accuracy  {report.pre_precise_accuracy:5.1f}",
        f"  informative acc.  {report.pre_informative_accuracy:5.1f}",
        f"after filter (n={report.post_n})",
        f"  consistency       {report.post_consistency:5.1f}",
        f"  accuracy          {report.post_accuracy:5.1f}",
    ]
    return "\n".join(lines)


def format_quality_summary(summary: QualitySummary) -> str:
    lines = [
        f"diversity   {summary.diversity:5.1f}",
        f"knowledge   {summary.knowledge:5.1f}",
        f"complexity  {summary.complexity:5.1f}",
        f"accuracy    {summary.accuracy:5.1f}",
    ]
    return "\n".join(lines)


def format_task_type_distribution(counts: Mapping[str, int]) -> str:
    width = max(len(name) for name in counts)
    return "\n".join(f"{name:<{width}}  {counts[name]:>5}" for name in counts)

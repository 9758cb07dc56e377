"""Zero-shot evaluation: prompt rendering, scoring, and task registry.

Each evaluation task pairs a fixed prompt template with one of five scoring
rules. Prediction text is never trusted to be clean: scoring normalizes
(lowercase, punctuation stripped) and applies deterministic extraction rules,
and any ambiguity scores zero rather than guessing.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .backends import ChatBackend, ChatMessage, ChatRequest, bounded_map
from .corpus import USER, ImageRef, Reject, load_records
from .errors import ConfigError, MissingPlaceholderError, ValidationError
from .templates import fill_placeholders, template_placeholders

METRIC_TOKEN_RECALL = "token_recall"
METRIC_CLOSED_ACCURACY = "closed_accuracy"
METRIC_CHOICE_ACCURACY = "choice_accuracy"
METRIC_ROUGE_L = "rouge_l"
METRIC_MULTILABEL_F1 = "multilabel_f1"

METRICS = (
    METRIC_TOKEN_RECALL,
    METRIC_CLOSED_ACCURACY,
    METRIC_CHOICE_ACCURACY,
    METRIC_ROUGE_L,
    METRIC_MULTILABEL_F1,
)

OPTIONS_STYLE_COMMA = "comma"
OPTIONS_STYLE_LETTERS = "letters"


@dataclass(frozen=True)
class EvalTaskSpec:
    """A named task: prompt template, scoring metric, option handling."""

    name: str
    template: str
    metric: str
    options_field: str | None = None
    options_style: str = OPTIONS_STYLE_COMMA

    def __post_init__(self):
        if not self.name:
            raise ValidationError("task name must be non-empty")
        if not self.template:
            raise ValidationError("task template must be non-empty")
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric {self.metric!r}")
        if self.options_style not in (OPTIONS_STYLE_COMMA, OPTIONS_STYLE_LETTERS):
            raise ValidationError(f"unknown options style {self.options_style!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "template": self.template,
            "metric": self.metric,
            "options_field": self.options_field,
            "options_style": self.options_style,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "EvalTaskSpec":
        return cls(
            name=raw["name"],
            template=raw["template"],
            metric=raw["metric"],
            options_field=raw.get("options_field"),
            options_style=raw.get("options_style", OPTIONS_STYLE_COMMA),
        )


@dataclass(frozen=True)
class EvalInstance:
    """One evaluation item: image, template fields, gold answer, options."""

    id: str
    image: ImageRef
    gold: str | tuple[str, ...]
    fields: Mapping[str, str] = field(default_factory=dict)
    options: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise ValidationError("instance id must be a non-empty string")
        if not isinstance(self.image, ImageRef):
            raise ValidationError("instance image must be an ImageRef")
        fields = dict(self.fields) if self.fields else {}
        for key, value in fields.items():
            if not isinstance(value, str):
                raise ValidationError(f"instance field {key!r} must be a string")
        object.__setattr__(self, "fields", fields)
        if isinstance(self.gold, str):
            if not self.gold.strip():
                raise ValidationError("gold answer must be non-empty")
        elif isinstance(self.gold, (list, tuple)):
            gold = tuple(self.gold)
            if not gold or any(not isinstance(g, str) or not g.strip() for g in gold):
                raise ValidationError("gold label list must hold non-empty strings")
            object.__setattr__(self, "gold", gold)
        else:
            raise ValidationError("gold must be a string or a list of strings")
        if self.options is not None:
            options = tuple(self.options)
            if not options or any(not isinstance(o, str) or not o.strip() for o in options):
                raise ValidationError("options must be non-empty strings")
            object.__setattr__(self, "options", options)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "image": self.image.to_dict(),
            "gold": list(self.gold) if isinstance(self.gold, tuple) else self.gold,
        }
        if self.fields:
            out["fields"] = dict(self.fields)
        if self.options is not None:
            out["options"] = list(self.options)
        return out

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "EvalInstance":
        for key in ("id", "image", "gold"):
            if key not in raw:
                raise ValidationError(f"instance is missing {key!r}")
        gold = raw["gold"]
        if isinstance(gold, list):
            gold = tuple(gold)
        options = raw.get("options")
        return cls(
            id=raw["id"],
            image=ImageRef.from_dict(raw["image"]),
            gold=gold,
            fields=raw.get("fields") or {},
            options=tuple(options) if options is not None else None,
        )


def load_instances(path: str | Path, limit: int | None = None) -> tuple[list[EvalInstance], list[Reject]]:
    return load_records(path, EvalInstance.from_dict, limit)


def format_options(options: Sequence[str], style: str = OPTIONS_STYLE_COMMA) -> str:
    """Render an option list for prompting: comma-joined, or lettered lines."""
    if style == OPTIONS_STYLE_LETTERS:
        return "\n".join(f"{string.ascii_uppercase[i]}. {opt}" for i, opt in enumerate(options))
    return ", ".join(options)


def render_eval_prompt(
    spec: EvalTaskSpec,
    instance: EvalInstance,
    *,
    max_new_tokens: int = 256,
    temperature: float = 0.0,
) -> ChatRequest:
    """Fill the task template from the instance and wrap it with the image.

    Placeholders resolve from instance fields; the spec's options_field (if
    the template uses it) resolves from the instance's option list. Anything
    unresolved raises MissingPlaceholderError.
    """
    values = dict(instance.fields)
    needed = template_placeholders(spec.template)
    if spec.options_field and spec.options_field in needed:
        if instance.options is None:
            raise MissingPlaceholderError(spec.options_field)
        values[spec.options_field] = format_options(instance.options, spec.options_style)
    prompt = fill_placeholders(spec.template, values)
    return ChatRequest(
        messages=(ChatMessage(USER, prompt, image=instance.image),),
        max_new_tokens=max_new_tokens,
        temperature=temperature,
    )


# ---------------------------------------------------------------------------
# scoring

_PUNCT_RE = re.compile(r"[^\w\s]")


def normalize_answer_tokens(text: str) -> list[str]:
    """Lowercase, strip punctuation to spaces, split on whitespace."""
    return _PUNCT_RE.sub(" ", text.lower()).split()


def _phrase(text: str) -> str:
    return " ".join(normalize_answer_tokens(text))


def _phrase_in(needle: str, haystack: str) -> bool:
    # Space padding keeps matches aligned to token boundaries.
    return f" {needle} " in f" {haystack} "


def score_token_recall(prediction: str, gold: str) -> float:
    """|unique gold tokens covered| / |unique gold tokens|."""
    gold_tokens = set(normalize_answer_tokens(gold))
    if not gold_tokens:
        raise ValidationError("gold answer has no tokens after normalization")
    pred_tokens = set(normalize_answer_tokens(prediction))
    return len(gold_tokens & pred_tokens) / len(gold_tokens)


def score_closed_accuracy(prediction: str, gold: str) -> float:
    """Match the first standalone yes/no in the prediction against gold."""
    gold_norm = gold.strip().lower()
    if gold_norm not in ("yes", "no"):
        raise ValidationError(f"closed-question gold must be yes or no, got {gold!r}")
    for token in normalize_answer_tokens(prediction):
        if token in ("yes", "no"):
            return 1.0 if token == gold_norm else 0.0
    return 0.0


def score_choice_accuracy(prediction: str, options: Sequence[str], gold: str) -> float:
    """Credit a unique option pick, by letter or by option text.

    The prediction matches an option if it contains the option's text (token
    aligned, case and punctuation folded) or names its letter as a standalone
    capital (or the whole normalized reply is that letter). Exactly one
    distinct matched option scores; zero or several score 0.
    """
    options = list(options)
    if gold not in options:
        raise ValidationError("gold answer must be one of the options")
    matched: set[int] = set()

    pred_phrase = _phrase(prediction)
    for index, option in enumerate(options):
        option_phrase = _phrase(option)
        if option_phrase and _phrase_in(option_phrase, pred_phrase):
            matched.add(index)

    if len(options) <= len(string.ascii_uppercase):
        letters = {string.ascii_uppercase[i]: i for i in range(len(options))}
        for token in re.findall(r"\b([A-Za-z])\b", prediction):
            if token in letters:
                matched.add(letters[token])
        if len(pred_phrase) == 1 and pred_phrase.upper() in letters:
            matched.add(letters[pred_phrase.upper()])

    if len(matched) != 1:
        return 0.0
    return 1.0 if options[matched.pop()] == gold else 0.0


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def score_rouge_l(prediction: str, gold: str) -> float:
    """LCS-based F measure over word tokens: F = 2PR / (P + R)."""
    pred_tokens = normalize_answer_tokens(prediction)
    gold_tokens = normalize_answer_tokens(gold)
    if not pred_tokens or not gold_tokens:
        return 0.0
    lcs = _lcs_length(pred_tokens, gold_tokens)
    if lcs == 0:
        return 0.0
    precision = lcs / len(pred_tokens)
    recall = lcs / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


_BRACKET_RE = re.compile(r"\[(.*?)\]", re.DOTALL)


def score_multilabel_f1(prediction: str, gold_labels: Sequence[str], universe: Sequence[str]) -> float:
    """Set F1 between predicted and gold labels: 2|P & G| / (|P| + |G|).

    Predicted labels come from the first bracketed, comma-separated list in
    the reply, keeping entries that name a universe label. If that yields
    nothing, the universe is scanned for token-aligned mentions instead.
    """
    by_phrase = {}
    for label in universe:
        key = _phrase(label)
        if not key:
            raise ValidationError(f"universe label {label!r} has no tokens")
        by_phrase[key] = label
    gold_set = set()
    for label in gold_labels:
        key = _phrase(label)
        if key not in by_phrase:
            raise ValidationError(f"gold label {label!r} is not in the universe")
        gold_set.add(key)
    if not gold_set:
        raise ValidationError("gold label list is empty")

    predicted: set[str] = set()
    match = _BRACKET_RE.search(prediction)
    if match:
        for entry in match.group(1).split(","):
            key = _phrase(entry)
            if key in by_phrase:
                predicted.add(key)
    if not predicted:
        pred_phrase = _phrase(prediction)
        predicted = {key for key in by_phrase if _phrase_in(key, pred_phrase)}

    denominator = len(predicted) + len(gold_set)
    if denominator == 0:
        return 0.0
    return 2 * len(predicted & gold_set) / denominator


def score_prediction(spec: EvalTaskSpec, instance: EvalInstance, prediction: str) -> float:
    """Dispatch to the task's metric; result is in [0, 1]."""
    if spec.metric == METRIC_TOKEN_RECALL:
        return score_token_recall(prediction, _gold_str(instance))
    if spec.metric == METRIC_CLOSED_ACCURACY:
        return score_closed_accuracy(prediction, _gold_str(instance))
    if spec.metric == METRIC_CHOICE_ACCURACY:
        return score_choice_accuracy(prediction, _options_of(instance), _gold_str(instance))
    if spec.metric == METRIC_ROUGE_L:
        return score_rouge_l(prediction, _gold_str(instance))
    return score_multilabel_f1(prediction, _gold_list(instance), _options_of(instance))


def _gold_str(instance: EvalInstance) -> str:
    if not isinstance(instance.gold, str):
        raise ValidationError(f"instance {instance.id!r} needs a string gold answer")
    return instance.gold


def _gold_list(instance: EvalInstance) -> tuple[str, ...]:
    if isinstance(instance.gold, str):
        return (instance.gold,)
    return instance.gold


def _options_of(instance: EvalInstance) -> tuple[str, ...]:
    if instance.options is None:
        raise ValidationError(f"instance {instance.id!r} needs an options list for this metric")
    return instance.options


# ---------------------------------------------------------------------------
# running

@dataclass(frozen=True)
class PerInstanceScore:
    id: str
    score: float
    failed: bool = False

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError("per-instance scores live in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "score": self.score, "failed": self.failed}


@dataclass(frozen=True)
class ScoreReport:
    """Aggregate for one task: mean of per-instance scores, on a 0-100 scale."""

    task_name: str
    n: int
    mean_score: float
    per_instance: tuple[PerInstanceScore, ...]
    failures: int = 0

    def __post_init__(self):
        object.__setattr__(self, "per_instance", tuple(self.per_instance))
        if self.n != len(self.per_instance):
            raise ValidationError("n must equal the per-instance count")
        expected = (
            100.0 * sum(item.score for item in self.per_instance) / self.n if self.n else 0.0
        )
        if abs(self.mean_score - expected) > 1e-9:
            raise ValidationError("mean_score must be 100 x the per-instance mean")

    @classmethod
    def from_scores(cls, task_name: str, per_instance: Sequence[PerInstanceScore]) -> "ScoreReport":
        per_instance = tuple(per_instance)
        n = len(per_instance)
        mean = 100.0 * sum(item.score for item in per_instance) / n if n else 0.0
        failures = sum(1 for item in per_instance if item.failed)
        return cls(task_name=task_name, n=n, mean_score=mean, per_instance=per_instance, failures=failures)

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_name": self.task_name,
            "n": self.n,
            "mean_score": self.mean_score,
            "failures": self.failures,
            "per_instance": [item.to_dict() for item in self.per_instance],
        }


def run_eval(
    spec: EvalTaskSpec,
    instances: Sequence[EvalInstance],
    backend: ChatBackend,
    max_in_flight: int = 1,
) -> ScoreReport:
    """Prompt the backend once per instance and score the replies.

    A backend failure scores that instance 0 and flags it; the run always
    completes. Per-instance results keep input order.
    """

    def one(instance: EvalInstance) -> PerInstanceScore:
        request = render_eval_prompt(spec, instance)
        try:
            reply = backend.complete(request)
        except Exception:
            return PerInstanceScore(instance.id, 0.0, failed=True)
        return PerInstanceScore(instance.id, score_prediction(spec, instance, reply))

    per_instance = bounded_map(one, instances, max_in_flight)
    return ScoreReport.from_scores(spec.name, per_instance)


def format_score_report(report: ScoreReport) -> str:
    lines = [
        f"task       {report.task_name}",
        f"instances  {report.n}",
        f"failures   {report.failures}",
        f"score      {report.mean_score:.1f}",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# task registry

_OPEN_QA = "{question}"

_REMOTE_SENSING_CATEGORY = (
    "What is the category of this remote sensing image?\n"
    "Answer the question using a single word or phrase.\n"
    "Reference categories include: {options}"
)

_TASK_ROWS: tuple[tuple[str, str, str, str | None, str], ...] = (
    ("slake_open", _OPEN_QA, METRIC_TOKEN_RECALL, None, OPTIONS_STYLE_COMMA),
    ("slake_closed", _OPEN_QA, METRIC_CLOSED_ACCURACY, None, OPTIONS_STYLE_COMMA),
    ("pathvqa_open", _OPEN_QA, METRIC_TOKEN_RECALL, None, OPTIONS_STYLE_COMMA),
    ("pathvqa_closed", _OPEN_QA, METRIC_CLOSED_ACCURACY, None, OPTIONS_STYLE_COMMA),
    ("vqarad_open", _OPEN_QA, METRIC_TOKEN_RECALL, None, OPTIONS_STYLE_COMMA),
    ("vqarad_closed", _OPEN_QA, METRIC_CLOSED_ACCURACY, None, OPTIONS_STYLE_COMMA),
    (
        "pmcvqa",
        "Question: {question}\nThe choices are: {options}",
        METRIC_CHOICE_ACCURACY,
        "options",
        OPTIONS_STYLE_LETTERS,
    ),
    ("recipe1m", _OPEN_QA, METRIC_ROUGE_L, None, OPTIONS_STYLE_COMMA),
    (
        "nutrition5k",
        "What ingredients are used to make the dish in the image?",
        METRIC_TOKEN_RECALL,
        None,
        OPTIONS_STYLE_COMMA,
    ),
    (
        "food101",
        "What type of food is shown in this image?\n"
        "Choose one type from the following options:\n"
        "{options}",
        METRIC_CHOICE_ACCURACY,
        "options",
        OPTIONS_STYLE_COMMA,
    ),
    (
        "foodseg103",
        "Identify the food categories present in the image.\n"
        "The available categories are: {options}\n"
        "Please return a list of the selected food categories, formatted as a "
        "list of names like [candy, egg tart, french fries, chocolate].",
        METRIC_MULTILABEL_F1,
        "options",
        OPTIONS_STYLE_COMMA,
    ),
    ("clrs", _REMOTE_SENSING_CATEGORY, METRIC_CHOICE_ACCURACY, "options", OPTIONS_STYLE_COMMA),
    ("ucmerced", _REMOTE_SENSING_CATEGORY, METRIC_CHOICE_ACCURACY, "options", OPTIONS_STYLE_COMMA),
    ("floodnet", _OPEN_QA, METRIC_CHOICE_ACCURACY, None, OPTIONS_STYLE_COMMA),
    (
        "nwpu",
        "Please provide an one-sentence caption for the provided remote "
        "sensing image in details.",
        METRIC_ROUGE_L,
        None,
        OPTIONS_STYLE_COMMA,
    ),
)

BUILTIN_TASKS: dict[str, EvalTaskSpec] = {
    name: EvalTaskSpec(name, template, metric, options_field, options_style)
    for name, template, metric, options_field, options_style in _TASK_ROWS
}


def get_task(name: str) -> EvalTaskSpec:
    spec = BUILTIN_TASKS.get(name)
    if spec is None:
        known = ", ".join(sorted(BUILTIN_TASKS))
        raise ConfigError(f"unknown eval task {name!r}; available: {known}")
    return spec


def load_task_specs(path: str | Path) -> dict[str, EvalTaskSpec]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(raw, Mapping):
        raw = list(raw.values())
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a list of task specs")
    specs = [EvalTaskSpec.from_dict(row) for row in raw]
    return {spec.name: spec for spec in specs}

"""
Scoring model replies and annotated samples
===========================================

The evaluation side of the toolkit: the five reply scorers on small worked
examples, a zero-shot eval run against a scripted backend, and the quality
reports computed from human annotation files.
"""

from vistruct.backends import ScriptedBackend
from vistruct.corpus import ImageRef
from vistruct.evalharness import (
    EvalInstance,
    format_score_report,
    get_task,
    run_eval,
    score_choice_accuracy,
    score_closed_accuracy,
    score_multilabel_f1,
    score_rouge_l,
    score_token_recall,
)
from vistruct.quality import (
    QualityAnnotation,
    ResponseAnnotation,
    diversity_score,
    filter_quality_report,
    format_filter_quality,
    rescale_likert,
)

print("== reply scorers ==")

# Token recall: unique gold tokens the prediction covers.
print(f"  recall('right lung' vs 'left lung')       = {score_token_recall('right lung', 'left lung')}")

# Closed accuracy: the first standalone yes/no decides.
print(f"  closed('No, not enlarged.' vs 'no')       = {score_closed_accuracy('No, not enlarged.', 'no')}")

# Choice accuracy: the reply must name exactly one option.
options = ("dog", "cat", "bird")
print(f"  choice('It is a dog.', options, 'dog')    = {score_choice_accuracy('It is a dog.', options, 'dog')}")
print(f"  choice('A dog or a bird.', options, 'dog') = {score_choice_accuracy('A dog or a bird.', options, 'dog')}")

# Rouge-L: F-measure over the longest common subsequence.
print(f"  rouge_l('a b c d' vs 'b d')               = {score_rouge_l('a b c d', 'b d'):.4f}")

# Multi-label F1: labels read from the first bracketed list.
f1 = score_multilabel_f1("[candy, egg tart]", ("candy",), ("candy", "egg tart", "rice"))
print(f"  f1('[candy, egg tart]' vs {{candy}})        = {f1:.4f}")

# A zero-shot run: the registered task brings the prompt template and
# scorer; the scripted backend stands in for the model under test.
print("\n== zero-shot eval run ==")
instances = [
    EvalInstance(
        id=f"q{i}",
        image=ImageRef.blank(32, 32),
        gold=gold,
        fields={"question": question},
    )
    for i, (question, gold) in enumerate(
        [
            ("Does the image show the lung?", "yes"),
            ("Is there a fracture?", "no"),
            ("Does the image show the lung clearly?", "no"),
        ]
    )
]
model = ScriptedBackend(
    [
        ("lung", "Yes."),
        ("", "No, it does not."),
    ]
)
report = run_eval(get_task("slake_closed"), instances, model, max_in_flight=2)
print(format_score_report(report))

# Quality scoring: per-sample grades roll up into the 0-100 numbers.
print("\n== annotation quality ==")
samples = [
    QualityAnnotation("s1", "Object Recognition", knowledge=2, complexity=3, accuracy=5),
    QualityAnnotation("s2", "Caption Generation", knowledge=4, complexity=2, accuracy=4),
    QualityAnnotation("s3", "Anomaly Detection", knowledge=3, complexity=3, accuracy=5),
    QualityAnnotation("s4", "Object Recognition", knowledge=1, complexity=2, accuracy=3),
]
print(f"  diversity  {diversity_score(samples):.1f}")
print(f"  accuracy   {rescale_likert([a.accuracy for a in samples]):.1f}")

# Pre/post filter comparison from response agreement annotations. The rows
# before the filter grade every synthesized triplet; the rows after grade
# the survivors plus their assembled responses.
pre = [
    ResponseAnnotation(f"pre-{i}", consistent=i % 3 == 0, precise_correct=i % 2 == 0, informative_correct=i % 2 == 0)
    for i in range(12)
]
post = [
    ResponseAnnotation(f"post-{i}", consistent=True, precise_correct=True, informative_correct=i % 4 > 0, combined_correct=i % 4 > 0)
    for i in range(8)
]
print(format_filter_quality(filter_quality_report(pre, post)))

"""
Generate, filter, and assemble a toy instruction dataset
========================================================

A tiny end-to-end run of the data pipeline against scripted backends:
synthesize task triplets for six image-caption pairs, keep the ones a
scripted judge calls consistent, fold each survivor into one
reasoning-then-conclusion response, and assemble the single-stage
training set. Everything is deterministic and offline.
"""

import tempfile
from pathlib import Path

from vistruct.assembler import build_single_stage_dataset, dataset_manifest, DEFAULT_POOL
from vistruct.backends import ScriptedBackend, TranscriptRecorder, scripted_from_replay
from vistruct.corpus import ImageCaptionPair, ImageRef
from vistruct.filterkit import assemble_cot, filter_triplets, format_filter_stats
from vistruct.synthclient import STATUS_OK, synthesize_batch, synthesis_stats

# The raw material: six images (blank placeholders here) with captions.
pairs = [
    ImageCaptionPair(
        id=f"scan-{i}",
        image=ImageRef.blank(64, 64),
        caption=f"An aerial tile showing field plot {i} after harvest.",
    )
    for i in range(6)
]


# A scripted synthesizer stands in for the fine-tuned model. Each rule maps
# a caption fragment to the four-turn completion a well-behaved synthesizer
# would emit; plot 4 misbehaves so the parse-failure path shows up too.
def completion(i):
    question = f"Which plot is shown in tile {i}?"
    return (
        f"User: Answer with a precise response. {question}\n"
        f"Assistant: Plot {i}.\n"
        f"User: Answer with an informative response. {question}\n"
        f"Assistant: The tile covers field plot {i}; the harvest rows make the plot boundary visible."
    )


synthesizer = ScriptedBackend(
    [("plot 4", "not a conversation at all")]
    + [(f"plot {i}", completion(i)) for i in range(6)]
)

print("== synthesize ==")
outcomes = synthesize_batch(pairs, synthesizer, max_in_flight=4)
for outcome in outcomes:
    detail = outcome.reason if outcome.reason else outcome.triplet.precise_response
    print(f"  {outcome.pair_id}: {outcome.status} ({detail})")
print(f"  stats: {synthesis_stats(outcomes)}")

# The judge also runs scripted: tile 2 is contradicted, tile 5 has no
# checkable answer, the rest agree. Recording the exchanges to a transcript
# lets a later run replay the same judgments without any backend.
judged = [(o.pair_id, o.triplet) for o in outcomes if o.status == STATUS_OK]
judge_rules = [
    ("tile 2", "The two responses disagree about the plot. inconsistent"),
    ("tile 5", "open"),
    ("", "consistent"),
]

print("\n== filter ==")
with tempfile.TemporaryDirectory() as scratch:
    transcript = Path(scratch) / "judge_transcript.jsonl"
    judge = TranscriptRecorder(ScriptedBackend(judge_rules), transcript)
    kept, stats = filter_triplets([t for _, t in judged], judge, max_in_flight=4)
    print(format_filter_stats(stats))

    replayed_kept, replayed_stats = filter_triplets(
        [t for _, t in judged], scripted_from_replay(transcript)
    )
    print(f"  replay from transcript agrees: {replayed_kept == kept and replayed_stats == stats}")

# Each survivor becomes one training task whose response reasons first and
# concludes second.
owners = {triplet: pair_id for pair_id, triplet in judged}
tasks = {owners[t]: assemble_cot(t) for t in kept}

print("\n== chain-of-thought tasks ==")
for pair_id, task in sorted(tasks.items()):
    print(f"  {pair_id}: {task.instruction}")
    print(f"    {task.response.splitlines()[-1]}")

# Single-stage assembly: every pair contributes a caption exchange, and
# pairs with a surviving task get the task appended in the same example.
examples = build_single_stage_dataset(pairs, tasks, rng_seed=7)
manifest = dataset_manifest(examples, mode="single", rng_seed=7, pool=DEFAULT_POOL)

print("\n== assemble ==")
for example in examples:
    print(f"  {example.source_pair_id}: {len(example.turns)} turns ({example.provenance})")
print(f"  manifest counts: {manifest['counts_by_provenance']}")

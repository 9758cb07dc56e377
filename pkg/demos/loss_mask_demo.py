"""
Rendered conversations and their loss masks
===========================================

Training sequences are plain text plus byte spans naming where the loss
applies. This walks the two shapes the toolkit renders: the six-turn
synthesizer-tuning conversation (loss on the task turns only) and an
assembled single-stage example (loss on assistant turns only), then shows
how a custom chat template and control-token masking change the spans.
"""

from vistruct.assembler import build_single_stage
from vistruct.assembler import DEFAULT_POOL
from vistruct.corpus import ImageCaptionPair, ImageRef, SeedRecord, TaskTriplet
from vistruct.filterkit import assemble_cot
from vistruct.seedkit import apply_blank_augmentation, render_synthesizer_tuning
from vistruct.templates import ChatTemplate


def show(rendered):
    """Print the text, then each span with the bytes it selects."""
    print("  text:")
    for line in rendered.rendered_text.splitlines():
        print(f"    |{line}")
    print("  spans:")
    for (start, end), text in zip(rendered.mask_spans, rendered.masked_texts()):
        preview = text if len(text) <= 56 else text[:53] + "..."
        print(f"    [{start:4d}, {end:4d}) {preview!r}")


record = SeedRecord(
    pair=ImageCaptionPair(
        id="demo-1",
        image=ImageRef.file("images/demo-1.png"),
        caption="A chest radiograph in frontal view.",
    ),
    triplet=TaskTriplet(
        instruction="Which organ looks abnormal?",
        informative_response=(
            "The cardiac silhouette is enlarged relative to the thorax, "
            "so the abnormal organ is the heart."
        ),
        precise_response="The heart.",
    ),
)

# Six turns; the caption turns carry no loss, the four task turns do.
print("== synthesizer tuning sequence ==")
show(render_synthesizer_tuning(record))

# Blank augmentation swaps sampled images for generated blanks and nothing
# else, so text and spans are unchanged; only the attached image differs.
augmented, replaced = apply_blank_augmentation([record] * 10, fraction=0.3, rng_seed=1)
blank_render = render_synthesizer_tuning(augmented[sorted(replaced)[0]])
print("\n== after blank augmentation ==")
print(f"  replaced indices: {sorted(replaced)}")
print(f"  image kind is now: {blank_render.image_refs[0].kind}")
print(f"  text unchanged: {blank_render.rendered_text == render_synthesizer_tuning(record).rendered_text}")

# A single-stage example: caption exchange plus the synthesized task, with
# loss on the two assistant turns.
task = assemble_cot(record.triplet)
example = build_single_stage(record.pair, task, DEFAULT_POOL, rng_seed=7, index=0)
print("\n== single-stage example ==")
from vistruct.assembler import render_training_sequence

show(render_training_sequence(example))

# Templates are swappable. The same turns under a chatml-flavored template
# produce different bytes and different spans, but the masked texts are the
# same assistant payloads.
chatml = ChatTemplate(
    role_user="<|user|>\n",
    role_assistant="<|assistant|>\n",
    turn_separator="\n",
    image_placeholder="<image>",
)
print("\n== same example, custom template ==")
show(render_training_sequence(example, template=chatml))

# With control tokens included, each span stretches back over the role
# prefix that opens its turn, which is how trainers that supervise the
# role tokens want their masks.
print("\n== default template, control tokens masked too ==")
show(render_training_sequence(example, include_control_tokens=True))

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vistruct.corpus import ChatTurn, ImageRef
from vistruct.errors import MissingPlaceholderError, TemplateError
from vistruct.templates import (
    DEFAULT_TEMPLATE,
    DESCRIBE_IMAGE_PROMPT,
    INFORMATIVE_MARKER,
    PRECISE_MARKER,
    ChatTemplate,
    fill_placeholders,
    load_template,
    render_conversation_text,
    render_sequence,
    template_placeholders,
)


def test_fixed_conversation_strings():
    assert DESCRIBE_IMAGE_PROMPT == "Describe the image."
    assert PRECISE_MARKER == "Answer with a precise response."
    assert INFORMATIVE_MARKER == "Answer with an informative response."


def test_default_template_strings():
    assert DEFAULT_TEMPLATE.role_user == "User: "
    assert DEFAULT_TEMPLATE.role_assistant == "Assistant: "
    assert DEFAULT_TEMPLATE.turn_separator == "\n"
    assert DEFAULT_TEMPLATE.image_placeholder == "<Image>"


def test_template_validation():
    with pytest.raises(TemplateError):
        ChatTemplate(role_user="")
    with pytest.raises(TemplateError):
        ChatTemplate(turn_separator="")
    with pytest.raises(TemplateError):
        ChatTemplate(role_user="X: ", role_assistant="X: ")


def test_template_config_file_matches_default():
    assert load_template("configs/chat_template.json") == DEFAULT_TEMPLATE


def test_render_basic_two_turns():
    turns = (
        ChatTurn("user", "Describe the image.", image=ImageRef.blank()),
        ChatTurn("assistant", "a cat on a mat", loss_bearing=True),
    )
    seq = render_sequence(turns)
    assert seq.rendered_text == (
        "User: <Image>Describe the image.\nAssistant: a cat on a mat"
    )
    assert seq.masked_texts() == ["a cat on a mat"]
    assert seq.image_refs == (ImageRef.blank(),)


def test_render_spans_are_byte_offsets():
    turns = (
        ChatTurn("user", "héllo?", image=None),
        ChatTurn("assistant", "wörld", loss_bearing=True),
    )
    seq = render_sequence(turns)
    start, end = seq.mask_spans[0]
    assert seq.rendered_text.encode("utf-8")[start:end].decode("utf-8") == "wörld"


def test_render_include_control_tokens_extends_to_prefix():
    turns = (
        ChatTurn("user", "q", loss_bearing=True),
        ChatTurn("assistant", "a", loss_bearing=True),
    )
    content_only = render_sequence(turns)
    assert content_only.masked_texts() == ["q", "a"]
    with_tokens = render_sequence(turns, include_control_tokens=True)
    assert with_tokens.masked_texts() == ["User: q", "Assistant: a"]
    assert with_tokens.rendered_text == content_only.rendered_text


def test_render_with_system_preamble():
    template = ChatTemplate(system_preamble="You are a helpful assistant.")
    turns = (ChatTurn("user", "hi"), ChatTurn("assistant", "hello", loss_bearing=True))
    seq = render_sequence(turns, template)
    assert seq.rendered_text.startswith("You are a helpful assistant.\nUser: hi")
    assert seq.masked_texts() == ["hello"]


def test_render_empty_loss_text_contributes_no_span():
    turns = (ChatTurn("user", "q"), ChatTurn("assistant", "", loss_bearing=True))
    seq = render_sequence(turns)
    assert seq.mask_spans == ()


def test_image_placeholder_outside_mask():
    turns = (
        ChatTurn("user", "look", image=ImageRef.blank(), loss_bearing=True),
    )
    seq = render_sequence(turns)
    assert seq.masked_texts() == ["look"]
    assert "<Image>" in seq.rendered_text


_any_text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40)


@st.composite
def _turn_lists(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    turns = []
    for i in range(n):
        role = "user" if i % 2 == 0 else "assistant"
        image = ImageRef.blank(4, 4) if role == "user" and draw(st.booleans()) else None
        turns.append(
            ChatTurn(role, draw(_any_text), image=image, loss_bearing=draw(st.booleans()))
        )
    return turns


@given(_turn_lists(), st.booleans())
def test_render_mask_invariants(turns, include_control):
    seq = render_sequence(turns, DEFAULT_TEMPLATE, include_control)
    raw = seq.rendered_bytes()
    prev_end = 0
    for start, end in seq.mask_spans:
        assert 0 <= start < end <= len(raw)
        assert start >= prev_end
        prev_end = end
    expected = [t.text for t in turns if t.loss_bearing and t.text]
    if include_control:
        prefixes = {"user": "User: ", "assistant": "Assistant: "}
        expected = [
            prefixes[t.role] + (("<Image>" if t.image else "")) + t.text
            for t in turns
            if t.loss_bearing
        ]
        # an all-empty turn still renders its prefix, so compare via decode
        assert seq.masked_texts() == expected
    else:
        assert seq.masked_texts() == expected


@given(_turn_lists())
def test_rendered_image_refs_match_turn_images(turns):
    seq = render_sequence(turns)
    assert list(seq.image_refs) == [t.image for t in turns if t.image is not None]


def test_render_conversation_text_matches_render_sequence():
    turns = (
        ChatTurn("user", "Describe the image.", image=ImageRef.blank()),
        ChatTurn("assistant", "a cat"),
    )
    assert render_conversation_text(turns) == render_sequence(turns).rendered_text


def test_fill_placeholders():
    out = fill_placeholders("Q: {question} A: {answer}", {"question": "why", "answer": "because"})
    assert out == "Q: why A: because"


def test_fill_placeholders_missing_raises():
    with pytest.raises(MissingPlaceholderError):
        fill_placeholders("{question}", {})


def test_fill_placeholders_does_not_rescan_values():
    out = fill_placeholders("{a}{b}", {"a": "{b}", "b": "x"})
    assert out == "{b}x"


def test_template_placeholders_are_ordered_and_unique():
    assert template_placeholders("{b} {a} {b}") == ["b", "a"]

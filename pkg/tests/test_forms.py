import pytest

from cxgram.forms import (
    ConflictingOrder,
    CyclicOrder,
    DanglingAdjacency,
    UnderspecifiedOrder,
    render_utterance,
    tokenize,
)
from cxgram.predicates import parse_predicate_set

from test_predicates import EXAMPLE_FORM_TEXT

SENTENCE = "The more you think about it, the less it makes sense."


def test_tokenize_reproduces_worked_example():
    assert tokenize(SENTENCE) == parse_predicate_set(EXAMPLE_FORM_TEXT)


def test_tokenize_counts():
    form = tokenize(SENTENCE)
    strings = [p for p in form if p.name == "string"]
    adjacents = [p for p in form if p.name == "adjacent"]
    assert len(strings) == 13
    assert len(adjacents) == 12


def test_tokenize_empty():
    assert len(tokenize("")) == 0
    assert len(tokenize("   ")) == 0


def test_tokenize_small_sentence():
    expected = parse_predicate_set(
        '{string(it-1, "it"), string(makes-1, "makes"), string(sense-1, "sense"),'
        ' string(-1, "."), adjacent(it-1, makes-1), adjacent(makes-1, sense-1),'
        " adjacent(sense-1, -1)}"
    )
    assert tokenize("it makes sense.") == expected


def test_tokenize_repeated_bases_and_punctuation():
    form = tokenize("it, it, it!")
    ids = sorted(p.args[0].symbol for p in form if p.name == "string")
    assert ids == ["-1", "-2", "-3", "it-1", "it-2", "it-3"]


def test_render_worked_example():
    assert render_utterance(parse_predicate_set(EXAMPLE_FORM_TEXT)) == SENTENCE


def test_render_empty():
    assert render_utterance(parse_predicate_set("{}")) == ""


def test_render_underspecified():
    form = parse_predicate_set('{string(a-1, "a"), string(b-1, "b")}')
    with pytest.raises(UnderspecifiedOrder):
        render_utterance(form)


def test_render_single_token():
    assert render_utterance(parse_predicate_set('{string(hi-1, "Hi")}')) == "Hi"


def test_render_cycle():
    form = parse_predicate_set(
        '{string(a-1, "a"), string(b-1, "b"), adjacent(a-1, b-1), adjacent(b-1, a-1)}'
    )
    with pytest.raises(CyclicOrder):
        render_utterance(form)


def test_render_dangling():
    form = parse_predicate_set('{string(a-1, "a"), adjacent(a-1, b-1)}')
    with pytest.raises(DanglingAdjacency):
        render_utterance(form)


def test_render_branching():
    form = parse_predicate_set(
        '{string(a-1, "a"), string(b-1, "b"), string(c-1, "c"),'
        " adjacent(a-1, b-1), adjacent(a-1, c-1)}"
    )
    with pytest.raises(ConflictingOrder):
        render_utterance(form)


CORPUS = [
    SENTENCE,
    "The less you think about it, the more it makes sense.",
    "The more people think about it, the more it matters.",
    "what is the colour of the car?",
    "how many sheep are there?",
    "It matters!",
    "Hello there.",
    "a b c d e f g",
]


def test_round_trip_render_tokenize():
    for sentence in CORPUS:
        form = tokenize(sentence)
        assert render_utterance(form) == sentence
        assert tokenize(render_utterance(form)) == form


def test_adjacency_forms_single_path():
    for sentence in CORPUS:
        form = tokenize(sentence)
        ids = {p.args[0].symbol for p in form if p.name == "string"}
        adj = [(p.args[0].symbol, p.args[1].symbol) for p in form if p.name == "adjacent"]
        assert len(adj) == max(len(ids) - 1, 0)
        heads = [a for a, _ in adj]
        tails = [b for _, b in adj]
        assert len(set(heads)) == len(heads)
        assert len(set(tails)) == len(tails)

import json

import pytest

from cxgram.grammar_io import (
    ParseError,
    ValidationError,
    demo_corpus,
    demo_grammar_path,
    dumps_grammar,
    grammar_to_document,
    load_demo_grammar,
    load_grammar,
    loads_grammar,
    save_grammar,
)


def test_demo_grammar_loads():
    g = load_demo_grammar()
    assert len(g.constructions) == 12
    names = {c.name for c in g.constructions}
    assert "more-cxn" in names
    assert "the-comp-x-the-comp-y-cxn" in names
    assert all(0.0 <= c.score <= 1.0 for c in g.constructions)


def test_demo_corpus_has_enough_sentences():
    corpus = demo_corpus()
    assert len(corpus) >= 10
    assert all(s.endswith(".") for s in corpus)


def test_empty_constructions_is_valid():
    g = loads_grammar('{"name": "empty", "constructions": []}')
    assert g.name == "empty"
    assert g.constructions == []


def test_score_out_of_range_rejected():
    doc = grammar_to_document(load_demo_grammar())
    doc["constructions"][0]["score"] = 1.5
    with pytest.raises(ValidationError) as exc:
        loads_grammar(json.dumps(doc))
    assert doc["constructions"][0]["name"] in str(exc.value)


def test_unknown_fields_rejected():
    with pytest.raises(ValidationError):
        loads_grammar('{"name": "x", "constructions": [], "extra": 1}')
    doc = grammar_to_document(load_demo_grammar())
    doc["constructions"][0]["mystery"] = True
    with pytest.raises(ValidationError):
        loads_grammar(json.dumps(doc))
    doc = grammar_to_document(load_demo_grammar())
    doc["constructions"][0]["conditional"][0]["comprehension-lock"][0]["oops"] = 1
    with pytest.raises(ValidationError):
        loads_grammar(json.dumps(doc))


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        loads_grammar("{not json")
    assert "line" in str(exc.value)


def test_bad_predicate_text_rejected():
    text = json.dumps(
        {
            "name": "g",
            "constructions": [
                {
                    "name": "broken-cxn",
                    "conditional": [
                        {
                            "unit": "?u",
                            "comprehension-lock": [
                                {
                                    "name": "form",
                                    "hashed": True,
                                    "value": {"predicates": "{oops("},
                                }
                            ],
                        }
                    ],
                }
            ],
        }
    )
    with pytest.raises(ValidationError):
        loads_grammar(text)


def test_duplicate_names_rejected():
    doc = grammar_to_document(load_demo_grammar())
    doc["constructions"].append(doc["constructions"][0])
    with pytest.raises(ValidationError):
        loads_grammar(json.dumps(doc))


def test_save_load_round_trip(tmp_path):
    g = load_demo_grammar()
    path = tmp_path / "demo.json"
    save_grammar(g, path)
    again = load_grammar(path)
    assert dumps_grammar(again) == dumps_grammar(g)
    assert grammar_to_document(again) == grammar_to_document(g)


def test_bundled_file_is_canonical():
    raw = demo_grammar_path().read_text()
    assert dumps_grammar(load_demo_grammar()) == raw


def test_network_round_trip(tmp_path):
    g = load_demo_grammar()
    g.network.add_link("car", "slot-x", 0.75)
    path = tmp_path / "with-net.json"
    save_grammar(g, path)
    again = load_grammar(path)
    assert again.network.links() == [("car", "slot-x", 0.75)]

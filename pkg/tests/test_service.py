import pytest
from fastapi import HTTPException
from fastapi.testclient import TestClient

from cxgram.grammar_io import demo_grammar_path, demo_meaning_path, grammar_to_document, load_demo_grammar
from cxgram.service import (
    ComprehendRequest,
    GameRequest,
    ProduceRequest,
    ValidateRequest,
    comprehend_endpoint,
    create_app,
    game_endpoint,
    produce_endpoint,
    validate_endpoint,
)

SENTENCE = "The more you think about it, the less it makes sense."
GRAMMAR = str(demo_grammar_path())


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_comprehend_over_http(client):
    response = client.post(
        "/comprehend", json={"grammar_path": GRAMMAR, "utterance": SENTENCE}
    )
    assert response.status_code == 200
    body = response.json()
    assert len(body["applied"]) == 11
    assert body["applied"][-1] == "the-comp-x-the-comp-y-cxn"
    assert body["penman"].startswith("(c")
    assert "correlate-91" in body["meaning_predicates"]


def test_comprehend_inline_grammar(client):
    doc = grammar_to_document(load_demo_grammar())
    response = client.post("/comprehend", json={"grammar": doc, "utterance": SENTENCE})
    assert response.status_code == 200


def test_comprehend_empty_utterance_is_usage_error(client):
    response = client.post(
        "/comprehend", json={"grammar_path": GRAMMAR, "utterance": "   "}
    )
    assert response.status_code == 400
    assert response.json()["detail"]["code"] == "EMPTY_INPUT"


def test_comprehend_unparseable_is_engine_error(client):
    response = client.post(
        "/comprehend", json={"grammar_path": GRAMMAR, "utterance": "zebra zebra"}
    )
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "SEARCH_EXHAUSTED"


def test_comprehend_tree_included(client):
    response = client.post(
        "/comprehend",
        json={"grammar_path": GRAMMAR, "utterance": SENTENCE, "include_tree": True},
    )
    tree = response.json()["tree"]
    assert tree["nodes_created"] == len(tree["nodes"])
    assert any(n["status"] == "solution" for n in tree["nodes"])


def test_produce_over_http(client):
    response = client.post(
        "/produce",
        json={"grammar_path": GRAMMAR, "meaning_penman": demo_meaning_path().read_text()},
    )
    assert response.status_code == 200
    assert response.json()["utterance"] == SENTENCE


def test_produce_predicates_input(client):
    meaning = "{more(?m), you(?y), think-01(?t), :arg0(?t, ?y), :arg1(?t, ?i), it(?i)}"
    response = client.post(
        "/produce", json={"grammar_path": GRAMMAR, "meaning_predicates": meaning}
    )
    # not a full sentence meaning: the grammar cannot consume it entirely
    assert response.status_code == 422


def test_produce_bad_penman(client):
    response = client.post(
        "/produce", json={"grammar_path": GRAMMAR, "meaning_penman": "(broken"}
    )
    assert response.status_code == 400
    assert response.json()["detail"]["code"] == "AMR_ERROR"


def test_validate_endpoint_and_errors(client):
    response = client.post("/validate", json={"grammar_path": GRAMMAR})
    assert response.status_code == 200
    assert response.json()["constructions"] == 12
    missing = client.post("/validate", json={"grammar_path": "/nope/missing.json"})
    assert missing.status_code == 400
    assert missing.json()["detail"]["code"] == "FILE_NOT_FOUND"
    both = client.post(
        "/validate", json={"grammar_path": GRAMMAR, "grammar": {"name": "x", "constructions": []}}
    )
    assert both.status_code == 400


def test_game_over_http(client):
    response = client.post(
        "/game",
        json={"config": {"seed": 3, "interactions": 40, "window": 20}},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["interactions"] == 40
    assert body["csv"].startswith("interaction,success,")


def test_endpoints_callable_in_process():
    # the CLI path: same handlers, no HTTP
    response = comprehend_endpoint(
        ComprehendRequest(grammar_path=GRAMMAR, utterance=SENTENCE)
    )
    assert len(response.applied) == 11
    produced = produce_endpoint(
        ProduceRequest(grammar_path=GRAMMAR, meaning_penman=demo_meaning_path().read_text())
    )
    assert produced.utterance == SENTENCE
    validated = validate_endpoint(ValidateRequest(grammar_path=GRAMMAR))
    assert validated.valid
    with pytest.raises(HTTPException) as exc:
        game_endpoint(GameRequest())
    assert exc.value.status_code == 400

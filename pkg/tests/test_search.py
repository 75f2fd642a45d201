import pytest

from cxgram.constructions import (
    COMPREHENSION,
    PRODUCTION,
    ConditionalUnit,
    Construction,
    ContributingUnit,
    Feature,
    apply_construction_detailed,
    encode_structure,
    initial_comprehension_structure,
    initial_production_structure,
)
from cxgram.forms import tokenize
from cxgram.grammar_io import Grammar, load_demo_grammar
from cxgram.predicates import (
    IdSource,
    PredicateSet,
    Term,
    equal_modulo_renaming,
    parse_predicate_set,
)
from cxgram.search import (
    GOAL_ALL_PROCESSED,
    GOAL_CONNECTED_MEANING,
    GOAL_NO_MORE_CXNS,
    EmptyInput,
    SearchConfig,
    SearchExhausted,
    SearchNode,
    comprehend,
    comprehend_detailed,
    export_search_tree,
    goal_all_processed,
    goal_connected_meaning,
    goal_no_more_cxns,
    priority,
    produce,
    produce_detailed,
    search,
    search_all,
    search_tree_dot,
)

from test_predicates import EXAMPLE_MEANING_TEXT

SENTENCE = "The more you think about it, the less it makes sense."


@pytest.fixture(scope="module")
def demo():
    return load_demo_grammar()


def lexical(name, word, meaning, category="entity"):
    return Construction(
        name,
        conditional=(
            ConditionalUnit(
                Term.var("?unit"),
                production_lock=(
                    Feature("meaning", parse_predicate_set(meaning), hashed=True),
                ),
                comprehension_lock=(
                    Feature(
                        "form",
                        parse_predicate_set('{string(?u, "%s")}' % word),
                        hashed=True,
                    ),
                ),
            ),
        ),
        contributing=(
            ContributingUnit(
                Term.var("?unit"),
                (
                    Feature("category", frozenset({category})),
                    Feature("referent", Term.var("?r")),
                ),
            ),
        ),
    )


def toy_grammar(*cxns):
    return Grammar("toy", list(cxns))


# -- goal tests ----------------------------------------------------------------


def test_goal_all_processed(demo):
    start = initial_comprehension_structure(tokenize(SENTENCE))
    assert not goal_all_processed(start, COMPREHENSION)
    assert goal_all_processed(start, PRODUCTION)  # no meaning to process
    empty = initial_comprehension_structure(PredicateSet.empty())
    assert goal_all_processed(empty, COMPREHENSION)
    _, result = comprehend_detailed(SENTENCE, demo)
    assert goal_all_processed(result.structure, COMPREHENSION)


def test_goal_no_more_cxns(demo):
    start = initial_comprehension_structure(tokenize(SENTENCE))
    assert not goal_no_more_cxns(start, demo.constructions, COMPREHENSION, demo.network)
    assert goal_no_more_cxns(start, [], COMPREHENSION)
    _, result = comprehend_detailed(SENTENCE, demo)
    assert goal_no_more_cxns(result.structure, demo.constructions, COMPREHENSION, demo.network)


def test_goal_connected_meaning(demo):
    _, result = comprehend_detailed(SENTENCE, demo)
    assert goal_connected_meaning(result.structure)
    ids = IdSource()
    ts = initial_comprehension_structure(tokenize("more less"))
    for cxn_name in ("more-cxn", "less-cxn"):
        cxn = demo.construction(cxn_name)
        ts = apply_construction_detailed(cxn, ts, COMPREHENSION, ids)[0].structure
    assert not goal_connected_meaning(ts)  # {more(?m)} and {less(?l)} share nothing
    empty = initial_comprehension_structure(PredicateSet.empty())
    assert goal_connected_meaning(empty)


def test_priority_formula():
    node = SearchNode(0, None, initial_comprehension_structure(PredicateSet.empty()), 3, 5, 0.0)
    assert priority(node, SearchConfig(frozenset({GOAL_ALL_PROCESSED}), 1, 1)) == 8
    assert priority(node, SearchConfig(frozenset({GOAL_ALL_PROCESSED}), 1, 0)) == 3
    assert priority(node, SearchConfig(frozenset({GOAL_ALL_PROCESSED}), 0, 0)) == 0


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(frozenset())
    with pytest.raises(ValueError):
        SearchConfig(frozenset({"nope"}))
    with pytest.raises(ValueError):
        SearchConfig(frozenset({GOAL_ALL_PROCESSED}), max_nodes=0)


# -- the worked example ---------------------------------------------------------


def test_worked_example_comprehension(demo):
    meaning, result = comprehend_detailed(SENTENCE, demo)
    assert equal_modulo_renaming(meaning, parse_predicate_set(EXAMPLE_MEANING_TEXT))
    assert len(result.applied) == 11
    assert result.applied[-1] == "the-comp-x-the-comp-y-cxn"


def test_worked_example_production(demo):
    assert produce(parse_predicate_set(EXAMPLE_MEANING_TEXT), demo) == SENTENCE


def test_comprehend_empty_input(demo):
    with pytest.raises(EmptyInput):
        comprehend("", demo)
    with pytest.raises(EmptyInput):
        comprehend("   ", demo)
    with pytest.raises(EmptyInput):
        produce(PredicateSet.empty(), demo)


def test_search_exhausted_on_empty_inventory():
    start = initial_comprehension_structure(tokenize("hello there"))
    with pytest.raises(SearchExhausted) as exc:
        search(start, [], COMPREHENSION, SearchConfig(frozenset({GOAL_ALL_PROCESSED})))
    assert exc.value.run is not None
    assert exc.value.run.created == 1


def test_search_exhausted_on_node_limit(demo):
    start = initial_comprehension_structure(tokenize(SENTENCE))
    cfg = SearchConfig(
        frozenset({GOAL_ALL_PROCESSED, GOAL_CONNECTED_MEANING}), max_nodes=5
    )
    with pytest.raises(SearchExhausted):
        search(start, demo.constructions, COMPREHENSION, cfg, demo.network)


def test_solution_replay(demo):
    meaning, result = comprehend_detailed(SENTENCE, demo)
    target = encode_structure(result.structure)
    ids = IdSource(10_000)

    def replay(ts, names):
        if not names:
            return equal_modulo_renaming(encode_structure(ts), target)
        cxn = demo.construction(names[0])
        for app in apply_construction_detailed(cxn, ts, COMPREHENSION, ids, demo.network):
            if replay(app.structure, names[1:]):
                return True
        return False

    start = initial_comprehension_structure(tokenize(SENTENCE))
    assert replay(start, list(result.applied))


def test_duplicate_elimination(demo):
    _, result = comprehend_detailed(SENTENCE, demo)
    encodings = [encode_structure(n.structure) for n in result.run.nodes]
    for i in range(len(encodings)):
        for j in range(i + 1, len(encodings)):
            assert not equal_modulo_renaming(encodings[i], encodings[j])


def test_tie_breaking_older_first(demo):
    # with zero weights every node has priority 0, so expansion order must
    # equal creation order
    start = initial_comprehension_structure(tokenize(SENTENCE))
    cfg = SearchConfig(
        frozenset({GOAL_ALL_PROCESSED, GOAL_CONNECTED_MEANING}), w_depth=0, w_units=0
    )
    result = search(start, demo.constructions, COMPREHENSION, cfg, demo.network)
    expanded = [n for n in result.run.nodes if n.expanded_at is not None]
    order = sorted(expanded, key=lambda n: n.expanded_at)
    ids = [n.id for n in order]
    assert ids == sorted(ids)


def test_heuristic_weights_reduce_created_nodes(demo):
    start = initial_comprehension_structure(tokenize(SENTENCE))
    goals = frozenset({GOAL_ALL_PROCESSED, GOAL_CONNECTED_MEANING})
    informed = search(
        start, demo.constructions, COMPREHENSION, SearchConfig(goals, 1, 1), demo.network
    )
    uninformed = search(
        start, demo.constructions, COMPREHENSION, SearchConfig(goals, 0, 0), demo.network
    )
    assert informed.nodes_created <= uninformed.nodes_created
    assert equal_modulo_renaming(
        encode_structure(informed.structure), encode_structure(uninformed.structure)
    )


# -- oracle equivalence ---------------------------------------------------------


def bfs_enumerate(initial, inventory, direction, net=None, max_depth=10):
    """Exhaustive breadth-first enumeration of reachable structures with
    duplicate elimination modulo renaming."""
    ids = IdSource(50_000)
    seen = [initial]
    frontier = [initial]
    while frontier:
        nxt = []
        for ts in frontier:
            if len(ts.history) >= max_depth:
                continue
            for cxn in inventory:
                for app in apply_construction_detailed(cxn, ts, direction, ids, net):
                    enc = encode_structure(app.structure)
                    if any(
                        equal_modulo_renaming(enc, encode_structure(old)) for old in seen
                    ):
                        continue
                    seen.append(app.structure)
                    nxt.append(app.structure)
        frontier = nxt
    return seen


def assert_same_structures(structures_a, structures_b):
    encoded_b = [encode_structure(t) for t in structures_b]
    assert len(structures_a) == len(structures_b)
    for ts in structures_a:
        enc = encode_structure(ts)
        assert any(equal_modulo_renaming(enc, other) for other in encoded_b)


TOY_CASES = [
    ("red cube", ["red", "cube"], False),
    ("red red", ["red"], False),
    ("bank", ["bank"], True),  # ambiguous lexicon, two solutions
    ("cube red cube", ["red", "cube"], False),
]


@pytest.mark.parametrize("utterance,words,ambiguous", TOY_CASES)
def test_all_solutions_matches_bfs_oracle(utterance, words, ambiguous):
    cxns = []
    for w in words:
        cxns.append(lexical(f"{w}-cxn", w, "{%s(?r)}" % w))
    if ambiguous:
        cxns.append(lexical("bank2-cxn", "bank", "{riverbank(?r)}"))
    grammar = toy_grammar(*cxns)
    initial = initial_comprehension_structure(tokenize(utterance))
    cfg = SearchConfig(frozenset({GOAL_ALL_PROCESSED}), max_nodes=2_000)
    results = search_all(initial, grammar.constructions, COMPREHENSION, cfg, grammar.network)

    reachable = bfs_enumerate(initial, grammar.constructions, COMPREHENSION, grammar.network)
    solutions = [ts for ts in reachable if goal_all_processed(ts, COMPREHENSION)]
    assert_same_structures([r.structure for r in results], solutions)
    if ambiguous:
        assert len(results) == 2


def test_all_solutions_production_oracle():
    grammar = toy_grammar(
        lexical("red-cxn", "red", "{red(?r)}"),
        lexical("cube-cxn", "cube", "{cube(?r)}"),
    )
    meaning = parse_predicate_set("{red(?a), cube(?b)}")
    initial = initial_production_structure(meaning)
    cfg = SearchConfig(frozenset({GOAL_ALL_PROCESSED, GOAL_NO_MORE_CXNS}), max_nodes=2_000)
    results = search_all(initial, grammar.constructions, PRODUCTION, cfg, grammar.network)
    reachable = bfs_enumerate(initial, grammar.constructions, PRODUCTION, grammar.network)
    solutions = [
        ts
        for ts in reachable
        if goal_all_processed(ts, PRODUCTION)
        and goal_no_more_cxns(ts, grammar.constructions, PRODUCTION, grammar.network)
    ]
    assert_same_structures([r.structure for r in results], solutions)


# -- tree export ----------------------------------------------------------------


def test_export_search_tree(demo):
    _, result = comprehend_detailed(SENTENCE, demo)
    tree = export_search_tree(result.run)
    assert tree["nodes_created"] == result.nodes_created
    assert len(tree["nodes"]) == result.nodes_created
    solution_nodes = [n for n in tree["nodes"] if n["status"] == "solution"]
    assert len(solution_nodes) == 1
    assert solution_nodes[0]["depth"] == 11
    by_id = {n["id"]: n for n in tree["nodes"]}
    for n in tree["nodes"]:
        if n["parent"] is not None:
            assert n["depth"] == by_id[n["parent"]]["depth"] + 1
    dot = search_tree_dot(result.run)
    assert dot.startswith("digraph search")
    assert "the-comp-x-the-comp-y-cxn" in dot


def test_export_single_node_failure():
    start = initial_comprehension_structure(tokenize("hello"))
    try:
        search(start, [], COMPREHENSION, SearchConfig(frozenset({GOAL_ALL_PROCESSED})))
    except SearchExhausted as exc:
        tree = export_search_tree(exc.run)
        assert len(tree["nodes"]) == 1
        assert tree["solution"] is None


def test_production_grounds_variable_ids(demo):
    utterance, result = produce_detailed(parse_predicate_set(EXAMPLE_MEANING_TEXT), demo)
    assert utterance == SENTENCE
    assert len(result.applied) == 11

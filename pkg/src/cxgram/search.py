"""Best-first search over transient structures, and the comprehend /
produce entry points built on top of it.

Nodes are expanded highest priority first (priority = w_depth * depth +
w_units * units-matched-total, ties broken toward older nodes); goal
tests run when a node is popped; children whose structure already exists
modulo renaming are dropped.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

from .amr import is_connected
from .categorial import CategorialNetwork
from .constructions import (
    COMPREHENSION,
    PRODUCTION,
    Construction,
    TransientStructure,
    apply_construction_detailed,
    applicable,
    encode_structure,
    initial_comprehension_structure,
    initial_production_structure,
)
from .forms import render_utterance, tokenize
from .predicates import (
    IdSource,
    Predicate,
    PredicateSet,
    Term,
    equal_modulo_renaming,
)

__all__ = [
    "SearchConfig",
    "SearchNode",
    "SearchRun",
    "SolutionResult",
    "SearchExhausted",
    "EmptyInput",
    "GOAL_ALL_PROCESSED",
    "GOAL_NO_MORE_CXNS",
    "GOAL_CONNECTED_MEANING",
    "goal_all_processed",
    "goal_no_more_cxns",
    "goal_connected_meaning",
    "priority",
    "search",
    "search_all",
    "comprehend",
    "comprehend_detailed",
    "produce",
    "produce_detailed",
    "extract_meaning",
    "extract_form",
    "export_search_tree",
    "search_tree_dot",
]

GOAL_ALL_PROCESSED = "all-processed"
GOAL_NO_MORE_CXNS = "no-more-cxns"
GOAL_CONNECTED_MEANING = "connected-meaning"
_KNOWN_GOALS = {GOAL_ALL_PROCESSED, GOAL_NO_MORE_CXNS, GOAL_CONNECTED_MEANING}


class SearchExhausted(RuntimeError):
    """No solution: the frontier emptied or a search limit was hit.  The
    partial run is attached for inspection/export."""

    def __init__(self, message, run=None):
        super().__init__(message)
        self.run = run


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    goal_tests: frozenset = frozenset({GOAL_ALL_PROCESSED})
    w_depth: float = 1.0
    w_units: float = 1.0
    max_nodes: int = 10_000
    max_depth: int = 64

    def __post_init__(self):
        if not self.goal_tests:
            raise ValueError("at least one goal test must be enabled")
        unknown = set(self.goal_tests) - _KNOWN_GOALS
        if unknown:
            raise ValueError(f"unknown goal tests: {sorted(unknown)}")
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be >= 1")

    @staticmethod
    def default(direction: str) -> "SearchConfig":
        if direction == COMPREHENSION:
            return SearchConfig(frozenset({GOAL_ALL_PROCESSED, GOAL_CONNECTED_MEANING}))
        return SearchConfig(frozenset({GOAL_ALL_PROCESSED, GOAL_NO_MORE_CXNS}))


@dataclass
class SearchNode:
    id: int
    parent: int | None
    structure: TransientStructure
    depth: int
    units_total: int
    priority: float
    construction: str | None = None
    compat_pairs: tuple = ()
    consumed: PredicateSet = field(default_factory=PredicateSet.empty)
    expanded_at: int | None = None
    solution: bool = False


@dataclass
class SearchRun:
    direction: str
    config: SearchConfig
    nodes: list = field(default_factory=list)
    expanded: int = 0
    solution_id: int | None = None

    @property
    def created(self) -> int:
        return len(self.nodes)


@dataclass
class SolutionResult:
    structure: TransientStructure
    applied: tuple[str, ...]
    nodes_created: int
    nodes_expanded: int
    run: SearchRun
    compat_pairs: tuple = ()
    consumed: PredicateSet = field(default_factory=PredicateSet.empty)

    @property
    def depth(self) -> int:
        return len(self.applied)


# -- goal tests ---------------------------------------------------------------

def goal_all_processed(ts: TransientStructure, direction: str) -> bool:
    feature = "form" if direction == COMPREHENSION else "meaning"
    return len(ts.root.predicates(feature)) == 0


def goal_no_more_cxns(
    ts: TransientStructure,
    inventory,
    direction: str,
    net: CategorialNetwork | None = None,
) -> bool:
    return not any(applicable(c, ts, direction, net) for c in inventory)


def goal_connected_meaning(ts: TransientStructure) -> bool:
    return is_connected(ts.combined_feature("meaning"))


def _goals_pass(ts, direction, inventory, net, config) -> bool:
    if GOAL_ALL_PROCESSED in config.goal_tests and not goal_all_processed(ts, direction):
        return False
    if GOAL_CONNECTED_MEANING in config.goal_tests and not goal_connected_meaning(ts):
        return False
    if GOAL_NO_MORE_CXNS in config.goal_tests and not goal_no_more_cxns(
        ts, inventory, direction, net
    ):
        return False
    return True


def priority(node: SearchNode, config: SearchConfig) -> float:
    return config.w_depth * node.depth + config.w_units * node.units_total


# -- duplicate detection ------------------------------------------------------

def _signature(encoded: PredicateSet):
    return tuple(
        sorted(
            (p.name, len(p.args), tuple("?" if a.is_variable else a.symbol for a in p.args))
            for p in encoded.elements
        )
    )


class _SeenStructures:
    def __init__(self):
        self._buckets: dict = {}

    def add_if_new(self, ts: TransientStructure) -> bool:
        encoded = encode_structure(ts)
        sig = _signature(encoded)
        bucket = self._buckets.setdefault(sig, [])
        for other in bucket:
            if equal_modulo_renaming(encoded, other):
                return False
        bucket.append(encoded)
        return True


# -- the search loop ----------------------------------------------------------

def _ordered_inventory(inventory):
    return sorted(inventory, key=lambda c: (-c.score, c.name))


def search(
    initial: TransientStructure,
    inventory,
    direction: str,
    config: SearchConfig | None = None,
    net: CategorialNetwork | None = None,
) -> SolutionResult:
    """First transient structure satisfying every enabled goal test."""
    results = _run_search(initial, inventory, direction, config, net, all_solutions=False)
    return results[0]


def search_all(
    initial: TransientStructure,
    inventory,
    direction: str,
    config: SearchConfig | None = None,
    net: CategorialNetwork | None = None,
) -> list[SolutionResult]:
    """Every goal-passing structure reachable within the search limits.
    Used by oracle tests; an empty list is not an error."""
    try:
        return _run_search(initial, inventory, direction, config, net, all_solutions=True)
    except SearchExhausted:
        return []


def _run_search(initial, inventory, direction, config, net, all_solutions):
    if direction not in (COMPREHENSION, PRODUCTION):
        raise ValueError(f"bad direction: {direction!r}")
    config = config or SearchConfig.default(direction)
    ordered = _ordered_inventory(inventory)
    ids = IdSource()
    run = SearchRun(direction, config)
    seen = _SeenStructures()
    seen.add_if_new(initial)

    root_node = SearchNode(0, None, initial, len(initial.history), 0, 0.0)
    root_node.priority = priority(root_node, config)
    run.nodes.append(root_node)
    frontier: list[tuple[float, int]] = [(-root_node.priority, root_node.id)]
    solutions: list[SolutionResult] = []

    while frontier:
        _, node_id = heapq.heappop(frontier)
        node = run.nodes[node_id]
        node.expanded_at = run.expanded
        run.expanded += 1

        if _goals_pass(node.structure, direction, ordered, net, config):
            node.solution = True
            result = SolutionResult(
                structure=node.structure,
                applied=node.structure.history,
                nodes_created=run.created,
                nodes_expanded=run.expanded,
                run=run,
                compat_pairs=node.compat_pairs,
                consumed=node.consumed,
            )
            if not all_solutions:
                run.solution_id = node.id
                return [result]
            if run.solution_id is None:
                run.solution_id = node.id
            solutions.append(result)
            # all-solutions mode keeps expanding so the reachable set is
            # exhaustive, matching breadth-first enumeration

        if node.depth >= config.max_depth:
            continue
        for cxn in ordered:
            for app in apply_construction_detailed(
                cxn, node.structure, direction, ids, net
            ):
                if not seen.add_if_new(app.structure):
                    continue
                if run.created >= config.max_nodes:
                    if all_solutions:
                        return solutions
                    raise SearchExhausted(
                        f"node limit {config.max_nodes} reached without a solution",
                        run,
                    )
                consumed = node.consumed
                for eaten in app.consumed.values():
                    consumed = consumed.union(eaten)
                child = SearchNode(
                    id=run.created,
                    parent=node.id,
                    structure=app.structure,
                    depth=node.depth + 1,
                    units_total=node.units_total + app.units_matched,
                    priority=0.0,
                    construction=cxn.name,
                    compat_pairs=node.compat_pairs + app.compat_pairs,
                    consumed=consumed,
                )
                child.priority = priority(child, config)
                run.nodes.append(child)
                heapq.heappush(frontier, (-child.priority, child.id))

    if all_solutions:
        return solutions
    raise SearchExhausted("frontier exhausted without a solution", run)


# -- extraction and top-level entry points -----------------------------------

def extract_meaning(ts: TransientStructure) -> PredicateSet:
    return ts.combined_feature("meaning")


def extract_form(ts: TransientStructure) -> PredicateSet:
    return ts.combined_feature("form")


def ground_form(form: PredicateSet) -> PredicateSet:
    """Replace variable token ids with fresh constants so the form can be
    rendered."""
    variables = sorted(form.variables(), key=lambda t: t.symbol)
    mapping = {v: Term.const(f"tok{i}") for i, v in enumerate(variables, start=1)}
    return PredicateSet(
        Predicate(p.name, tuple(mapping.get(a, a) for a in p.args)) for p in form.elements
    )


def comprehend_detailed(utterance: str, grammar, config: SearchConfig | None = None):
    if not utterance or not utterance.strip():
        raise EmptyInput("utterance is empty")
    config = config or SearchConfig.default(COMPREHENSION)
    initial = initial_comprehension_structure(tokenize(utterance))
    result = search(initial, grammar.constructions, COMPREHENSION, config, grammar.network)
    return extract_meaning(result.structure), result


def comprehend(utterance: str, grammar, config: SearchConfig | None = None) -> PredicateSet:
    meaning, _ = comprehend_detailed(utterance, grammar, config)
    return meaning


def produce_detailed(meaning: PredicateSet, grammar, config: SearchConfig | None = None):
    if len(meaning) == 0:
        raise EmptyInput("meaning is empty")
    config = config or SearchConfig.default(PRODUCTION)
    initial = initial_production_structure(meaning)
    result = search(initial, grammar.constructions, PRODUCTION, config, grammar.network)
    utterance = render_utterance(ground_form(extract_form(result.structure)))
    return utterance, result


def produce(meaning: PredicateSet, grammar, config: SearchConfig | None = None) -> str:
    utterance, _ = produce_detailed(meaning, grammar, config)
    return utterance


# -- search tree export -------------------------------------------------------

def export_search_tree(run: SearchRun) -> dict:
    """Every created node with id, parent, applied construction, priority
    and goal status."""
    nodes = []
    for node in run.nodes:
        if node.solution:
            status = "solution"
        elif node.expanded_at is not None:
            status = "expanded"
        else:
            status = "open"
        nodes.append(
            {
                "id": node.id,
                "parent": node.parent,
                "construction": node.construction,
                "depth": node.depth,
                "units_matched_total": node.units_total,
                "priority": node.priority,
                "expanded_at": node.expanded_at,
                "status": status,
            }
        )
    return {
        "direction": run.direction,
        "nodes_created": run.created,
        "nodes_expanded": run.expanded,
        "solution": run.solution_id,
        "nodes": nodes,
    }


def search_tree_dot(run: SearchRun) -> str:
    tree = export_search_tree(run)
    lines = ["digraph search {", "  rankdir=LR;"]
    for node in tree["nodes"]:
        shape = {"solution": "doublecircle", "expanded": "circle", "open": "ellipse"}[
            node["status"]
        ]
        lines.append(
            f'  n{node["id"]} [label="{node["id"]}\\np={node["priority"]:g}" shape={shape}];'
        )
    for node in tree["nodes"]:
        if node["parent"] is not None:
            label = node["construction"] or ""
            lines.append(f'  n{node["parent"]} -> n{node["id"]} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines)


def search_tree_json(run: SearchRun) -> str:
    return json.dumps(export_search_tree(run), indent=2, sort_keys=True) + "\n"

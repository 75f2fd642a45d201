"""Penman-notation meaning graphs and their lossless predicate encoding.

A graph instance variable v with concept c becomes the unary predicate
c(?v); a relation :role between parent p and child x becomes :role(?p, x)
where x is ?-prefixed for instance references and kept as a constant for
attribute values.  Re-entrant variables produce exactly one concept
predicate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .predicates import Predicate, PredicateSet, Term

__all__ = [
    "AmrGraph",
    "AmrError",
    "AmrSyntaxError",
    "DuplicateVariable",
    "UndeclaredReference",
    "NoRoot",
    "MultipleRoots",
    "MalformedPredicate",
    "DisconnectedGraph",
    "relabel_variables",
    "parse_penman",
    "print_penman",
    "to_predicates",
    "from_predicates",
    "is_connected",
    "parse_amr_file",
]


class AmrError(ValueError):
    pass


class AmrSyntaxError(AmrError):
    pass


class DuplicateVariable(AmrError):
    pass


class UndeclaredReference(AmrError):
    pass


class NoRoot(AmrError):
    pass


class MultipleRoots(AmrError):
    pass


class MalformedPredicate(AmrError):
    pass


class DisconnectedGraph(AmrError):
    pass


_NUMBER = re.compile(r"[+-]?[0-9]+(\.[0-9]+)?\Z")


@dataclass(frozen=True)
class AmrGraph:
    """instances: variable -> concept (declaration order); relations:
    (role, parent variable, child) where child is a variable name or a
    constant Term; root: the top-level variable."""

    instances: tuple[tuple[str, str], ...]
    relations: tuple[tuple[str, str, object], ...]
    root: str

    def __post_init__(self):
        declared: dict[str, str] = {}
        for var, concept in self.instances:
            if var in declared:
                raise DuplicateVariable(f"variable {var!r} declared twice")
            declared[var] = concept
        if self.root not in declared:
            raise UndeclaredReference(f"root {self.root!r} is not a declared instance")
        for role, parent, child in self.relations:
            if parent not in declared:
                raise UndeclaredReference(f"relation parent {parent!r} not declared")
            if isinstance(child, str) and child not in declared:
                raise UndeclaredReference(f"reference {child!r} not declared")

    @property
    def instance_map(self) -> dict[str, str]:
        return dict(self.instances)


# -- Penman text -> graph ----------------------------------------------------

_PENMAN_TOKEN = re.compile(
    r"""\s*(?:
        (?P<lparen>\() | (?P<rparen>\)) | (?P<slash>/) |
        (?P<role>:[^\s()/]+) |
        (?P<string>"(?:[^"\\]|\\.)*") |
        (?P<symbol>[^\s()/:"]+)
    )""",
    re.VERBOSE,
)


def _penman_tokens(text: str):
    pos = 0
    while pos < len(text):
        m = _PENMAN_TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise AmrSyntaxError(f"bad character at position {pos}: {text[pos]!r}")
            break
        pos = m.end()
        if m.lastgroup:
            yield m.lastgroup, m.group(m.lastgroup)
    yield "end", ""


def parse_penman(text: str) -> AmrGraph:
    """Parse one "(var / concept :role ...)" expression."""
    tokens = list(_penman_tokens(text))
    instances: list[tuple[str, str]] = []
    relations: list[tuple[str, str, object]] = []
    pending_refs: list[tuple[str, str, str]] = []  # (role, parent, bare symbol)
    i = 0

    def peek():
        return tokens[i]

    def take(kind):
        nonlocal i
        tok = tokens[i]
        if tok[0] != kind:
            raise AmrSyntaxError(f"expected {kind}, got {tok[1]!r}")
        i += 1
        return tok[1]

    def parse_node() -> str:
        take("lparen")
        var = take("symbol")
        take("slash")
        concept = take("symbol")
        for v, _ in instances:
            if v == var:
                raise DuplicateVariable(f"variable {var!r} declared twice")
        instances.append((var, concept))
        while peek()[0] == "role":
            role = take("role").lower()
            kind, value = peek()
            if kind == "lparen":
                child = parse_node()
                relations.append((role, var, child))
            elif kind == "string":
                take("string")
                body = value[1:-1].replace('\\"', '"').replace("\\\\", "\\")
                relations.append((role, var, Term.const(body)))
            elif kind == "symbol":
                take("symbol")
                if _NUMBER.match(value) or value in ("-", "+"):
                    relations.append((role, var, Term.const(value)))
                else:
                    relations.append((role, var, value))
                    pending_refs.append((role, var, value))
            else:
                raise AmrSyntaxError(f"expected a value after {role}, got {value!r}")
        take("rparen")
        return var

    root = parse_node()
    take("end")
    declared = {v for v, _ in instances}
    for role, parent, ref in pending_refs:
        if ref not in declared:
            raise UndeclaredReference(f"reference {ref!r} under {parent!r} not declared")
    return AmrGraph(tuple(instances), tuple(relations), root)


# -- graph -> Penman text ----------------------------------------------------

def print_penman(graph: AmrGraph) -> str:
    """Canonical rendering: relations in declaration order, 2-space indent,
    each instance inlined at its first mention."""
    children: dict[str, list[tuple[str, object]]] = {v: [] for v, _ in graph.instances}
    for role, parent, child in graph.relations:
        children[parent].append((role, child))
    concepts = graph.instance_map
    emitted: set[str] = set()

    def emit(var: str, depth: int) -> str:
        emitted.add(var)
        parts = [f"({var} / {concepts[var]}"]
        for role, child in children[var]:
            parts.append("\n" + "  " * (depth + 1) + role + " ")
            if isinstance(child, Term):
                parts.append(child.text())
            elif child in emitted:
                parts.append(child)
            else:
                parts.append(emit(child, depth + 1))
        parts.append(")")
        return "".join(parts)

    text = emit(graph.root, 0)
    if len(emitted) != len(concepts):
        missing = sorted(set(concepts) - emitted)
        raise DisconnectedGraph(f"instances unreachable from root: {missing}")
    return text


# -- graph <-> predicates ----------------------------------------------------

def to_predicates(graph: AmrGraph) -> PredicateSet:
    preds = [
        Predicate(concept, (Term.var("?" + var),)) for var, concept in graph.instances
    ]
    for role, parent, child in graph.relations:
        child_term = child if isinstance(child, Term) else Term.var("?" + child)
        preds.append(Predicate(role, (Term.var("?" + parent), child_term)))
    return PredicateSet(preds)


def from_predicates(pset: PredicateSet) -> AmrGraph:
    """Invert to_predicates.  The root is the unique instance variable that
    never appears as a child."""
    concepts: dict[str, str] = {}
    raw_relations: list[tuple[str, str, object]] = []
    for pred in pset:
        if pred.name.startswith(":"):
            if pred.arity != 2:
                raise MalformedPredicate(f"role predicate must be binary: {pred.text()}")
            parent, child = pred.args
            if not parent.is_variable:
                raise MalformedPredicate(f"role parent must be a variable: {pred.text()}")
            child_val: object
            if child.is_variable:
                child_val = child.symbol[1:]
            else:
                child_val = child
            raw_relations.append((pred.name, parent.symbol[1:], child_val))
        else:
            if pred.arity != 1:
                raise MalformedPredicate(f"concept predicate must be unary: {pred.text()}")
            (var,) = pred.args
            if not var.is_variable:
                raise MalformedPredicate(f"concept argument must be a variable: {pred.text()}")
            name = var.symbol[1:]
            if name in concepts:
                raise MalformedPredicate(f"variable ?{name} has two concepts")
            concepts[name] = pred.name

    for role, parent, child in raw_relations:
        if parent not in concepts:
            raise MalformedPredicate(f"role parent ?{parent} has no concept predicate")
        if isinstance(child, str) and child not in concepts:
            raise MalformedPredicate(f"reference ?{child} has no concept predicate")

    child_vars = {c for _, _, c in raw_relations if isinstance(c, str)}
    roots = [v for v in concepts if v not in child_vars]
    if not roots:
        raise NoRoot("every instance appears as a child; no root")
    if len(roots) > 1:
        raise MultipleRoots(f"multiple root candidates: {sorted(roots)}")
    root = roots[0]

    # Deterministic declaration order: breadth-first from the root with
    # sorted relations, so printing is canonical.
    order: list[str] = []
    rel_by_parent: dict[str, list[tuple[str, str, object]]] = {}
    for rel in sorted(
        raw_relations,
        key=lambda r: (r[0], r[1], r[2] if isinstance(r[2], str) else r[2].sort_key()),
    ):
        rel_by_parent.setdefault(rel[1], []).append(rel)

    relations: list[tuple[str, str, object]] = []
    queue = [root]
    seen = {root}
    while queue:
        var = queue.pop(0)
        order.append(var)
        for role, parent, child in rel_by_parent.get(var, []):
            relations.append((role, parent, child))
            if isinstance(child, str) and child not in seen:
                seen.add(child)
                queue.append(child)
    if len(seen) != len(concepts):
        missing = sorted(set(concepts) - seen)
        raise DisconnectedGraph(f"instances unreachable from root: {missing}")

    instances = tuple((v, concepts[v]) for v in order)
    return AmrGraph(instances, tuple(relations), root)


def relabel_variables(graph: AmrGraph) -> AmrGraph:
    """Rename instance variables to the usual compact scheme: the concept's
    first letter, with 2, 3, ... suffixes on repeats (h, h2, ...)."""
    mapping: dict[str, str] = {}
    counts: dict[str, int] = {}
    for var, concept in graph.instances:
        base = next((ch for ch in concept if ch.isalnum()), "v")
        counts[base] = counts.get(base, 0) + 1
        mapping[var] = base if counts[base] == 1 else f"{base}{counts[base]}"
    instances = tuple((mapping[v], c) for v, c in graph.instances)
    relations = tuple(
        (role, mapping[parent], mapping[child] if isinstance(child, str) else child)
        for role, parent, child in graph.relations
    )
    return AmrGraph(instances, relations, mapping[graph.root])


def is_connected(pset: PredicateSet) -> bool:
    """True iff predicates form one component when linked by shared terms.
    The empty set counts as connected."""
    preds = list(pset)
    if len(preds) <= 1:
        return True
    parent = list(range(len(preds)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    by_term: dict[Term, int] = {}
    for i, pred in enumerate(preds):
        for term in pred.args:
            if term in by_term:
                union(i, by_term[term])
            else:
                by_term[term] = i
    return len({find(i) for i in range(len(preds))}) == 1


def parse_amr_file(text: str) -> list[AmrGraph]:
    """Parse an .amr file: blank-line separated Penman blocks, '#' comment
    lines ignored."""
    lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
    blocks: list[list[str]] = [[]]
    for ln in lines:
        if ln.strip():
            blocks[-1].append(ln)
        elif blocks[-1]:
            blocks.append([])
    return [parse_penman("\n".join(block)) for block in blocks if block]

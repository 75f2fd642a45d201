"""Terms, predicates, predicate sets and the subset-matching algebra.

Everything else in the engine (utterance forms, meanings, construction
locks) is expressed with these four value types.  All values are immutable
and hashable; the operations are pure functions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

__all__ = [
    "Term",
    "Predicate",
    "PredicateSet",
    "Bindings",
    "IdSource",
    "PredicateSyntaxError",
    "substitute",
    "match_subset",
    "equal_modulo_renaming",
    "rename_fresh",
]

_BARE_CONSTANT = re.compile(r"[a-z0-9_][a-z0-9_:+.#-]*\Z|-[0-9][0-9-]*\Z")
_NAME = re.compile(r"[a-z0-9_:#.-]+\Z")


class PredicateSyntaxError(ValueError):
    """Raised when predicate text cannot be parsed."""


@dataclass(frozen=True)
class Term:
    """A constant or a variable.  Variable symbols carry the leading '?'."""

    kind: str  # "constant" | "variable"
    symbol: str

    def __post_init__(self):
        if self.kind not in ("constant", "variable"):
            raise ValueError(f"bad term kind: {self.kind!r}")
        if not self.symbol:
            raise ValueError("empty term symbol")
        if self.kind == "variable" and not self.symbol.startswith("?"):
            raise ValueError(f"variable symbol must start with '?': {self.symbol!r}")
        # Constants may contain any characters (token texts such as "?");
        # formatting quotes anything that could be mistaken for a variable.

    @staticmethod
    def var(symbol: str) -> "Term":
        if not symbol.startswith("?"):
            symbol = "?" + symbol
        return Term("variable", symbol)

    @staticmethod
    def const(symbol: str) -> "Term":
        return Term("constant", symbol)

    @property
    def is_variable(self) -> bool:
        return self.kind == "variable"

    def sort_key(self):
        return (self.kind, self.symbol)

    def text(self) -> str:
        if self.is_variable:
            return self.symbol
        if _BARE_CONSTANT.match(self.symbol):
            return self.symbol
        escaped = self.symbol.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'

    def __repr__(self):
        return self.text()


@dataclass(frozen=True)
class Predicate:
    """A named relation over one or more terms.  Names are lower-cased."""

    name: str
    args: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "name", self.name.lower())
        object.__setattr__(self, "args", tuple(self.args))
        if not _NAME.match(self.name):
            raise ValueError(f"bad predicate name: {self.name!r}")
        if len(self.args) < 1:
            raise ValueError(f"predicate {self.name!r} needs at least one argument")

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> tuple[Term, ...]:
        return tuple(a for a in self.args if a.is_variable)

    def sort_key(self):
        return (self.name, len(self.args), tuple(a.sort_key() for a in self.args))

    def text(self) -> str:
        return f"{self.name}({', '.join(a.text() for a in self.args)})"

    def __repr__(self):
        return self.text()


class PredicateSet:
    """An immutable set of predicates with deterministic iteration order."""

    __slots__ = ("_elements",)

    def __init__(self, elements: Iterable[Predicate] = ()):
        self._elements = frozenset(elements)

    @staticmethod
    def empty() -> "PredicateSet":
        return _EMPTY

    @staticmethod
    def of(*preds: Predicate) -> "PredicateSet":
        return PredicateSet(preds)

    @property
    def elements(self) -> frozenset:
        return self._elements

    def __len__(self):
        return len(self._elements)

    def __bool__(self):
        return bool(self._elements)

    def __contains__(self, pred: Predicate):
        return pred in self._elements

    def __iter__(self) -> Iterator[Predicate]:
        return iter(sorted(self._elements, key=Predicate.sort_key))

    def __eq__(self, other):
        return isinstance(other, PredicateSet) and self._elements == other._elements

    def __hash__(self):
        return hash(self._elements)

    def union(self, other: "PredicateSet | Iterable[Predicate]") -> "PredicateSet":
        other_elems = other._elements if isinstance(other, PredicateSet) else frozenset(other)
        return PredicateSet(self._elements | other_elems)

    def difference(self, other: "PredicateSet | Iterable[Predicate]") -> "PredicateSet":
        other_elems = other._elements if isinstance(other, PredicateSet) else frozenset(other)
        return PredicateSet(self._elements - other_elems)

    def issubset(self, other: "PredicateSet") -> bool:
        return self._elements <= other._elements

    def variables(self) -> tuple[Term, ...]:
        seen: dict[Term, None] = {}
        for pred in self:
            for v in pred.variables():
                seen.setdefault(v, None)
        return tuple(seen)

    def filter(self, name: str) -> "PredicateSet":
        return PredicateSet(p for p in self._elements if p.name == name)

    def text(self) -> str:
        return "{" + ", ".join(p.text() for p in self) + "}"

    def __repr__(self):
        return self.text()

    @staticmethod
    def parse(text: str) -> "PredicateSet":
        return parse_predicate_set(text)


_EMPTY = PredicateSet()


class Bindings:
    """A resolved variable-to-term map.

    Invariants: no variable maps to itself, and no value term is itself a
    key, so applying a binding twice equals applying it once.  Matching
    assumes pattern and target draw from disjoint variable spaces (callers
    inside the engine guarantee this by renaming constructions fresh).
    """

    __slots__ = ("_map",)

    def __init__(self, mapping: Mapping[Term, Term] | None = None):
        m = dict(mapping) if mapping else {}
        for k, v in m.items():
            if not k.is_variable:
                raise ValueError(f"binding key must be a variable: {k}")
            if k == v:
                raise ValueError(f"variable bound to itself: {k}")
            if v in m:
                raise ValueError(f"unresolved binding: value {v} is also a key")
        self._map = m

    @staticmethod
    def empty() -> "Bindings":
        return _EMPTY_BINDINGS

    def get(self, term: Term) -> Term | None:
        return self._map.get(term)

    def apply(self, term: Term) -> Term:
        return self._map.get(term, term)

    def extend(self, var: Term, value: Term) -> "Bindings | None":
        """New bindings with var=value, or None on conflict."""
        if var == value:
            return self
        bound = self._map.get(var)
        if bound is not None:
            return self if bound == value else None
        if value in self._map:
            return None
        m = dict(self._map)
        m[var] = value
        out = Bindings.__new__(Bindings)
        out._map = m
        return out

    def items(self):
        return sorted(self._map.items(), key=lambda kv: kv[0].sort_key())

    def __len__(self):
        return len(self._map)

    def __contains__(self, var: Term):
        return var in self._map

    def __eq__(self, other):
        return isinstance(other, Bindings) and self._map == other._map

    def __hash__(self):
        return hash(frozenset(self._map.items()))

    def __repr__(self):
        inner = ", ".join(f"{k.text()}→{v.text()}" for k, v in self.items())
        return "{" + inner + "}"


_EMPTY_BINDINGS = Bindings()


class IdSource:
    """Monotone id counter; one per search, never shared across searches."""

    __slots__ = ("_next",)

    def __init__(self, start: int = 0):
        self._next = start

    def next(self) -> int:
        n = self._next
        self._next += 1
        return n


def substitute(pset: PredicateSet, b: Bindings) -> PredicateSet:
    """Replace every bound variable by its value; other terms unchanged."""
    if not b or not pset:
        return pset
    return PredicateSet(
        Predicate(p.name, tuple(b.apply(a) for a in p.args)) for p in pset.elements
    )


def _unify_predicate(pattern: Predicate, target: Predicate, b: Bindings) -> Bindings | None:
    if pattern.name != target.name or pattern.arity != target.arity:
        return None
    for pa, ta in zip(pattern.args, target.args):
        if pa.is_variable:
            b = b.extend(pa, ta)
            if b is None:
                return None
        elif pa != ta:
            return None
    return b


def match_subset(pattern: PredicateSet, target: PredicateSet, seed: Bindings | None = None) -> list[Bindings]:
    """All bindings b extending seed with substitute(pattern, b) ⊆ target.

    Each pattern predicate is matched to a distinct target predicate
    (injective).  Constants match only equal constants; unbound variables
    match any term and become bound.  Results come back in a deterministic
    order: lexicographic in the target predicates assigned to the pattern
    predicates (pattern taken in sorted order).

    Internally the most constrained pattern predicate is matched first,
    which keeps patterns with many unbound links (token chains) cheap.
    """
    seed = seed or Bindings.empty()
    pats = sorted(pattern.elements, key=Predicate.sort_key)
    targets = sorted(target.elements, key=Predicate.sort_key)
    by_name: dict[tuple, list[int]] = {}
    for j, tgt in enumerate(targets):
        by_name.setdefault((tgt.name, tgt.arity), []).append(j)
    solutions: list[tuple[tuple, Bindings]] = []

    def candidates(pat: Predicate, b: Bindings, used: frozenset) -> list[int]:
        out = []
        for j in by_name.get((pat.name, pat.arity), ()):
            if j not in used and _unify_predicate(pat, targets[j], b) is not None:
                out.append(j)
        return out

    def walk(remaining: tuple, b: Bindings, used: frozenset, assignment: dict):
        if not remaining:
            key = tuple(
                targets[assignment[i]].sort_key() for i in range(len(pats))
            )
            solutions.append((key, b))
            return
        best_i, best_cands = None, None
        for i in remaining:
            cands = candidates(pats[i], b, used)
            if best_cands is None or len(cands) < len(best_cands):
                best_i, best_cands = i, cands
                if not cands:
                    return
        rest = tuple(i for i in remaining if i != best_i)
        for j in best_cands:
            b2 = _unify_predicate(pats[best_i], targets[j], b)
            walk(rest, b2, used | {j}, {**assignment, best_i: j})

    walk(tuple(range(len(pats))), seed, frozenset(), {})
    solutions.sort(key=lambda pair: pair[0])
    return list(dict.fromkeys(b for _, b in solutions))


def equal_modulo_renaming(a: PredicateSet, b: PredicateSet) -> bool:
    """True iff a variable bijection maps a onto b.

    Constants are rigid; a variable may only be renamed to a variable.
    """
    if len(a) != len(b):
        return False
    sig_a = sorted(_invariant_sig(p) for p in a.elements)
    sig_b = sorted(_invariant_sig(p) for p in b.elements)
    if sig_a != sig_b:
        return False

    pats = sorted(a.elements, key=Predicate.sort_key)
    targets = sorted(b.elements, key=Predicate.sort_key)

    def walk(i: int, fwd: dict, rev: dict, used: frozenset) -> bool:
        if i == len(pats):
            return True
        pat = pats[i]
        for j, tgt in enumerate(targets):
            if j in used:
                continue
            pair = _rename_predicate(pat, tgt, fwd, rev)
            if pair is None:
                continue
            if walk(i + 1, pair[0], pair[1], used | {j}):
                return True
        return False

    return walk(0, {}, {}, frozenset())


def _invariant_sig(p: Predicate):
    return (p.name, len(p.args), tuple(a.symbol if not a.is_variable else "?" for a in p.args))


def _rename_predicate(pat: Predicate, tgt: Predicate, fwd: dict, rev: dict):
    if pat.name != tgt.name or pat.arity != tgt.arity:
        return None
    fwd = dict(fwd)
    rev = dict(rev)
    for pa, ta in zip(pat.args, tgt.args):
        if pa.is_variable != ta.is_variable:
            return None
        if not pa.is_variable:
            if pa != ta:
                return None
            continue
        if fwd.get(pa, ta) != ta or rev.get(ta, pa) != pa:
            return None
        fwd[pa] = ta
        rev[ta] = pa
    return fwd, rev


def rename_fresh(pset: PredicateSet, ids: IdSource) -> PredicateSet:
    """Consistently replace every variable with a never-before-issued one."""
    variables = pset.variables()
    if not variables:
        return pset
    n = ids.next()
    mapping = Bindings({v: Term.var(f"{v.symbol}-{n}") for v in variables})
    return substitute(pset, mapping)


def fresh_renaming(variables: Iterable[Term], ids: IdSource) -> Bindings:
    """A single-id fresh renaming for an arbitrary variable collection."""
    variables = list(dict.fromkeys(variables))
    if not variables:
        return Bindings.empty()
    n = ids.next()
    return Bindings({v: Term.var(f"{v.symbol}-{n}") for v in variables})


# ---------------------------------------------------------------------------
# Textual syntax: name(arg1, arg2) with "?"-prefixed variables, quoted
# strings for constants that are not bare symbols, predicates separated by
# commas inside braces.

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<lbrace>\{) | (?P<rbrace>\}) |
        (?P<lparen>\() | (?P<rparen>\)) |
        (?P<comma>,) |
        (?P<string>"(?:[^"\\]|\\.)*") |
        (?P<symbol>[^\s(){},"]+)
    )""",
    re.VERBOSE,
)


def _tokenize_text(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PredicateSyntaxError(f"bad character at position {pos}: {text[pos]!r}")
        pos = m.end()
        if m.lastgroup:
            yield m.lastgroup, m.group(m.lastgroup)
    yield "end", ""


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize_text(text))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str):
        tok = self.tokens[self.i]
        if tok[0] != kind:
            raise PredicateSyntaxError(f"expected {kind}, got {tok[1]!r}")
        self.i += 1
        return tok[1]

    def parse_set(self) -> PredicateSet:
        self.take("lbrace")
        preds = []
        if self.peek()[0] != "rbrace":
            preds.append(self.parse_predicate())
            while self.peek()[0] == "comma":
                self.take("comma")
                preds.append(self.parse_predicate())
        self.take("rbrace")
        self.take("end")
        return PredicateSet(preds)

    def parse_predicate(self) -> Predicate:
        name = self.take("symbol")
        self.take("lparen")
        args = [self.parse_term()]
        while self.peek()[0] == "comma":
            self.take("comma")
            args.append(self.parse_term())
        self.take("rparen")
        try:
            return Predicate(name, tuple(args))
        except ValueError as exc:
            raise PredicateSyntaxError(str(exc)) from None

    def parse_term(self) -> Term:
        kind, value = self.peek()
        if kind == "string":
            self.take("string")
            body = value[1:-1].replace('\\"', '"').replace("\\\\", "\\")
            return Term.const(body)
        if kind == "symbol":
            self.take("symbol")
            if value.startswith("?"):
                if len(value) == 1:
                    raise PredicateSyntaxError("bare '?' is not a variable name")
                return Term.var(value)
            return Term.const(value)
        raise PredicateSyntaxError(f"expected a term, got {value!r}")


def parse_predicate_set(text: str) -> PredicateSet:
    """Parse "{name(arg, ...), ...}" into a PredicateSet."""
    return _Parser(text).parse_set()


def parse_predicate(text: str) -> Predicate:
    parser = _Parser(text)
    pred = parser.parse_predicate()
    parser.take("end")
    return pred


def parse_term(text: str) -> Term:
    parser = _Parser(text)
    term = parser.parse_term()
    parser.take("end")
    return term

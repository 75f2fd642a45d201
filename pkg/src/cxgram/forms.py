"""Utterance text <-> string/adjacency predicate conversion.

Tokens split on whitespace, with trailing , . ? ! peeled off into their
own tokens.  Each token gets a constant id "<base>-<n>" where base is the
lower-cased alphanumeric content of the token (empty for punctuation) and
n counts occurrences of that base left to right.
"""

from __future__ import annotations

import re

from .predicates import Predicate, PredicateSet, Term

__all__ = [
    "tokenize",
    "render_utterance",
    "split_tokens",
    "WordOrderError",
    "CyclicOrder",
    "UnderspecifiedOrder",
    "DanglingAdjacency",
    "ConflictingOrder",
    "MalformedForm",
]

_TRAILING_PUNCT = (",", ".", "?", "!")
_NO_SPACE_BEFORE = {",", ".", "?", "!"}


class WordOrderError(ValueError):
    """Base class for word-order failures during rendering."""


class CyclicOrder(WordOrderError):
    pass


class UnderspecifiedOrder(WordOrderError):
    """More than one total order satisfies the adjacency constraints."""


class DanglingAdjacency(WordOrderError):
    """An adjacency references a token id with no string predicate."""


class ConflictingOrder(WordOrderError):
    """Adjacencies branch or merge, so no total order exists at all."""


class MalformedForm(ValueError):
    pass


def split_tokens(utterance: str) -> list[str]:
    tokens: list[str] = []
    for chunk in utterance.split():
        tail: list[str] = []
        while chunk and chunk[-1] in _TRAILING_PUNCT:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(tail))
    return tokens


def _token_base(token: str) -> str:
    return re.sub(r"[^a-z0-9]", "", token.lower())


def assign_token_ids(tokens: list[str]) -> list[str]:
    counters: dict[str, int] = {}
    ids = []
    for tok in tokens:
        base = _token_base(tok)
        counters[base] = counters.get(base, 0) + 1
        ids.append(f"{base}-{counters[base]}")
    return ids


def tokenize(utterance: str) -> PredicateSet:
    """One string(id, "token") per token plus adjacent(id_i, id_i+1) pairs."""
    tokens = split_tokens(utterance)
    ids = assign_token_ids(tokens)
    preds = [
        Predicate("string", (Term.const(i), Term.const(tok)))
        for i, tok in zip(ids, tokens)
    ]
    preds.extend(
        Predicate("adjacent", (Term.const(a), Term.const(b)))
        for a, b in zip(ids, ids[1:])
    )
    return PredicateSet(preds)


def render_utterance(form: PredicateSet) -> str:
    """Order tokens along the unique adjacency chain and detokenize.

    Requires constant ids.  Raises CyclicOrder, UnderspecifiedOrder,
    ConflictingOrder or DanglingAdjacency when the adjacencies do not pin
    down exactly one total order.
    """
    strings: dict[str, str] = {}
    adjacents: list[tuple[str, str]] = []
    for pred in form:
        if pred.name == "string" and pred.arity == 2:
            tid, text = pred.args
            if tid.is_variable or text.is_variable:
                raise MalformedForm(f"non-constant string predicate: {pred.text()}")
            if tid.symbol in strings and strings[tid.symbol] != text.symbol:
                raise MalformedForm(f"token id {tid.symbol!r} bound to two texts")
            strings[tid.symbol] = text.symbol
        elif pred.name == "adjacent" and pred.arity == 2:
            a, b = pred.args
            if a.is_variable or b.is_variable:
                raise MalformedForm(f"non-constant adjacency: {pred.text()}")
            adjacents.append((a.symbol, b.symbol))
        else:
            raise MalformedForm(f"unexpected form predicate: {pred.text()}")

    if not strings:
        return ""

    succ: dict[str, str] = {}
    pred_of: dict[str, str] = {}
    for a, b in adjacents:
        if a not in strings or b not in strings:
            missing = a if a not in strings else b
            raise DanglingAdjacency(f"adjacency references unknown token id {missing!r}")
        if succ.get(a, b) != b or pred_of.get(b, a) != a:
            raise ConflictingOrder(f"token id {a!r} or {b!r} appears in conflicting adjacencies")
        succ[a] = b
        pred_of[b] = a

    starts = [tid for tid in strings if tid not in pred_of]
    if not starts:
        raise CyclicOrder("adjacency predicates form a cycle")
    if len(starts) > 1:
        raise UnderspecifiedOrder(
            f"{len(starts)} unordered token groups; more than one total order is possible"
        )

    order = [starts[0]]
    seen = {starts[0]}
    while order[-1] in succ:
        nxt = succ[order[-1]]
        if nxt in seen:
            raise CyclicOrder("adjacency predicates form a cycle")
        order.append(nxt)
        seen.add(nxt)
    if len(order) != len(strings):
        raise CyclicOrder("adjacency predicates form a cycle")

    return detokenize([strings[tid] for tid in order])


def detokenize(tokens: list[str]) -> str:
    out: list[str] = []
    for tok in tokens:
        if out and tok not in _NO_SPACE_BEFORE:
            out.append(" ")
        out.append(tok)
    return "".join(out)

"""Grammar documents: loading, validation and canonical saving.

One JSON file carries a named construction inventory plus the categorial
network, so an agent's linguistic state is a single artifact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .categorial import CategorialNetwork
from .constructions import (
    ConditionalUnit,
    Construction,
    ContributingUnit,
    Feature,
    InvalidConstruction,
)
from .predicates import (
    PredicateSyntaxError,
    Term,
    parse_predicate_set,
    parse_term,
)

__all__ = [
    "Grammar",
    "ParseError",
    "ValidationError",
    "load_grammar",
    "loads_grammar",
    "save_grammar",
    "grammar_to_document",
    "grammar_from_document",
    "demo_grammar_path",
    "load_demo_grammar",
    "demo_corpus",
    "demo_meaning_path",
]

FORMAT_VERSION = 1


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


@dataclass
class Grammar:
    name: str
    constructions: list = field(default_factory=list)
    network: CategorialNetwork = field(default_factory=CategorialNetwork)

    def construction(self, name: str) -> Construction | None:
        for c in self.constructions:
            if c.name == name:
                return c
        return None

    def copy(self) -> "Grammar":
        return Grammar(self.name, list(self.constructions), self.network.copy())


# -- feature / construction codecs -------------------------------------------

def _check_keys(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown fields {sorted(unknown)}")


def _feature_from_json(data: dict, where: str) -> Feature:
    _check_keys(data, {"name", "hashed", "value"}, where)
    try:
        name = data["name"]
        value = data["value"]
    except KeyError as exc:
        raise ValidationError(f"{where}: feature missing {exc}") from None
    hashed = bool(data.get("hashed", False))
    _check_keys(value, {"predicates", "categories", "atom"}, f"{where}.value")
    if len(value) != 1:
        raise ValidationError(f"{where}: feature value must have exactly one key")
    try:
        if "predicates" in value:
            parsed = parse_predicate_set(value["predicates"])
        elif "categories" in value:
            parsed = frozenset(value["categories"])
        else:
            parsed = parse_term(value["atom"])
    except PredicateSyntaxError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    try:
        return Feature(name, parsed, hashed)
    except InvalidConstruction as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _feature_to_json(feat: Feature) -> dict:
    out: dict = {"name": feat.name}
    if feat.hashed:
        out["hashed"] = True
    if isinstance(feat.value, frozenset):
        out["value"] = {"categories": sorted(feat.value)}
    elif isinstance(feat.value, Term):
        out["value"] = {"atom": feat.value.text()}
    else:
        out["value"] = {"predicates": feat.value.text()}
    return out


def _construction_from_json(data: dict) -> Construction:
    name = data.get("name", "<unnamed>")
    where = f"construction {name!r}"
    _check_keys(data, {"name", "score", "conditional", "contributing"}, where)
    if "name" not in data or "conditional" not in data:
        raise ValidationError(f"{where}: 'name' and 'conditional' are required")
    conditional = []
    for i, cu in enumerate(data["conditional"]):
        cu_where = f"{where}.conditional[{i}]"
        _check_keys(cu, {"unit", "production-lock", "comprehension-lock"}, cu_where)
        if "unit" not in cu:
            raise ValidationError(f"{cu_where}: missing 'unit'")
        unit_term = parse_term(cu["unit"])
        production = tuple(
            _feature_from_json(f, f"{cu_where}.production-lock")
            for f in cu.get("production-lock", [])
        )
        comprehension = tuple(
            _feature_from_json(f, f"{cu_where}.comprehension-lock")
            for f in cu.get("comprehension-lock", [])
        )
        conditional.append(ConditionalUnit(unit_term, production, comprehension))
    contributing = []
    for i, con in enumerate(data.get("contributing", [])):
        con_where = f"{where}.contributing[{i}]"
        _check_keys(con, {"unit", "features"}, con_where)
        if "unit" not in con:
            raise ValidationError(f"{con_where}: missing 'unit'")
        features = tuple(
            _feature_from_json(f, con_where) for f in con.get("features", [])
        )
        contributing.append(ContributingUnit(parse_term(con["unit"]), features))
    try:
        return Construction(
            name=data["name"],
            conditional=tuple(conditional),
            contributing=tuple(contributing),
            score=float(data.get("score", 0.5)),
        )
    except InvalidConstruction as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _construction_to_json(cxn: Construction) -> dict:
    return {
        "name": cxn.name,
        "score": cxn.score,
        "conditional": [
            {
                "unit": cu.name.text(),
                "production-lock": [_feature_to_json(f) for f in cu.production_lock],
                "comprehension-lock": [_feature_to_json(f) for f in cu.comprehension_lock],
            }
            for cu in cxn.conditional
        ],
        "contributing": [
            {
                "unit": con.name.text(),
                "features": [_feature_to_json(f) for f in con.features],
            }
            for con in cxn.contributing
        ],
    }


# -- documents ----------------------------------------------------------------

def grammar_from_document(doc: dict) -> Grammar:
    _check_keys(
        doc, {"name", "format-version", "constructions", "categorial-network"}, "grammar"
    )
    if doc.get("format-version", FORMAT_VERSION) != FORMAT_VERSION:
        raise ValidationError(f"unsupported format-version {doc.get('format-version')!r}")
    if "name" not in doc or "constructions" not in doc:
        raise ValidationError("grammar needs 'name' and 'constructions'")
    constructions = [_construction_from_json(c) for c in doc["constructions"]]
    names = [c.name for c in constructions]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate construction names")
    network_doc = doc.get("categorial-network", {"links": []})
    _check_keys(network_doc, {"links"}, "categorial-network")
    network = CategorialNetwork.from_json(network_doc)
    return Grammar(doc["name"], constructions, network)


def grammar_to_document(grammar: Grammar) -> dict:
    return {
        "name": grammar.name,
        "format-version": FORMAT_VERSION,
        "constructions": [_construction_to_json(c) for c in grammar.constructions],
        "categorial-network": grammar.network.to_json(),
    }


def loads_grammar(text: str) -> Grammar:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("grammar document must be a JSON object")
    return grammar_from_document(doc)


def load_grammar(path: str | Path) -> Grammar:
    return loads_grammar(Path(path).read_text())


def dumps_grammar(grammar: Grammar) -> str:
    return json.dumps(grammar_to_document(grammar), indent=2, sort_keys=True) + "\n"


def save_grammar(grammar: Grammar, path: str | Path) -> None:
    Path(path).write_text(dumps_grammar(grammar))


# -- bundled demo artifacts ---------------------------------------------------

def _resource_path(name: str) -> Path:
    return Path(resources.files("cxgram") / "resources" / name)


def demo_grammar_path() -> Path:
    return _resource_path("demo_grammar.json")


def demo_meaning_path() -> Path:
    return _resource_path("example_meaning.amr")


def load_demo_grammar() -> Grammar:
    return load_grammar(demo_grammar_path())


def demo_corpus() -> list[str]:
    text = _resource_path("demo_corpus.txt").read_text()
    return [line.strip() for line in text.splitlines() if line.strip()]

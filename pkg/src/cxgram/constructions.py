"""Constructions and their application to transient structures.

A construction has a conditional pole (per-direction locks on named
conditional units) and a contributing pole.  Applying it in a direction
matches the direction's locks: hashed features against the root "input"
unit, plain features against a single existing unit each.  Matched hashed
predicates move from the root to the unit that carried the lock, and the
opposite direction's locks plus the contributing features are merged into
the result, so every application both consumes input and adds the
information the other processing direction would have required.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator

from .categorial import CategorialNetwork
from .predicates import (
    Bindings,
    IdSource,
    Predicate,
    PredicateSet,
    Term,
    fresh_renaming,
    match_subset,
    substitute,
)

__all__ = [
    "COMPREHENSION",
    "PRODUCTION",
    "Feature",
    "Unit",
    "TransientStructure",
    "ConditionalUnit",
    "ContributingUnit",
    "Construction",
    "InvalidConstruction",
    "Application",
    "apply_construction",
    "apply_construction_detailed",
    "applicable",
    "initial_comprehension_structure",
    "initial_production_structure",
    "encode_structure",
]

COMPREHENSION = "comprehension"
PRODUCTION = "production"

ROOT_UNIT_NAME = "input"
_HASHABLE_FEATURES = ("form", "meaning")

# Feature values are one of: PredicateSet | frozenset[str] | Term.


class InvalidConstruction(ValueError):
    pass


@dataclass(frozen=True)
class Feature:
    name: str
    value: object
    hashed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "name", self.name.lower())
        if self.hashed and self.name not in _HASHABLE_FEATURES:
            raise InvalidConstruction(
                f"hashed is only allowed on form/meaning, not {self.name!r}"
            )
        v = self.value
        if isinstance(v, frozenset):
            if not v:
                raise InvalidConstruction(f"category set for {self.name!r} is empty")
        elif not isinstance(v, (PredicateSet, Term)):
            raise InvalidConstruction(f"bad feature value for {self.name!r}: {v!r}")

    def variables(self) -> list[Term]:
        if isinstance(self.value, PredicateSet):
            return list(self.value.variables())
        if isinstance(self.value, Term) and self.value.is_variable:
            return [self.value]
        return []

    def substituted(self, b: Bindings) -> "Feature":
        if isinstance(self.value, PredicateSet):
            return replace(self, value=substitute(self.value, b))
        if isinstance(self.value, Term):
            return replace(self, value=b.apply(self.value))
        return self


@dataclass(frozen=True)
class Unit:
    name: str
    features: tuple[tuple[str, object], ...] = ()

    def feature(self, name: str):
        for fname, value in self.features:
            if fname == name:
                return value
        return None

    def predicates(self, name: str) -> PredicateSet:
        value = self.feature(name)
        return value if isinstance(value, PredicateSet) else PredicateSet.empty()

    def with_feature(self, name: str, value) -> "Unit":
        feats = [(n, v) for n, v in self.features if n != name]
        feats.append((name, value))
        return Unit(self.name, tuple(feats))

    def feature_names(self) -> list[str]:
        return [n for n, _ in self.features]


@dataclass(frozen=True)
class TransientStructure:
    """The search state: a root "input" unit plus derived units, and the
    names of the constructions applied so far."""

    units: tuple[Unit, ...]
    history: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.units or self.units[0].name != ROOT_UNIT_NAME:
            raise ValueError("first unit must be the root 'input' unit")
        names = [u.name for u in self.units]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate unit names: {names}")

    @property
    def root(self) -> Unit:
        return self.units[0]

    @property
    def non_root_units(self) -> tuple[Unit, ...]:
        return self.units[1:]

    def unit(self, name: str) -> Unit | None:
        for u in self.units:
            if u.name == name:
                return u
        return None

    def replace_unit(self, updated: Unit) -> "TransientStructure":
        units = tuple(updated if u.name == updated.name else u for u in self.units)
        return TransientStructure(units, self.history)

    def add_unit(self, unit: Unit) -> "TransientStructure":
        return TransientStructure(self.units + (unit,), self.history)

    def with_history(self, cxn_name: str) -> "TransientStructure":
        return TransientStructure(self.units, self.history + (cxn_name,))

    def combined_feature(self, name: str, include_root: bool = False) -> PredicateSet:
        units = self.units if include_root else self.non_root_units
        out = PredicateSet.empty()
        for u in units:
            out = out.union(u.predicates(name))
        return out


def initial_comprehension_structure(form: PredicateSet) -> TransientStructure:
    root = Unit(ROOT_UNIT_NAME, (("form", form), ("meaning", PredicateSet.empty())))
    return TransientStructure((root,))


def initial_production_structure(meaning: PredicateSet) -> TransientStructure:
    root = Unit(ROOT_UNIT_NAME, (("form", PredicateSet.empty()), ("meaning", meaning)))
    return TransientStructure((root,))


@dataclass(frozen=True)
class ConditionalUnit:
    name: Term
    production_lock: tuple[Feature, ...] = ()
    comprehension_lock: tuple[Feature, ...] = ()

    def lock(self, direction: str) -> tuple[Feature, ...]:
        return self.comprehension_lock if direction == COMPREHENSION else self.production_lock

    def opposite_lock(self, direction: str) -> tuple[Feature, ...]:
        return self.production_lock if direction == COMPREHENSION else self.comprehension_lock


@dataclass(frozen=True)
class ContributingUnit:
    name: Term
    features: tuple[Feature, ...] = ()


@dataclass(frozen=True)
class Construction:
    name: str
    conditional: tuple[ConditionalUnit, ...]
    contributing: tuple[ContributingUnit, ...] = ()
    score: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.name:
            raise InvalidConstruction("construction needs a name")
        if not 0.0 <= self.score <= 1.0:
            raise InvalidConstruction(f"{self.name}: score {self.score} outside [0,1]")
        if not self.conditional:
            raise InvalidConstruction(f"{self.name}: no conditional units")
        names = []
        for cu in self.conditional:
            if not cu.name.is_variable:
                raise InvalidConstruction(
                    f"{self.name}: conditional unit name {cu.name.text()} must be a variable"
                )
            names.append(cu.name)
            for feat in cu.production_lock + cu.comprehension_lock:
                if feat.hashed and not isinstance(feat.value, PredicateSet):
                    raise InvalidConstruction(
                        f"{self.name}: hashed feature {feat.name!r} must hold predicates"
                    )
        if len(set(names)) != len(names):
            raise InvalidConstruction(f"{self.name}: duplicate conditional unit names")
        if not any(cu.production_lock or cu.comprehension_lock for cu in self.conditional):
            raise InvalidConstruction(f"{self.name}: every lock is empty")
        conditional_names = set(names)
        for cu in self.contributing:
            if cu.name not in conditional_names and not cu.name.is_variable:
                raise InvalidConstruction(
                    f"{self.name}: contributing unit {cu.name.text()} is neither a "
                    "conditional unit nor a fresh variable"
                )

    def variables(self) -> list[Term]:
        seen: dict[Term, None] = {}
        for cu in self.conditional:
            seen.setdefault(cu.name, None)
            for feat in cu.production_lock + cu.comprehension_lock:
                for v in feat.variables():
                    seen.setdefault(v, None)
        for cu in self.contributing:
            if cu.name.is_variable:
                seen.setdefault(cu.name, None)
            for feat in cu.features:
                for v in feat.variables():
                    seen.setdefault(v, None)
        return list(seen)

    def renamed_fresh(self, ids: IdSource) -> "Construction":
        mapping = fresh_renaming(self.variables(), ids)

        def rename_feats(feats):
            return tuple(f.substituted(mapping) for f in feats)

        conditional = tuple(
            ConditionalUnit(
                mapping.apply(cu.name),
                rename_feats(cu.production_lock),
                rename_feats(cu.comprehension_lock),
            )
            for cu in self.conditional
        )
        contributing = tuple(
            ContributingUnit(mapping.apply(cu.name), rename_feats(cu.features))
            for cu in self.contributing
        )
        return Construction(self.name, conditional, contributing, self.score)

    def with_score(self, score: float) -> "Construction":
        return replace(self, score=min(max(score, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Matching


@dataclass
class _MatchState:
    bindings: Bindings
    assigned: dict  # conditional-unit var symbol -> existing unit name, or None
    used_units: frozenset
    consumed: dict  # feature name -> PredicateSet (global, for exclusion)
    consumed_by_unit: dict  # cu var symbol -> {feature name: PredicateSet}
    units_matched: int
    compat_pairs: tuple


def _match_category_lock(lock_cats: frozenset, unit_cats, net: CategorialNetwork):
    """Every lock category must equal, or be network-compatible with, some
    unit category.  Returns the compatibility pairs used, or None."""
    if not isinstance(unit_cats, frozenset):
        return None
    pairs = []
    for s in sorted(lock_cats):
        if s in unit_cats:
            continue
        hit = None
        for f in sorted(unit_cats):
            if net.compatible(f, s):
                hit = (f, s)
                break
        if hit is None:
            return None
        pairs.append(hit)
    return tuple(pairs)


def _match_plain_features(feats, unit: Unit, b: Bindings, net: CategorialNetwork):
    """Match non-hashed lock features against one unit.  Yields
    (bindings, compat_pairs)."""
    states = [(b, ())]
    for feat in feats:
        next_states = []
        value = unit.feature(feat.name)
        for b2, pairs in states:
            if isinstance(feat.value, PredicateSet):
                target = value if isinstance(value, PredicateSet) else PredicateSet.empty()
                for b3 in match_subset(feat.value, target, b2):
                    next_states.append((b3, pairs))
            elif isinstance(feat.value, frozenset):
                got = _match_category_lock(feat.value, value, net)
                if got is not None:
                    next_states.append((b2, pairs + got))
            else:  # atom
                if value is None or not isinstance(value, Term):
                    continue
                lock_term = b2.apply(feat.value)
                if lock_term.is_variable:
                    b3 = b2.extend(lock_term, value)
                    if b3 is not None:
                        next_states.append((b3, pairs))
                elif lock_term == value:
                    next_states.append((b2, pairs))
        states = next_states
        if not states:
            break
    return states


def _match_construction(
    cxn: Construction, ts: TransientStructure, direction: str, net: CategorialNetwork
) -> Iterator[_MatchState]:
    """Enumerate complete lock matches, deterministically ordered.  Only
    yields matches that consume at least one hashed root predicate, so
    every application strictly shrinks the unprocessed input."""
    root = ts.root
    states = [
        _MatchState(Bindings.empty(), {}, frozenset(), {}, {}, 0, ())
    ]
    for cu in cxn.conditional:
        lock = cu.lock(direction)
        hashed = [f for f in lock if f.hashed]
        plain = [f for f in lock if not f.hashed]
        next_states: list[_MatchState] = []
        for st in states:
            # hashed features consume from the root unit's feature
            partial = [st]
            for feat in hashed:
                grown: list[_MatchState] = []
                for s2 in partial:
                    avail = root.predicates(feat.name).difference(
                        s2.consumed.get(feat.name, PredicateSet.empty())
                    )
                    for b2 in match_subset(feat.value, avail, s2.bindings):
                        eaten = substitute(feat.value, b2)
                        consumed = dict(s2.consumed)
                        consumed[feat.name] = consumed.get(
                            feat.name, PredicateSet.empty()
                        ).union(eaten)
                        per_unit = {k: dict(v) for k, v in s2.consumed_by_unit.items()}
                        mine = per_unit.setdefault(cu.name.symbol, {})
                        mine[feat.name] = mine.get(
                            feat.name, PredicateSet.empty()
                        ).union(eaten)
                        grown.append(
                            _MatchState(
                                b2, dict(s2.assigned), s2.used_units, consumed,
                                per_unit, s2.units_matched, s2.compat_pairs,
                            )
                        )
                partial = grown
            # plain features bind one existing non-root unit
            if plain:
                bound: list[_MatchState] = []
                for s2 in partial:
                    for unit in ts.non_root_units:
                        if unit.name in s2.used_units:
                            continue
                        for b3, pairs in _match_plain_features(plain, unit, s2.bindings, net):
                            b4 = b3.extend(cu.name, Term.const(unit.name))
                            if b4 is None:
                                continue
                            assigned = dict(s2.assigned)
                            assigned[cu.name.symbol] = unit.name
                            bound.append(
                                _MatchState(
                                    b4, assigned, s2.used_units | {unit.name},
                                    s2.consumed, s2.consumed_by_unit,
                                    s2.units_matched + 1, s2.compat_pairs + pairs,
                                )
                            )
                partial = bound
            next_states.extend(partial)
        states = next_states
        if not states:
            return
    for st in states:
        if any(len(ps) for ps in st.consumed.values()):
            if any(st.consumed_by_unit):
                st.units_matched += 1  # the root unit counts once
            yield st


# ---------------------------------------------------------------------------
# Building the successor structure


@dataclass(frozen=True)
class Application:
    structure: TransientStructure
    units_matched: int
    compat_pairs: tuple
    consumed: dict  # feature name -> PredicateSet taken from the root


class _Conflict(Exception):
    pass


class _Merger:
    """Adds substituted features to units, unifying atoms on the fly.

    Adding an unbound variable atom onto an existing value binds the
    variable; adding a constant over a variable rewrites that variable
    throughout the final structure; unequal constants are a conflict and
    the whole candidate is discarded.
    """

    def __init__(self, bindings: Bindings):
        self.bindings = bindings
        self.rewrites: dict[Term, Term] = {}

    def resolve(self, term: Term) -> Term:
        term = self.bindings.apply(term)
        while term in self.rewrites:
            term = self.rewrites[term]
        return term

    def substitute_set(self, pset: PredicateSet) -> PredicateSet:
        return PredicateSet(
            Predicate(p.name, tuple(self.resolve(a) for a in p.args))
            for p in pset.elements
        )

    def add_feature(self, unit: Unit, feat: Feature) -> Unit:
        existing = unit.feature(feat.name)
        if isinstance(feat.value, PredicateSet):
            incoming = self.substitute_set(feat.value)
            base = existing if isinstance(existing, PredicateSet) else PredicateSet.empty()
            return unit.with_feature(feat.name, base.union(incoming))
        if isinstance(feat.value, frozenset):
            base = existing if isinstance(existing, frozenset) else frozenset()
            return unit.with_feature(feat.name, base | feat.value)
        # atom
        incoming = self.resolve(feat.value)
        if existing is None:
            return unit.with_feature(feat.name, incoming)
        if not isinstance(existing, Term):
            raise _Conflict
        current = self.resolve(existing)
        if current == incoming:
            return unit
        if incoming.is_variable:
            extended = self.bindings.extend(incoming, current)
            if extended is None:
                raise _Conflict
            self.bindings = extended
            return unit
        if current.is_variable:
            self.rewrites[current] = incoming
            return unit
        raise _Conflict  # two unequal constants

    def finalize(self, ts: TransientStructure) -> TransientStructure:
        if not self.rewrites:
            return ts
        units = []
        for unit in ts.units:
            feats = []
            for name, value in unit.features:
                if isinstance(value, PredicateSet):
                    feats.append((name, self.substitute_set(value)))
                elif isinstance(value, Term):
                    feats.append((name, self.resolve(value)))
                else:
                    feats.append((name, value))
            units.append(Unit(unit.name, tuple(feats)))
        return TransientStructure(tuple(units), ts.history)


def _build_result(
    cxn: Construction,
    ts: TransientStructure,
    direction: str,
    state: _MatchState,
    ids: IdSource,
) -> Application | None:
    merger = _Merger(state.bindings)
    root = ts.root
    # remove consumed predicates from the root
    for feat_name, eaten in sorted(state.consumed.items()):
        root = root.with_feature(feat_name, root.predicates(feat_name).difference(eaten))
    result = ts.replace_unit(root)

    created: dict[str, str] = {}

    def target_unit_name(name_term: Term) -> str:
        resolved = merger.resolve(name_term)
        if not resolved.is_variable:
            if result.unit(resolved.symbol) is not None:
                return resolved.symbol
        key = name_term.symbol
        if key not in created:
            created[key] = f"{cxn.name}-{ids.next()}"
        return created[key]

    try:
        for cu in cxn.conditional:
            unit_name = state.assigned.get(cu.name.symbol)
            if unit_name is None:
                unit_name = target_unit_name(cu.name)
                if result.unit(unit_name) is None:
                    result = result.add_unit(Unit(unit_name))
                merger.bindings = (
                    merger.bindings.extend(cu.name, Term.const(unit_name))
                    or merger.bindings
                )
            unit = result.unit(unit_name)
            # consumed hashed predicates move into this unit
            for feat_name, eaten in sorted(
                state.consumed_by_unit.get(cu.name.symbol, {}).items()
            ):
                unit = unit.with_feature(
                    feat_name, unit.predicates(feat_name).union(merger.substitute_set(eaten))
                )
            # the opposite direction's locks are contributed
            for feat in cu.opposite_lock(direction):
                unit = merger.add_feature(unit, feat)
            result = result.replace_unit(unit)
        for con in cxn.contributing:
            unit_name = target_unit_name(con.name)
            if result.unit(unit_name) is None:
                result = result.add_unit(Unit(unit_name))
            unit = result.unit(unit_name)
            for feat in con.features:
                unit = merger.add_feature(unit, feat)
            result = result.replace_unit(unit)
    except _Conflict:
        return None

    result = merger.finalize(result).with_history(cxn.name)
    return Application(result, state.units_matched, state.compat_pairs, state.consumed)


def apply_construction_detailed(
    cxn: Construction,
    ts: TransientStructure,
    direction: str,
    ids: IdSource,
    net: CategorialNetwork | None = None,
) -> list[Application]:
    """All successor structures from applying cxn to ts in a direction,
    with match metadata.  No match yields an empty list."""
    if direction not in (COMPREHENSION, PRODUCTION):
        raise ValueError(f"bad direction: {direction!r}")
    cxn.validate()
    net = net or _EMPTY_NET
    renamed = cxn.renamed_fresh(ids)
    out = []
    for state in _match_construction(renamed, ts, direction, net):
        app = _build_result(renamed, ts, direction, state, ids)
        if app is not None:
            out.append(app)
    return out


def apply_construction(
    cxn: Construction,
    ts: TransientStructure,
    direction: str,
    ids: IdSource,
    net: CategorialNetwork | None = None,
) -> list[TransientStructure]:
    return [app.structure for app in apply_construction_detailed(cxn, ts, direction, ids, net)]


def applicable(
    cxn: Construction,
    ts: TransientStructure,
    direction: str,
    net: CategorialNetwork | None = None,
) -> bool:
    """True iff apply_construction would return a non-empty list.  Matching
    only; no successor structures are built."""
    cxn.validate()
    net = net or _EMPTY_NET
    probe = IdSource(-1_000_000)  # ids never surface: nothing is built
    renamed = cxn.renamed_fresh(probe)
    for _ in _match_construction(renamed, ts, direction, net):
        return True
    return False


_EMPTY_NET = CategorialNetwork()


# ---------------------------------------------------------------------------
# Structure identity modulo renaming (for duplicate detection in search)


def encode_structure(ts: TransientStructure) -> PredicateSet:
    """Flatten a structure into one predicate set where unit names become
    variables (except the root), so two structures are the same state iff
    their encodings are equal modulo renaming."""
    preds: list[Predicate] = []
    for unit in ts.units:
        uterm = (
            Term.const(ROOT_UNIT_NAME)
            if unit.name == ROOT_UNIT_NAME
            else Term.var(f"?unit#{unit.name}")
        )
        for name, value in unit.features:
            if isinstance(value, PredicateSet):
                for p in value.elements:
                    preds.append(Predicate(f"f#{name}#{p.name}", (uterm, *p.args)))
            elif isinstance(value, frozenset):
                for cat in value:
                    preds.append(Predicate(f"c#{name}", (uterm, Term.const(cat))))
            else:
                preds.append(Predicate(f"a#{name}", (uterm, value)))
    return PredicateSet(preds)

"""Learning machinery: executable meaning programs, intention reading by
program composition, pattern finding by anti-unification, and the
entrenchment dynamics that arbitrate between competing constructions.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from pathlib import Path

from .categorial import CategorialNetwork
from .constructions import (
    ConditionalUnit,
    Construction,
    ContributingUnit,
    Feature,
    TransientStructure,
    apply_construction_detailed,
)
from .forms import split_tokens
from .predicates import (
    IdSource,
    Predicate,
    PredicateSet,
    Term,
)

__all__ = [
    "PRIMITIVES",
    "Scene",
    "SceneObject",
    "SemanticProgram",
    "Observation",
    "EntrenchmentPolicy",
    "LearnResult",
    "EvaluationFailure",
    "InvalidProgram",
    "NoAlignment",
    "evaluate_program",
    "compose_programs",
    "shortest_tier",
    "anti_unify_utterances",
    "anti_unify_programs",
    "pattern_find",
    "update_entrenchment",
    "find_competitors",
    "make_holophrase",
    "make_item_based",
    "make_lexical",
    "scene_from_json",
    "scene_to_json",
    "load_scene_file",
    "save_scene_file",
]

# primitive name -> arity; first argument is always the output
PRIMITIVES = {
    "segment-scene": 1,
    "filter": 3,
    "unique": 2,
    "query": 3,
    "count": 2,
}


class EvaluationFailure(RuntimeError):
    pass


class InvalidProgram(ValueError):
    pass


class NoAlignment(ValueError):
    pass


@dataclass(frozen=True)
class SceneObject:
    id: str
    attributes: tuple[tuple[str, str], ...]

    @staticmethod
    def of(id: str, **attributes: str) -> "SceneObject":
        return SceneObject(id, tuple(sorted(attributes.items())))

    @property
    def attribute_map(self) -> dict[str, str]:
        return dict(self.attributes)


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate object ids: {ids}")
        keysets = {tuple(k for k, _ in o.attributes) for o in self.objects}
        if len(keysets) > 1:
            raise ValueError("every object must carry the same attributes")

    @property
    def attribute_names(self) -> tuple[str, ...]:
        if not self.objects:
            return ()
        return tuple(k for k, _ in self.objects[0].attributes)

    def values(self) -> tuple[str, ...]:
        return tuple(sorted({v for o in self.objects for _, v in o.attributes}))


def scene_from_json(data: list) -> Scene:
    return Scene(
        tuple(SceneObject(o["id"], tuple(sorted(o["attributes"].items()))) for o in data)
    )


def scene_to_json(scene: Scene) -> list:
    return [{"id": o.id, "attributes": o.attribute_map} for o in scene.objects]


def load_scene_file(path) -> Scene:
    """Scene files are a JSON list of objects with attribute maps."""
    return scene_from_json(json.loads(Path(path).read_text()))


def save_scene_file(scene: Scene, path) -> None:
    Path(path).write_text(json.dumps(scene_to_json(scene), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Semantic programs


@dataclass(frozen=True)
class SemanticProgram:
    predicates: PredicateSet
    target: Term

    def __post_init__(self):
        _validate_program(self.predicates, self.target)

    @staticmethod
    def from_predicates(pset: PredicateSet) -> "SemanticProgram":
        produced, consumed = _dataflow(pset)
        targets = [v for v in produced if v not in consumed]
        if len(targets) != 1:
            raise InvalidProgram(f"expected exactly one target, found {len(targets)}")
        return SemanticProgram(pset, targets[0])

    def signature(self) -> str:
        return f"{self.predicates.text()} -> {self.target.text()}"

    def __len__(self):
        return len(self.predicates)


def _dataflow(pset: PredicateSet):
    produced: dict[Term, Predicate] = {}
    consumed: dict[Term, None] = {}
    segments = 0
    for pred in pset:
        if pred.name not in PRIMITIVES:
            raise InvalidProgram(f"unknown primitive: {pred.name}")
        if pred.arity != PRIMITIVES[pred.name]:
            raise InvalidProgram(f"{pred.name} expects {PRIMITIVES[pred.name]} arguments")
        out = pred.args[0]
        if not out.is_variable:
            raise InvalidProgram(f"{pred.name} output must be a variable")
        if out in produced:
            raise InvalidProgram(f"variable {out.text()} produced twice")
        produced[out] = pred
        if pred.name == "segment-scene":
            segments += 1
        else:
            src = pred.args[1]
            if not src.is_variable:
                raise InvalidProgram(f"{pred.name} input must be a variable")
            consumed.setdefault(src, None)
        # filter/query parameters may be variables inside slotted templates;
        # evaluation requires them ground
    if segments != 1:
        raise InvalidProgram("a program needs exactly one segment-scene source")
    for src in consumed:
        if src not in produced:
            raise InvalidProgram(f"variable {src.text()} consumed but never produced")
    # acyclicity: walk inputs back to the segment source
    for pred in pset:
        seen = set()
        cur = pred
        while cur.name != "segment-scene":
            if cur.args[0] in seen:
                raise InvalidProgram("cyclic dataflow")
            seen.add(cur.args[0])
            cur = produced[cur.args[1]]
    return list(produced), list(consumed)


def _validate_program(pset: PredicateSet, target: Term):
    produced, consumed = _dataflow(pset)
    if target not in produced or target in consumed:
        raise InvalidProgram(f"target {target.text()} is not the program's result")


def dataflow_order(program: SemanticProgram) -> list[Predicate]:
    """Predicates ordered source-first along the consumption chain."""
    preds = list(program.predicates)
    by_output = {p.args[0]: p for p in preds}
    depth: dict[Term, int] = {}

    def depth_of(pred: Predicate) -> int:
        if pred.name == "segment-scene":
            return 0
        key = pred.args[0]
        if key not in depth:
            depth[key] = depth_of(by_output[pred.args[1]]) + 1
        return depth[key]

    return sorted(preds, key=lambda p: (depth_of(p), p.sort_key()))


def evaluate_program(program: SemanticProgram, scene: Scene):
    """Execute the dataflow over a scene; the answer is the target binding."""
    env: dict[Term, object] = {}
    for pred in dataflow_order(program):
        if pred.name == "segment-scene":
            env[pred.args[0]] = list(scene.objects)
            continue
        source = env[pred.args[1]]
        if pred.name == "filter":
            if not isinstance(source, list):
                raise EvaluationFailure("filter expects an object set")
            if pred.args[2].is_variable:
                raise EvaluationFailure("unbound filter parameter")
            category = pred.args[2].symbol
            env[pred.args[0]] = [
                o for o in source if category in o.attribute_map.values()
            ]
        elif pred.name == "unique":
            if not isinstance(source, list):
                raise EvaluationFailure("unique expects an object set")
            if len(source) != 1:
                raise EvaluationFailure(f"unique over a set of size {len(source)}")
            env[pred.args[0]] = source[0]
        elif pred.name == "query":
            if not isinstance(source, SceneObject):
                raise EvaluationFailure("query expects a single object")
            if pred.args[2].is_variable:
                raise EvaluationFailure("unbound query parameter")
            attribute = pred.args[2].symbol
            value = source.attribute_map.get(attribute)
            if value is None:
                raise EvaluationFailure(f"object has no attribute {attribute!r}")
            env[pred.args[0]] = value
        elif pred.name == "count":
            if not isinstance(source, list):
                raise EvaluationFailure("count expects an object set")
            env[pred.args[0]] = str(len(source))
    return env[program.target]


def _chain_program(steps: list[tuple[str, str | None]]) -> SemanticProgram:
    """Build a linear program from (primitive, parameter) steps."""
    preds = [Predicate("segment-scene", (Term.var("?src"),))]
    current = Term.var("?src")
    for k, (op, param) in enumerate(steps):
        if op == "filter":
            out = Term.var(f"?set{k}")
            preds.append(Predicate("filter", (out, current, Term.const(param))))
        elif op == "unique":
            out = Term.var(f"?obj{k}")
            preds.append(Predicate("unique", (out, current)))
        elif op == "query":
            out = Term.var(f"?ans{k}")
            preds.append(Predicate("query", (out, current, Term.const(param))))
        else:
            out = Term.var(f"?num{k}")
            preds.append(Predicate("count", (out, current)))
        current = out
    return SemanticProgram(PredicateSet(preds), current)


def compose_programs(
    scene: Scene,
    answer: str,
    max_length: int = 4,
    categories: tuple[str, ...] | None = None,
    attributes: tuple[str, ...] | None = None,
) -> list[SemanticProgram]:
    """Every well-formed program of at most max_length primitives whose
    evaluation on the scene yields the answer, shortest first.

    Categories and attributes default to the values observable in the
    scene itself."""
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    cats = categories if categories is not None else scene.values()
    attrs = attributes if attributes is not None else tuple(sorted(scene.attribute_names))

    chains: list[list[tuple[str, str | None]]] = []

    def grow(steps: list, holding: str, budget: int):
        chains.append(list(steps))
        if budget == 0:
            return
        if holding == "set":
            for cat in cats:
                grow(steps + [("filter", cat)], "set", budget - 1)
            grow(steps + [("unique", None)], "object", budget - 1)
            grow(steps + [("count", None)], "value", budget - 1)
        elif holding == "object":
            for attr in attrs:
                grow(steps + [("query", attr)], "value", budget - 1)

    grow([], "set", max_length - 1)

    matching = []
    for steps in chains:
        program = _chain_program(steps)
        try:
            result = evaluate_program(program, scene)
        except EvaluationFailure:
            continue
        if isinstance(result, str) and result == answer:
            matching.append(program)
    matching.sort(key=lambda p: (len(p), p.signature()))
    return matching


def shortest_tier(programs: list[SemanticProgram]) -> list[SemanticProgram]:
    if not programs:
        return []
    shortest = len(programs[0])
    return [p for p in programs if len(p) == shortest]


# ---------------------------------------------------------------------------
# Anti-unification


@dataclass(frozen=True)
class UtteranceAlignment:
    skeleton: tuple[str | None, ...]  # None marks the slot
    filler_a: tuple[str, ...]
    filler_b: tuple[str, ...]

    def pattern_name(self) -> str:
        words = [t for t in self.skeleton if t is not None and _WORD.match(t)]
        slot_index = self.skeleton.index(None)
        head = [t for t in self.skeleton[:slot_index] if t is not None and _WORD.match(t)]
        tail = [t for t in self.skeleton[slot_index + 1:] if t is not None and _WORD.match(t)]
        return "-".join(head + ["?x"] + tail)


_WORD = re.compile(r"[a-z0-9]")


def anti_unify_utterances(u1: str, u2: str) -> UtteranceAlignment:
    """Generalize two utterances differing in exactly one contiguous,
    non-empty token region into a one-slot pattern."""
    a = [t.lower() for t in split_tokens(u1)]
    b = [t.lower() for t in split_tokens(u2)]
    opcodes = SequenceMatcher(a=a, b=b, autojunk=False).get_opcodes()
    diffs = [op for op in opcodes if op[0] != "equal"]
    if not diffs:
        raise NoAlignment("utterances are identical")
    if len(diffs) > 1:
        raise NoAlignment(f"{len(diffs)} difference regions, need exactly one")
    tag, i1, i2, j1, j2 = diffs[0]
    if tag != "replace":
        raise NoAlignment("difference region is empty on one side")
    if i1 == 0 and i2 == len(a) and j1 == 0 and j2 == len(b):
        raise NoAlignment("no shared token skeleton")
    skeleton = tuple(a[:i1]) + (None,) + tuple(a[i2:])
    return UtteranceAlignment(skeleton, tuple(a[i1:i2]), tuple(b[j1:j2]))


@dataclass(frozen=True)
class ProgramAlignment:
    template: SemanticProgram  # contains the slot variable ?x
    filler_a: Term
    filler_b: Term

    slot_var: Term = Term.var("?x")


def anti_unify_programs(m1: SemanticProgram, m2: SemanticProgram) -> ProgramAlignment:
    """Generalize two programs that are isomorphic except for one constant
    argument into a slotted template."""
    seq1 = dataflow_order(m1)
    seq2 = dataflow_order(m2)
    if len(seq1) != len(seq2):
        raise NoAlignment("programs have different primitive counts")
    mismatches: list[tuple[int, int, Term, Term]] = []
    var_map: dict[Term, Term] = {}
    for idx, (p1, p2) in enumerate(zip(seq1, seq2)):
        if p1.name != p2.name or p1.arity != p2.arity:
            raise NoAlignment(f"primitive mismatch at step {idx}")
        for argpos, (a1, a2) in enumerate(zip(p1.args, p2.args)):
            if a1.is_variable != a2.is_variable:
                raise NoAlignment("variable/constant mismatch")
            if a1.is_variable:
                if var_map.setdefault(a1, a2) != a2:
                    raise NoAlignment("inconsistent variable correspondence")
            elif a1 != a2:
                mismatches.append((idx, argpos, a1, a2))
    if len(mismatches) != 1:
        raise NoAlignment(f"{len(mismatches)} constant mismatches, need exactly one")
    idx, argpos, c1, c2 = mismatches[0]
    slot = Term.var("?x")
    templated = []
    for i, pred in enumerate(seq1):
        if i == idx:
            args = tuple(slot if k == argpos else a for k, a in enumerate(pred.args))
            templated.append(Predicate(pred.name, args))
        else:
            templated.append(pred)
    template = SemanticProgram(PredicateSet(templated), m1.target)
    return ProgramAlignment(template, c1, c2)


# ---------------------------------------------------------------------------
# Construction builders


def _token_pattern(tokens: list[str]) -> tuple[PredicateSet, Term, Term]:
    """string/adjacent predicates over variable token ids; returns the
    pattern with its leftmost and rightmost id variables."""
    ids = [Term.var(f"?t{i}") for i in range(len(tokens))]
    preds = [
        Predicate("string", (tid, Term.const(tok))) for tid, tok in zip(ids, tokens)
    ]
    preds.extend(
        Predicate("adjacent", (a, b)) for a, b in zip(ids, ids[1:])
    )
    return PredicateSet(preds), ids[0], ids[-1]


def _digest(text: str) -> str:
    return hashlib.md5(text.encode()).hexdigest()[:8]


def _slug(tokens: list[str]) -> str:
    words = [t for t in tokens if _WORD.match(t)]
    return "-".join(words) if words else "blank"


def make_holophrase(utterance: str, program: SemanticProgram, score: float = 0.5) -> Construction:
    tokens = [t.lower() for t in split_tokens(utterance)]
    if not tokens:
        raise ValueError("cannot build a holophrase from an empty utterance")
    pattern, left, right = _token_pattern(tokens)
    # "utt-" sorts after "lex-", so at equal scores a compositional
    # analysis is explored before the stored whole-utterance mapping
    name = f"utt-{_slug(tokens)}-{_digest(program.signature())}-cxn"
    return Construction(
        name,
        conditional=(
            ConditionalUnit(
                Term.var("?holo-unit"),
                production_lock=(Feature("meaning", program.predicates, hashed=True),),
                comprehension_lock=(Feature("form", pattern, hashed=True),),
            ),
        ),
        contributing=(
            ContributingUnit(
                Term.var("?holo-unit"),
                (
                    Feature("category", frozenset({"question"})),
                    Feature("referent", program.target),
                    Feature("left", left),
                    Feature("right", right),
                ),
            ),
        ),
        score=score,
    )


def make_item_based(
    alignment: UtteranceAlignment,
    template: SemanticProgram,
    slot_category: str,
    score: float = 0.5,
) -> Construction:
    """An item-based construction: the skeleton tokens plus one slot unit
    whose category must be network-compatible with the slot category and
    whose sem atom fills the template's slot variable."""
    skeleton = alignment.skeleton
    slot_index = skeleton.index(None)
    fl, fr = Term.var("?fl"), Term.var("?fr")
    ids: list[Term] = []
    preds: list[Predicate] = []
    for i, tok in enumerate(skeleton):
        if tok is None:
            ids.append(None)
        else:
            tid = Term.var(f"?t{i}")
            ids.append(tid)
            preds.append(Predicate("string", (tid, Term.const(tok))))
    for left_tok, right_tok in zip(ids, ids[1:]):
        if left_tok is None:
            preds.append(Predicate("adjacent", (fr, right_tok)))
        elif right_tok is None:
            preds.append(Predicate("adjacent", (left_tok, fl)))
        else:
            preds.append(Predicate("adjacent", (left_tok, right_tok)))
    left_bound = ids[0] if ids[0] is not None else fl
    right_bound = ids[-1] if ids[-1] is not None else fr
    name = f"{alignment.pattern_name()}-cxn"
    return Construction(
        name,
        conditional=(
            ConditionalUnit(
                Term.var("?slot-unit"),
                production_lock=(
                    Feature("category", frozenset({slot_category})),
                    Feature("sem", Term.var("?x")),
                ),
                comprehension_lock=(
                    Feature("category", frozenset({slot_category})),
                    Feature("sem", Term.var("?x")),
                    Feature("left", fl),
                    Feature("right", fr),
                ),
            ),
            ConditionalUnit(
                Term.var("?frame-unit"),
                production_lock=(Feature("meaning", template.predicates, hashed=True),),
                comprehension_lock=(Feature("form", PredicateSet(preds), hashed=True),),
            ),
        ),
        contributing=(
            ContributingUnit(
                Term.var("?frame-unit"),
                (
                    Feature("category", frozenset({"question"})),
                    Feature("referent", template.target),
                    Feature("left", left_bound),
                    Feature("right", right_bound),
                ),
            ),
        ),
        score=score,
    )


def make_lexical(token: str, category: str, score: float = 0.5) -> Construction:
    return Construction(
        f"lex-{token}-cxn",
        conditional=(
            ConditionalUnit(
                Term.var("?filler-unit"),
                comprehension_lock=(
                    Feature(
                        "form",
                        PredicateSet.of(
                            Predicate("string", (Term.var("?u"), Term.const(token)))
                        ),
                        hashed=True,
                    ),
                ),
            ),
        ),
        contributing=(
            ContributingUnit(
                Term.var("?filler-unit"),
                (
                    Feature("category", frozenset({category})),
                    Feature("sem", Term.const(category)),
                    Feature("left", Term.var("?u")),
                    Feature("right", Term.var("?u")),
                ),
            ),
        ),
        score=score,
    )


# ---------------------------------------------------------------------------
# Pattern finding


@dataclass(frozen=True)
class Observation:
    utterance: str
    meaning: SemanticProgram
    answer: str


@dataclass
class LearnResult:
    constructions: list = field(default_factory=list)
    links: list = field(default_factory=list)  # (filler category, slot category)
    memory: list = field(default_factory=list)
    generalized: bool = False


def _aligned_fillers(alignment: UtteranceAlignment, program_align: ProgramAlignment) -> bool:
    """The utterance filler must name the program filler on both sides;
    this keeps pattern finding from pairing a word with someone else's
    meaning (single-token fillers only)."""
    return (
        len(alignment.filler_a) == 1
        and len(alignment.filler_b) == 1
        and alignment.filler_a[0] == program_align.filler_a.symbol
        and alignment.filler_b[0] == program_align.filler_b.symbol
    )


def _slot_category(alignment: UtteranceAlignment) -> str:
    return f"{alignment.pattern_name()}(?x)"


def _find_existing_item_based(inventory, name: str, template: SemanticProgram):
    for cxn in inventory:
        if cxn.name == name:
            return cxn
    return None


def _existing_slot_category(cxn: Construction) -> str:
    for cu in cxn.conditional:
        for feat in cu.production_lock:
            if feat.name == "category" and isinstance(feat.value, frozenset):
                return next(iter(feat.value))
    raise ValueError(f"{cxn.name} has no slot category")


def pattern_find(
    new: Observation,
    memory: list,
    net: CategorialNetwork,
    inventory: list | None = None,
    policy: "EntrenchmentPolicy | None" = None,
) -> LearnResult:
    """Generalize the new observation against memory.

    The first stored observation whose utterance and program both
    anti-unify with aligned slots yields one item-based construction (or
    reuses an equivalent existing one), a lexical construction per
    previously-unlexicalized filler, and filler-slot categorial links.
    With no alignment the observation is stored as a holophrase."""
    inventory = inventory or []
    initial = policy.initial if policy else 0.5
    result = LearnResult(memory=list(memory))
    existing_names = {c.name for c in inventory}
    new_sig = (new.utterance, new.meaning.signature())
    remembered = any((o.utterance, o.meaning.signature()) == new_sig for o in memory)
    if not remembered:
        result.memory.append(new)

    for old in memory:
        if old.utterance == new.utterance:
            continue  # identical utterances never align
        try:
            utter_align = anti_unify_utterances(new.utterance, old.utterance)
            prog_align = anti_unify_programs(new.meaning, old.meaning)
        except NoAlignment:
            continue
        if not _aligned_fillers(utter_align, prog_align):
            continue
        slot_cat = _slot_category(utter_align)
        item_based = make_item_based(utter_align, prog_align.template, slot_cat, initial)
        existing = _find_existing_item_based(inventory, item_based.name, prog_align.template)
        if existing is not None:
            slot_cat = _existing_slot_category(existing)
        else:
            result.constructions.append(item_based)
        for filler in (prog_align.filler_a, prog_align.filler_b):
            lexical = make_lexical(filler.symbol, filler.symbol, initial)
            if lexical.name not in existing_names and all(
                c.name != lexical.name for c in result.constructions
            ):
                result.constructions.append(lexical)
            if not net.has_link(filler.symbol, slot_cat):
                result.links.append((filler.symbol, slot_cat))
        result.generalized = True
        return result

    holophrase = make_holophrase(new.utterance, new.meaning, initial)
    if holophrase.name not in existing_names:
        result.constructions.append(holophrase)
    return result


# ---------------------------------------------------------------------------
# Entrenchment


@dataclass(frozen=True)
class EntrenchmentPolicy:
    initial: float = 0.5
    reward: float = 0.1
    punish: float = -0.1
    inhibit: float = -0.1
    floor: float = 0.0
    ceiling: float = 1.0

    def __post_init__(self):
        if not self.floor <= self.initial <= self.ceiling:
            raise ValueError("initial score must sit between floor and ceiling")

    def clamp(self, score: float) -> float:
        # quantized so chains of +/-0.1 updates land exactly on the floor
        return round(min(max(score, self.floor), self.ceiling), 9)


def update_entrenchment(
    inventory: list,
    used: set,
    success: bool,
    policy: EntrenchmentPolicy,
    competitors: set = frozenset(),
    evict: bool = True,
) -> list:
    """Reward used constructions on success (inhibiting competitors),
    punish them on failure; scores clamp to [floor, ceiling] and
    constructions landing on the floor are evicted."""
    updated = []
    for cxn in inventory:
        score = cxn.score
        if cxn.name in used:
            score += policy.reward if success else policy.punish
        elif success and cxn.name in competitors:
            score += policy.inhibit
        score = policy.clamp(score)
        if evict and score <= policy.floor and (
            cxn.name in used or (success and cxn.name in competitors)
        ):
            continue
        updated.append(cxn.with_score(score) if score != cxn.score else cxn)
    return updated


def find_competitors(
    inventory: list,
    used: set,
    initial_structure: TransientStructure,
    direction: str,
    net: CategorialNetwork,
    consumed: PredicateSet,
) -> set:
    """Constructions that were not used but whose direction locks match the
    initial structure while overlapping the used constructions' consumed
    predicates."""
    out = set()
    consumed_elements = consumed.elements
    ids = IdSource(900_000)
    for cxn in inventory:
        if cxn.name in used:
            continue
        for app in apply_construction_detailed(cxn, initial_structure, direction, ids, net):
            overlap = False
            for eaten in app.consumed.values():
                if eaten.elements & consumed_elements:
                    overlap = True
                    break
            if overlap:
                out.add(cxn.name)
                break
    return out

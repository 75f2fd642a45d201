"""Tutor-learner question-answering games over generated scenes.

Each interaction walks the communicative cycle: the tutor picks a question
it can evaluate on the scene and produces the utterance; the learner
comprehends, evaluates and answers; feedback drives intention reading,
pattern finding and entrenchment updates on the learner's side.
"""

from __future__ import annotations

import io
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .categorial import CategorialNetwork
from .constructions import COMPREHENSION, initial_comprehension_structure
from .forms import split_tokens, tokenize
from .grammar_io import Grammar
from .learning import (
    EntrenchmentPolicy,
    EvaluationFailure,
    InvalidProgram,
    Observation,
    Scene,
    SceneObject,
    SemanticProgram,
    compose_programs,
    evaluate_program,
    find_competitors,
    make_holophrase,
    pattern_find,
    shortest_tier,
    update_entrenchment,
)
from .predicates import parse_predicate_set
from .search import (
    EmptyInput,
    SearchConfig,
    SearchExhausted,
    comprehend_detailed,
    produce_detailed,
)

__all__ = [
    "DEFAULT_ATTRIBUTES",
    "Agent",
    "GameConfig",
    "InteractionRecord",
    "ExperimentResult",
    "QuestionTemplate",
    "TutorFailure",
    "build_question_templates",
    "build_tutor",
    "build_learner",
    "generate_scene",
    "run_interaction",
    "run_experiment",
    "records_to_csv",
    "load_game_config",
]

DEFAULT_ATTRIBUTES = {
    "shape": ("car", "sheep", "cube", "ball", "sphere", "cylinder"),
    "colour": ("red", "blue", "green", "yellow", "purple", "gray"),
    "size": ("small", "medium", "large"),
    "material": ("metal", "rubber", "wood"),
}


class TutorFailure(RuntimeError):
    """The tutor could not produce an utterance: its grammar is broken."""


@dataclass(frozen=True)
class QuestionTemplate:
    utterance: str
    program: SemanticProgram


@dataclass
class Agent:
    id: str
    inventory: list = field(default_factory=list)
    network: CategorialNetwork = field(default_factory=CategorialNetwork)
    memory: list = field(default_factory=list)
    policy: EntrenchmentPolicy = field(default_factory=EntrenchmentPolicy)
    templates: tuple = ()
    learns: bool = True

    def grammar(self) -> Grammar:
        return Grammar(self.id, self.inventory, self.network)


@dataclass(frozen=True)
class GameConfig:
    seed: int = 0
    interactions: int = 2000
    scene_size: int = 6
    window: int = 100
    attributes: dict = field(default_factory=lambda: dict(DEFAULT_ATTRIBUTES))
    policy: EntrenchmentPolicy = field(default_factory=EntrenchmentPolicy)
    search: SearchConfig | None = None
    max_program_length: int = 4
    max_hypotheses: int = 6

    def __post_init__(self):
        if self.interactions < self.window:
            raise ValueError("interaction count must be at least the window size")
        if self.scene_size < 0:
            raise ValueError("scene_size must be >= 0")
        if self.max_hypotheses < 1:
            raise ValueError("max_hypotheses must be >= 1")


def load_game_config(path: str | Path) -> GameConfig:
    data = json.loads(Path(path).read_text())
    policy = EntrenchmentPolicy(**data.get("policy", {}))
    search = None
    if "search" in data:
        s = data["search"]
        search = SearchConfig(
            goal_tests=frozenset(s.get("goal-tests", ["all-processed", "connected-meaning"])),
            w_depth=s.get("w-depth", 1.0),
            w_units=s.get("w-units", 1.0),
            max_nodes=s.get("max-nodes", 10_000),
            max_depth=s.get("max-depth", 64),
        )
    attributes = {
        name: tuple(values)
        for name, values in data.get("attributes", DEFAULT_ATTRIBUTES).items()
    }
    return GameConfig(
        seed=data.get("seed", 0),
        interactions=data.get("interactions", 2000),
        scene_size=data.get("scene-size", 6),
        window=data.get("window", 100),
        attributes=attributes,
        policy=policy,
        search=search,
        max_program_length=data.get("max-program-length", 4),
        max_hypotheses=data.get("max-hypotheses", 6),
    )


# -- world ---------------------------------------------------------------------


def generate_scene(rng: random.Random, config: GameConfig) -> Scene:
    objects = []
    for i in range(config.scene_size):
        attrs = {
            name: rng.choice(values)
            for name, values in sorted(config.attributes.items())
        }
        objects.append(SceneObject.of(f"obj-{i}", **attrs))
    return Scene(tuple(objects))


# -- tutor ----------------------------------------------------------------------


def _template_program(steps_text: str) -> SemanticProgram:
    return SemanticProgram.from_predicates(parse_predicate_set(steps_text))


def build_question_templates(attributes: dict) -> tuple[QuestionTemplate, ...]:
    """The tutor's question repertoire: attribute queries about each shape
    plus count questions for shapes and colours."""
    shapes = attributes["shape"]
    colours = attributes["colour"]
    templates = []
    for shape in shapes:
        for attr in ("colour", "size", "material"):
            templates.append(
                QuestionTemplate(
                    f"what is the {attr} of the {shape} ?",
                    _template_program(
                        "{segment-scene(?src), filter(?set1, ?src, %s),"
                        " unique(?obj2, ?set1), query(?ans3, ?obj2, %s)}" % (shape, attr)
                    ),
                )
            )
        templates.append(
            QuestionTemplate(
                f"how many {shape} are there ?",
                _template_program(
                    "{segment-scene(?src), filter(?set1, ?src, %s), count(?num2, ?set1)}"
                    % shape
                ),
            )
        )
    for colour in colours:
        templates.append(
            QuestionTemplate(
                f"how many {colour} things are there ?",
                _template_program(
                    "{segment-scene(?src), filter(?set1, ?src, %s), count(?num2, ?set1)}"
                    % colour
                ),
            )
        )
    return tuple(templates)


def build_tutor(config: GameConfig) -> Agent:
    templates = build_question_templates(config.attributes)
    inventory = [
        make_holophrase(t.utterance, t.program, config.policy.initial) for t in templates
    ]
    return Agent(
        id="tutor",
        inventory=inventory,
        policy=config.policy,
        templates=templates,
        learns=False,
    )


def build_learner(config: GameConfig) -> Agent:
    return Agent(id="learner", policy=config.policy)


# -- one interaction --------------------------------------------------------------


@dataclass(frozen=True)
class InteractionRecord:
    index: int
    success: bool
    inventory_size: int
    learned_count: int


def _tutor_question(tutor: Agent, scene: Scene, rng: random.Random):
    candidates = []
    for template in tutor.templates:
        try:
            answer = evaluate_program(template.program, scene)
        except EvaluationFailure:
            continue
        candidates.append((template, answer))
    if not candidates:
        raise TutorFailure("no tutor question is evaluable on this scene")
    return rng.choice(candidates)


def _learner_answer(learner: Agent, utterance: str, scene: Scene, config: GameConfig):
    """Comprehend and evaluate; returns (answer or None, solution or None)."""
    try:
        meaning, result = comprehend_detailed(utterance, learner.grammar(), config.search)
    except (SearchExhausted, EmptyInput):
        return None, None
    try:
        program = SemanticProgram.from_predicates(meaning)
        return evaluate_program(program, scene), result
    except (InvalidProgram, EvaluationFailure):
        return None, result


def _grounded_hypotheses(utterance: str, programs: list, limit: int) -> list:
    """Prefer hypotheses whose constant parameters all surface as tokens of
    the utterance (cross-situational alignment); fall back to the shortest
    tier as-is when nothing qualifies."""
    tokens = {t.lower() for t in split_tokens(utterance)}
    grounded = []
    for program in programs:
        constants = [
            a.symbol
            for pred in program.predicates
            for a in pred.args
            if not a.is_variable
        ]
        if all(c in tokens for c in constants):
            grounded.append(program)
    return (grounded or programs)[:limit]


def _learn_from_failure(learner: Agent, utterance: str, answer: str, scene: Scene, config: GameConfig) -> int:
    hypotheses = _grounded_hypotheses(
        utterance,
        shortest_tier(compose_programs(scene, answer, config.max_program_length)),
        config.max_hypotheses,
    )
    learned = 0
    for hypothesis in hypotheses:
        observation = Observation(utterance, hypothesis, answer)
        result = pattern_find(
            observation,
            learner.memory,
            learner.network,
            inventory=learner.inventory,
            policy=learner.policy,
        )
        learner.inventory.extend(result.constructions)
        learned += len(result.constructions)
        for a, b in result.links:
            learner.network.add_link(a, b, learner.policy.initial)
        learner.memory = result.memory
    return learned


def run_interaction(
    tutor: Agent,
    learner: Agent,
    scene: Scene,
    rng: random.Random,
    config: GameConfig,
    index: int = 0,
) -> InteractionRecord:
    template, expected = _tutor_question(tutor, scene, rng)
    try:
        utterance, production = produce_detailed(
            template.program.predicates, tutor.grammar()
        )
    except (SearchExhausted, EmptyInput, ValueError) as exc:
        raise TutorFailure(f"tutor cannot produce {template.utterance!r}: {exc}") from exc

    answer, solution = _learner_answer(learner, utterance, scene, config)
    success = answer == expected

    learned = 0
    if not success:
        learned = _learn_from_failure(learner, utterance, expected, scene, config)

    # entrenchment updates on both sides, for the constructions each used
    if solution is not None and solution.applied:
        used = set(solution.applied)
        competitors = set()
        if success:
            competitors = find_competitors(
                learner.inventory,
                used,
                initial_comprehension_structure(tokenize(utterance)),
                COMPREHENSION,
                learner.network,
                solution.consumed,
            )
        learner.inventory = update_entrenchment(
            learner.inventory, used, success, learner.policy, competitors, evict=True
        )
        delta = learner.policy.reward if success else learner.policy.punish
        for filler_cat, slot_cat in solution.compat_pairs:
            learner.network.adjust_weight(filler_cat, slot_cat, delta)
    tutor.inventory = update_entrenchment(
        tutor.inventory, set(production.applied), success, tutor.policy, evict=False
    )

    return InteractionRecord(index, success, len(learner.inventory), learned)


# -- the experiment loop -----------------------------------------------------------


@dataclass
class ExperimentResult:
    records: list
    windowed_success: list
    tutor: Agent
    learner: Agent

    def final_window_success(self) -> float:
        return self.windowed_success[-1] if self.windowed_success else 0.0

    def inventory_series(self) -> list:
        return [r.inventory_size for r in self.records]


def run_experiment(config: GameConfig) -> ExperimentResult:
    rng = random.Random(config.seed)
    tutor = build_tutor(config)
    learner = build_learner(config)
    records: list[InteractionRecord] = []
    successes: list[int] = []
    windowed: list[float] = []
    for i in range(1, config.interactions + 1):
        scene = generate_scene(rng, config)
        record = run_interaction(tutor, learner, scene, rng, config, index=i)
        records.append(record)
        successes.append(1 if record.success else 0)
        window = successes[-config.window:]
        windowed.append(sum(window) / len(window))
    return ExperimentResult(records, windowed, tutor, learner)


def records_to_csv(result: ExperimentResult) -> str:
    out = io.StringIO()
    out.write("interaction,success,windowed_success,inventory_size,learned_count\n")
    for record, wins in zip(result.records, result.windowed_success):
        out.write(
            f"{record.index},{1 if record.success else 0},{wins:.4f},"
            f"{record.inventory_size},{record.learned_count}\n"
        )
    return out.getvalue()

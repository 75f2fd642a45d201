"""HTTP service exposing the engine: comprehension, production, grammar
validation and language-game experiments.

The route handlers are plain functions over pydantic models; the CLI calls
them in-process and uvicorn serves them over HTTP.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import amr
from .forms import WordOrderError
from .game import (
    GameConfig,
    TutorFailure,
    load_game_config,
    records_to_csv,
    run_experiment,
)
from .grammar_io import (
    Grammar,
    ParseError,
    ValidationError,
    grammar_from_document,
    load_grammar,
)
from .learning import EntrenchmentPolicy
from .predicates import PredicateSyntaxError, parse_predicate_set
from .search import (
    EmptyInput,
    SearchConfig,
    SearchExhausted,
    comprehend_detailed,
    export_search_tree,
    produce_detailed,
)

__all__ = [
    "app",
    "create_app",
    "comprehend_endpoint",
    "produce_endpoint",
    "validate_endpoint",
    "game_endpoint",
    "USAGE_STATUS",
    "ENGINE_STATUS",
]

USAGE_STATUS = 400  # bad input: maps to CLI exit code 2
ENGINE_STATUS = 422  # the engine gave up: maps to CLI exit code 1


class SearchOptions(BaseModel):
    goal_tests: list[str] | None = None
    w_depth: float = 1.0
    w_units: float = 1.0
    max_nodes: int = 10_000
    max_depth: int = 64

    def to_config(self, direction_default: SearchConfig) -> SearchConfig:
        goals = (
            frozenset(self.goal_tests)
            if self.goal_tests is not None
            else direction_default.goal_tests
        )
        try:
            return SearchConfig(goals, self.w_depth, self.w_units, self.max_nodes, self.max_depth)
        except ValueError as exc:
            _usage("BAD_SEARCH_CONFIG", str(exc))


class ComprehendRequest(BaseModel):
    utterance: str
    grammar_path: str | None = None
    grammar: dict | None = None
    options: SearchOptions | None = None
    include_tree: bool = False


class ComprehendResponse(BaseModel):
    meaning_predicates: str
    penman: str | None
    applied: list[str]
    nodes_created: int
    nodes_expanded: int
    tree: dict | None = None


class ProduceRequest(BaseModel):
    grammar_path: str | None = None
    grammar: dict | None = None
    meaning_penman: str | None = None
    meaning_predicates: str | None = None
    options: SearchOptions | None = None
    include_tree: bool = False


class ProduceResponse(BaseModel):
    utterance: str
    applied: list[str]
    nodes_created: int
    nodes_expanded: int
    tree: dict | None = None


class ValidateRequest(BaseModel):
    grammar_path: str | None = None
    grammar: dict | None = None


class ValidateResponse(BaseModel):
    valid: bool
    name: str
    constructions: int
    links: int


class GameRequest(BaseModel):
    config_path: str | None = None
    config: dict | None = None


class GameResponse(BaseModel):
    interactions: int
    final_windowed_success: float
    max_inventory: int
    final_inventory: int
    csv: str


def _error(status: int, code: str, message: str):
    raise HTTPException(status, detail={"code": code, "message": message})


def _usage(code: str, message: str):
    _error(USAGE_STATUS, code, message)


def _engine(code: str, message: str):
    _error(ENGINE_STATUS, code, message)


def _load_grammar_arg(path: str | None, document: dict | None) -> Grammar:
    if (path is None) == (document is None):
        _usage("BAD_REQUEST", "provide exactly one of grammar_path or grammar")
    try:
        if path is not None:
            if not Path(path).exists():
                _usage("FILE_NOT_FOUND", f"no such grammar file: {path}")
            return load_grammar(path)
        return grammar_from_document(document)
    except ParseError as exc:
        _usage("PARSE_ERROR", str(exc))
    except ValidationError as exc:
        _usage("VALIDATION_ERROR", str(exc))


def comprehend_endpoint(request: ComprehendRequest) -> ComprehendResponse:
    grammar = _load_grammar_arg(request.grammar_path, request.grammar)
    options = (request.options or SearchOptions()).to_config(
        SearchConfig.default("comprehension")
    )
    try:
        meaning, result = comprehend_detailed(request.utterance, grammar, options)
    except EmptyInput as exc:
        _usage("EMPTY_INPUT", str(exc))
    except SearchExhausted as exc:
        _engine("SEARCH_EXHAUSTED", str(exc))
    penman = None
    meaning_text = meaning.text()
    try:
        graph = amr.relabel_variables(amr.from_predicates(meaning))
        penman = amr.print_penman(graph)
        meaning_text = amr.to_predicates(graph).text()
    except amr.AmrError:
        pass  # not every comprehended meaning is a rooted tree
    return ComprehendResponse(
        meaning_predicates=meaning_text,
        penman=penman,
        applied=list(result.applied),
        nodes_created=result.nodes_created,
        nodes_expanded=result.nodes_expanded,
        tree=export_search_tree(result.run) if request.include_tree else None,
    )


def produce_endpoint(request: ProduceRequest) -> ProduceResponse:
    grammar = _load_grammar_arg(request.grammar_path, request.grammar)
    if (request.meaning_penman is None) == (request.meaning_predicates is None):
        _usage("BAD_REQUEST", "provide exactly one of meaning_penman or meaning_predicates")
    try:
        if request.meaning_penman is not None:
            graphs = amr.parse_amr_file(request.meaning_penman)
            if len(graphs) != 1:
                _usage("BAD_REQUEST", f"expected one meaning block, found {len(graphs)}")
            meaning = amr.to_predicates(graphs[0])
        else:
            meaning = parse_predicate_set(request.meaning_predicates)
    except amr.AmrError as exc:
        _usage("AMR_ERROR", str(exc))
    except PredicateSyntaxError as exc:
        _usage("PARSE_ERROR", str(exc))
    options = (request.options or SearchOptions()).to_config(
        SearchConfig.default("production")
    )
    try:
        utterance, result = produce_detailed(meaning, grammar, options)
    except EmptyInput as exc:
        _usage("EMPTY_INPUT", str(exc))
    except SearchExhausted as exc:
        _engine("SEARCH_EXHAUSTED", str(exc))
    except WordOrderError as exc:
        _engine("WORD_ORDER", str(exc))
    return ProduceResponse(
        utterance=utterance,
        applied=list(result.applied),
        nodes_created=result.nodes_created,
        nodes_expanded=result.nodes_expanded,
        tree=export_search_tree(result.run) if request.include_tree else None,
    )


def validate_endpoint(request: ValidateRequest) -> ValidateResponse:
    grammar = _load_grammar_arg(request.grammar_path, request.grammar)
    return ValidateResponse(
        valid=True,
        name=grammar.name,
        constructions=len(grammar.constructions),
        links=len(grammar.network),
    )


def _game_config(request: GameRequest) -> GameConfig:
    if (request.config_path is None) == (request.config is None):
        _usage("BAD_REQUEST", "provide exactly one of config_path or config")
    try:
        if request.config_path is not None:
            if not Path(request.config_path).exists():
                _usage("FILE_NOT_FOUND", f"no such config file: {request.config_path}")
            return load_game_config(request.config_path)
        data = request.config
        attributes = {k: tuple(v) for k, v in data.get("attributes", {}).items()}
        kwargs = dict(
            seed=data.get("seed", 0),
            interactions=data.get("interactions", 2000),
            scene_size=data.get("scene-size", 6),
            window=data.get("window", 100),
            policy=EntrenchmentPolicy(**data.get("policy", {})),
            max_program_length=data.get("max-program-length", 4),
            max_hypotheses=data.get("max-hypotheses", 6),
        )
        if attributes:
            kwargs["attributes"] = attributes
        return GameConfig(**kwargs)
    except (ValueError, TypeError, KeyError) as exc:
        _usage("BAD_CONFIG", str(exc))


def game_endpoint(request: GameRequest) -> GameResponse:
    config = _game_config(request)
    try:
        result = run_experiment(config)
    except TutorFailure as exc:
        _engine("TUTOR_FAILURE", str(exc))
    inventory = result.inventory_series()
    return GameResponse(
        interactions=len(result.records),
        final_windowed_success=result.final_window_success(),
        max_inventory=max(inventory) if inventory else 0,
        final_inventory=inventory[-1] if inventory else 0,
        csv=records_to_csv(result),
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="cxgram",
        description="Bidirectional construction grammar engine and language-game harness",
        version="0.1.0",
    )
    app.post("/comprehend", response_model=ComprehendResponse)(comprehend_endpoint)
    app.post("/produce", response_model=ProduceResponse)(produce_endpoint)
    app.post("/validate", response_model=ValidateResponse)(validate_endpoint)
    app.post("/game", response_model=GameResponse)(game_endpoint)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    return app


app = create_app()

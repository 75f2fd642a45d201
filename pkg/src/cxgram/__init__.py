"""cxgram: a bidirectional construction grammar engine with a tutor-learner
language-game harness."""

from .amr import from_predicates, is_connected, parse_penman, print_penman, to_predicates
from .categorial import CategorialNetwork
from .constructions import (
    COMPREHENSION,
    PRODUCTION,
    Construction,
    TransientStructure,
    applicable,
    apply_construction,
)
from .forms import render_utterance, tokenize
from .game import GameConfig, run_experiment, run_interaction
from .grammar_io import Grammar, load_demo_grammar, load_grammar, save_grammar
from .learning import (
    EntrenchmentPolicy,
    Observation,
    Scene,
    SemanticProgram,
    anti_unify_programs,
    anti_unify_utterances,
    compose_programs,
    evaluate_program,
    pattern_find,
    update_entrenchment,
)
from .predicates import (
    Bindings,
    Predicate,
    PredicateSet,
    Term,
    equal_modulo_renaming,
    match_subset,
    rename_fresh,
    substitute,
)
from .search import (
    SearchConfig,
    SearchExhausted,
    comprehend,
    produce,
    search,
)

__version__ = "0.1.0"

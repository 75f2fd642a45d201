import json
import random
from collections import Counter

import pytest

from cxgram.categorial import CategorialNetwork
from cxgram.game import (
    DEFAULT_ATTRIBUTES,
    Agent,
    GameConfig,
    QuestionTemplate,
    TutorFailure,
    build_learner,
    build_question_templates,
    build_tutor,
    generate_scene,
    load_game_config,
    records_to_csv,
    run_experiment,
    run_interaction,
)
from cxgram.learning import SemanticProgram

from test_learning import CAR_PROGRAM, CAR_SCENE, car_observation, sheep_observation


def small_config(**overrides):
    defaults = dict(seed=5, interactions=60, window=20)
    defaults.update(overrides)
    return GameConfig(**defaults)


def test_question_templates_count():
    templates = build_question_templates(DEFAULT_ATTRIBUTES)
    assert len(templates) == 30
    utterances = {t.utterance for t in templates}
    assert "what is the colour of the car ?" in utterances
    assert "how many sheep are there ?" in utterances
    assert "how many red things are there ?" in utterances


def test_tutor_carries_complete_grammar():
    tutor = build_tutor(small_config())
    assert len(tutor.inventory) == 30
    assert not tutor.learns
    learner = build_learner(small_config())
    assert learner.inventory == [] and learner.memory == []
    assert len(learner.network) == 0


def test_generate_scene_deterministic():
    cfg = small_config()
    a = generate_scene(random.Random(42), cfg)
    b = generate_scene(random.Random(42), cfg)
    assert a == b


def test_generate_scene_empty():
    cfg = GameConfig(seed=1, interactions=20, window=20, scene_size=0)
    assert generate_scene(random.Random(0), cfg).objects == ()


def test_generate_scene_roughly_uniform():
    cfg = GameConfig(seed=1, interactions=20, window=20, scene_size=1)
    rng = random.Random(123)
    counts = Counter()
    n = 10_000
    for _ in range(n):
        scene = generate_scene(rng, cfg)
        counts[scene.objects[0].attribute_map["shape"]] += 1
    values = DEFAULT_ATTRIBUTES["shape"]
    expected = n / len(values)
    sigma = (n * (1 / len(values)) * (1 - 1 / len(values))) ** 0.5
    for value in values:
        assert abs(counts[value] - expected) <= 3 * sigma


def test_empty_learner_fails_and_learns_holophrase():
    cfg = small_config()
    tutor = build_tutor(cfg)
    learner = build_learner(cfg)
    scene = generate_scene(random.Random(cfg.seed), cfg)
    record = run_interaction(tutor, learner, scene, random.Random(cfg.seed), cfg, index=1)
    assert not record.success
    assert record.learned_count >= 1
    assert record.inventory_size == len(learner.inventory)
    assert any(c.name.startswith("utt-") for c in learner.inventory)


def test_prepared_learner_succeeds():
    # learner already holding the colour chain and the car lexical entry
    cfg = small_config()
    from cxgram.learning import pattern_find

    net = CategorialNetwork()
    first = pattern_find(car_observation(), [], net)
    second = pattern_find(sheep_observation(), first.memory, net, inventory=[])
    for a, b in second.links:
        net.add_link(a, b)
    learner = Agent(id="learner", inventory=list(second.constructions), network=net)
    tutor = Agent(
        id="tutor",
        inventory=[],
        templates=(
            QuestionTemplate(
                "what is the colour of the car ?",
                SemanticProgram.from_predicates(CAR_PROGRAM),
            ),
        ),
        learns=False,
    )
    from cxgram.learning import make_holophrase

    tutor.inventory = [make_holophrase(t.utterance, t.program) for t in tutor.templates]
    record = run_interaction(tutor, learner, CAR_SCENE, random.Random(0), cfg, index=1)
    assert record.success
    assert record.learned_count == 0


def test_replay_with_fixed_seed_is_identical():
    cfg = small_config(interactions=30, window=10)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert a.records == b.records
    assert records_to_csv(a) == records_to_csv(b)


def test_tutor_failure_aborts():
    cfg = small_config()
    broken_tutor = Agent(
        id="tutor",
        inventory=[],  # grammar missing entirely
        templates=build_question_templates(cfg.attributes),
        learns=False,
    )
    learner = build_learner(cfg)
    scene = generate_scene(random.Random(0), cfg)
    with pytest.raises(TutorFailure):
        run_interaction(broken_tutor, learner, scene, random.Random(0), cfg, index=1)


def test_run_experiment_records_and_metrics():
    cfg = small_config(interactions=80, window=20)
    result = run_experiment(cfg)
    assert len(result.records) == 80
    assert [r.index for r in result.records] == list(range(1, 81))
    # windowed success over the last window is at least the first window's
    first = result.windowed_success[cfg.window - 1]
    assert result.final_window_success() >= first
    # the tutor never learns
    assert len(result.tutor.inventory) == 30
    # every record's inventory size is non-negative and learned tallies sane
    assert all(r.inventory_size >= 0 and r.learned_count >= 0 for r in result.records)


def test_csv_format():
    cfg = small_config(interactions=25, window=5)
    result = run_experiment(cfg)
    csv = records_to_csv(result)
    lines = csv.strip().split("\n")
    assert lines[0] == "interaction,success,windowed_success,inventory_size,learned_count"
    assert len(lines) == 26
    first = lines[1].split(",")
    assert first[0] == "1"
    assert first[1] in ("0", "1")
    float(first[2])
    int(first[3])
    int(first[4])


def test_config_validation():
    with pytest.raises(ValueError):
        GameConfig(interactions=5, window=100)
    with pytest.raises(ValueError):
        GameConfig(interactions=100, window=100, scene_size=-1)
    with pytest.raises(ValueError):
        GameConfig(interactions=100, window=100, max_hypotheses=0)


@pytest.fixture(scope="module")
def trained():
    return run_experiment(GameConfig(seed=42, interactions=400, window=100))


def test_fillers_of_shared_slots_grow_similar(trained):
    net = trained.learner.network
    # ball and cube fill the same question slots, so they end up closer to
    # each other than either is to a slot category
    assert net.slot_similarity("ball", "cube") > 0.0
    slot = next(b for a, b, w in net.links() if a == "ball" and "?x" in b)
    assert net.slot_similarity("ball", "cube") > net.slot_similarity("ball", slot)


def test_trained_network_links_fillers_to_slots(trained):
    net = trained.learner.network
    slot_cats = {b for _, b, _ in net.links() if "?x" in b}
    assert slot_cats, "training should have produced slot categories"
    fillers = {a for a, b, _ in net.links() if "?x" in b}
    assert {"ball", "cube"} <= fillers


def test_load_game_config(tmp_path):
    path = tmp_path / "game.json"
    path.write_text(
        json.dumps(
            {
                "seed": 9,
                "interactions": 120,
                "scene-size": 4,
                "window": 30,
                "policy": {"reward": 0.2},
                "attributes": {
                    "shape": ["car", "sheep"],
                    "colour": ["red", "blue"],
                    "size": ["small", "large"],
                    "material": ["metal", "wood"],
                },
            }
        )
    )
    cfg = load_game_config(path)
    assert cfg.seed == 9
    assert cfg.interactions == 120
    assert cfg.scene_size == 4
    assert cfg.policy.reward == 0.2
    assert cfg.attributes["shape"] == ("car", "sheep")
    # runs end to end
    result = run_experiment(cfg)
    assert len(result.records) == 120

"""Smoke test for the persim extension module.

Build and install first (`maturin develop --release` inside crates/py), then
run `python -m pytest python/smoke_test.py` or `python python/smoke_test.py`.
"""

import json

import persim


def small_config(condition="A"):
    return persim.Config(condition=condition, population=3, games=300, runs=2, seed=5)


def test_config_round_trips_through_json():
    config = small_config("C")
    again = persim.Config.from_json(config.to_json())
    assert again.condition == "C"
    assert (again.population, again.games, again.runs, again.seed) == (3, 300, 2, 5)
    assert json.loads(config.to_json())["condition"] == "C"


def test_bad_config_is_rejected():
    try:
        persim.Config(population=1)
    except ValueError as e:
        assert "population" in str(e)
    else:
        raise AssertionError("population 1 should be rejected")
    try:
        persim.Config(condition="Z")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown condition should be rejected")


def test_run_experiment_shapes_and_determinism():
    config = small_config("D")
    first = persim.run_experiment(config)
    assert len(first["runs"]) == 2
    assert all(len(run) == 300 for run in first["runs"])
    terminal = first["terminal"]
    assert 0.0 <= terminal["success"] <= 1.0
    assert 0.0 <= first["mean_effort"] <= 1.0
    assert first == persim.run_experiment(config)


def test_population_steps_match_a_full_run():
    config = small_config("B")
    config.runs = 1
    population = persim.Population(config)
    records = population.play(100) + population.play(200)
    assert population.games_played == 300
    assert len(population) == 3
    assert records == persim.run_experiment(config)["runs"][0]
    for r in records:
        if r["success"]:
            assert r["utterance"]


def test_snapshot_lists_words_best_first():
    population = persim.Population(small_config("A"))
    population.play(300)
    snap = population.snapshot(0)
    assert snap["agent"] == 0
    scores = [entry["score"] for entry in snap["lexicon"]]
    assert scores == sorted(scores, reverse=True)
    assert snap["ontology"]
    try:
        population.snapshot(3)
    except IndexError:
        pass
    else:
        raise AssertionError("agent 3 does not exist")


def test_scene_has_two_bodies_and_topic_last():
    scene = persim.setup_scene(seed=11, events=3)
    assert len(scene["poses"]) == 2
    assert len(scene["events"]) == 3
    assert scene == persim.setup_scene(seed=11, events=3)


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowgauntlet.hyperopt import (
    DT_SPACE,
    MLP_SPACE,
    RF_SPACE,
    Candidate,
    GaConfig,
    HyperparamSpace,
    fitness_classifier,
    ga_optimize,
    pso_optimize,
    pso_velocity,
    random_search,
    tournament_select,
    weighted,
    write_best_json,
    write_trace_csv,
)

from conftest import two_clusters

TEN = HyperparamSpace((("g", tuple(range(1, 11))),))


def value_fitness(c):
    return float(c.values[0]), 0.0


def bumpy_fitness(c):
    # deterministic rugged landscape over a 3-gene space
    a, b, d = c.indices
    return ((a * 7 + b * 3 + d * 5) % 11) / 10.0, ((a + b + d) % 4) / 3.0


SPACE3 = HyperparamSpace((("a", tuple(range(6))), ("b", tuple(range(5))), ("c", tuple(range(7)))))


# -- space -------------------------------------------------------------------

def test_empty_domain_rejected():
    with pytest.raises(ValueError):
        HyperparamSpace((("a", ()),))


def test_default_spaces_build_valid_params():
    from flowgauntlet.hyperopt import params_for
    rng = np.random.default_rng(0)
    for kind, space in (("decision_tree", DT_SPACE), ("random_forest", RF_SPACE),
                        ("mlp", MLP_SPACE)):
        for _ in range(20):
            params_for(kind, space.candidate(space.random_indices(rng)).as_dict(space))


def test_depth_grid():
    depths = dict(DT_SPACE.domains)["max_depth"]
    assert depths[0] is None and depths[1:] == tuple(range(3, 51, 3))


# -- random search -----------------------------------------------------------

def test_rs_budget_one():
    res = random_search(SPACE3, 1, bumpy_fitness, seed=5)
    assert len(res.trace) == 1
    assert res.best.fitness == bumpy_fitness(res.best)


def test_rs_tie_keeps_earlier():
    res = random_search(SPACE3, 30, lambda c: (1.0, 1.0), seed=0)
    first = random_search(SPACE3, 1, lambda c: (1.0, 1.0), seed=0).best
    assert res.best.indices == first.indices


def test_rs_hit_probability():
    def hit(c):
        return (1.0, 1.0) if c.values[0] == 7 else (0.0, 0.0)

    # one budget-10 run finds the target with probability 1 - 0.9**10
    found = [random_search(TEN, 10, hit, seed=s).best.values[0] == 7 for s in range(400)]
    p = 1 - 0.9 ** 10
    assert abs(np.mean(found) - p) < 3 * np.sqrt(p * (1 - p) / 400)
    assert random_search(TEN, 1000, hit, seed=0).best.values[0] == 7


# -- GA ----------------------------------------------------------------------

def test_ga_fixed_point():
    start = [(2, 3, 4)] * 6
    res = ga_optimize(SPACE3, 6, 5, 3, 0.0, bumpy_fitness, seed=1, initial_population=start)
    assert all(c.indices == (2, 3, 4) for c in res.population)
    assert {r.candidate_id for r in res.trace} == set(range(30))


def test_ga_single_gene():
    res = ga_optimize(TEN, 20, 30, 5, 0.2, value_fitness, seed=0)
    assert res.best.values == (10,)


def test_tournament_of_five():
    rng = np.random.default_rng(0)
    pop = [Candidate((i,), (i,), (f, 0.0)) for i, f in enumerate([0.3, 0.9, 0.1, 0.5, 0.7])]
    assert tournament_select(pop, 5, rng).indices == (1,)


def test_ga_config_run():
    res = GaConfig(population=6, generations=3, seed=2).run(SPACE3, bumpy_fitness)
    assert len(res.best_per_step) == 3


# -- PSO ---------------------------------------------------------------------

def test_pso_velocity_examples():
    assert pso_velocity(0.0, 3.0, 3.0, 3.0, 0.9, 1.5, 2.0, 0.4, 0.7) == 0.0
    v = np.array([0.3, -1.2])
    np.testing.assert_array_equal(pso_velocity(v, 1.0, 5.0, 9.0, 0.9, 0.0, 0.0, 0.5, 0.5), 0.9 * v)
    assert pso_velocity(1.0, 0.0, 2.0, 4.0, 0.9, 1.5, 2.0, 0.5, 0.5) == pytest.approx(6.4)


def test_pso_single_gene():
    res = pso_optimize(TEN, 20, 30, fitness_fn=value_fitness, seed=0)
    assert res.best.values == (10,)


# -- shared properties -------------------------------------------------------

def _run(which, seed):
    if which == "rs":
        return random_search(SPACE3, 25, bumpy_fitness, seed)
    if which == "ga":
        return ga_optimize(SPACE3, 8, 6, 3, 0.3, bumpy_fitness, seed)
    return pso_optimize(SPACE3, 6, 6, fitness_fn=bumpy_fitness, seed=seed)


@settings(max_examples=30, deadline=None)
@given(which=st.sampled_from(["rs", "ga", "pso"]), seed=st.integers(0, 2**31))
def test_best_so_far_monotone(which, seed):
    res = _run(which, seed)
    key = weighted if which == "pso" else tuple
    steps = [key(f) for f in res.best_per_step]
    assert all(b >= a for a, b in zip(steps, steps[1:]))
    assert key(res.best.fitness) == max(key((r.f1, r.accuracy)) for r in res.trace)


@settings(max_examples=30, deadline=None)
@given(which=st.sampled_from(["rs", "ga", "pso"]), seed=st.integers(0, 2**31))
def test_candidates_inside_space(which, seed):
    seen = []

    def fit(c):
        seen.append(c)
        return bumpy_fitness(c)

    if which == "ga":
        ga_optimize(SPACE3, 8, 6, 3, 0.5, fit, seed)
    elif which == "pso":
        pso_optimize(SPACE3, 6, 6, fitness_fn=fit, seed=seed)
    else:
        random_search(SPACE3, 25, fit, seed)
    assert seen and all(SPACE3.contains(c) for c in seen)


@pytest.mark.parametrize("which", ["rs", "ga", "pso"])
def test_determinism(which):
    a, b = _run(which, 11), _run(which, 11)
    assert a.best == b.best and a.trace == b.trace


# -- fitness -----------------------------------------------------------------

def test_fitness_perfect():
    ds = two_clusters(100, d=3, gap=8.0)
    assert fitness_classifier({}, ds, ds, "dt") == (1.0, 1.0)


def test_fitness_stump_on_balanced():
    ds = two_clusters(100, d=3, gap=1.0)
    f1, acc = fitness_classifier({"max_leaf_nodes": 1}, ds, ds, "dt")
    assert acc == 0.5
    assert f1 in (0.0, pytest.approx(2 / 3))


def test_fitness_invalid_config_scores_zero():
    ds = two_clusters(40, d=3)
    assert fitness_classifier({"min_samples_split": 0}, ds, ds, "dt") == (0.0, 0.0)


def test_trace_and_best_files(tmp_path):
    res = _run("ga", 0)
    lines = write_trace_csv(res.trace, tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,candidate_id,f1,accuracy,is_best"
    assert len(lines) == len(res.trace) + 1
    doc = json.loads(write_best_json(res.best, SPACE3, tmp_path / "b.json").read_text())
    assert doc["values"] == res.best.as_dict(SPACE3)

"""Search mechanics at the unit level: UCT arithmetic, selection rules,
backpropagation semantics, visit accounting, rollout distribution."""

import math

import numpy as np
import pytest

from conftest import make_instance
from satsched import _backend
from satsched._engine_py import run_search as py_run_search
from satsched.graph import build_graph
from satsched.instance import GeneratorParams, generate
from satsched.mcts import SearchConfig, search, uct_score


def test_uct_average_worked_value():
    # 10/2 + 1.5*sqrt(ln 8 / 2) = 6.5295004852...
    got = uct_score("average", 10.0, 2, 8, 1.5)
    assert got == pytest.approx(6.5295005, abs=1e-6)
    assert got == 10.0 / 2 + 1.5 * math.sqrt(math.log(8) / 2)


def test_uct_max_worked_value():
    got = uct_score("max", 7.0, 4, 100, 5.0)
    assert got == pytest.approx(12.364915, abs=1e-6)
    assert got == 7.0 + 5.0 * math.sqrt(math.log(100) / 4)


def test_uct_unvisited_is_infinite():
    assert uct_score("average", 0.0, 0, 5, 1.5) == math.inf
    assert uct_score("max", 0.0, 0, 1, 10.0) == math.inf


def test_uct_rejects_bad_counts():
    with pytest.raises(ValueError):
        uct_score("average", 1.0, 3, 2, 1.5)
    with pytest.raises(ValueError):
        uct_score("max", 1.0, -1, 2, 1.5)
    with pytest.raises(ValueError):
        uct_score("uct0", 1.0, 1, 2, 1.5)


def tree_of(graph, variant, c, sims, seed):
    raw = py_run_search(graph, variant, c, sims, seed, None, want_tree=True)
    return raw, raw["tree"]


def children_of(tree, i):
    first, count = int(tree["first_child"][i]), int(tree["n_children"][i])
    return [] if first < 0 else list(range(first, first + count))


def one_task_instance(p, profit=10.0):
    return make_instance(
        num_orbits=1,
        tasks=[(0, profit)],
        opportunities={(0, 1): (0.0, 2.0, p)},
    )


def test_unvisited_children_are_selected_first():
    # root expands to [task, boundary]; with two sims the second iteration
    # must take the not-yet-visited child, whatever the first one was
    graph = build_graph(one_task_instance(0.5))
    for seed in range(50):
        _, tree = tree_of(graph, 0, 1.5, 2, seed)
        kids = children_of(tree, 0)
        assert len(kids) == 2
        assert [int(tree["visits"][k]) for k in kids] == [1, 1]


def test_selection_tie_break_is_uniform():
    scipy_stats = pytest.importorskip("scipy.stats")
    # two tasks that cannot chain and p = 0 everywhere: every rollout is
    # worth 0, so after three sims all three root children carry identical
    # finite UCT scores and the fourth iteration resolves an exact tie
    inst = make_instance(
        num_orbits=1,
        tasks=[(0, 5.0), (1, 5.0)],
        opportunities={(0, 1): (0.0, 2.0, 0.0), (1, 1): (0.0, 2.0, 0.0)},
        transitions={(0, 1, 1): (9.0, 0.0), (1, 0, 1): (9.0, 0.0)},
    )
    graph = build_graph(inst)
    trials = 3000
    counts = [0, 0, 0]
    for seed in range(trials):
        _, tree = tree_of(graph, 0, 1.5, 4, seed)
        kids = children_of(tree, 0)
        assert len(kids) == 3
        visits = [int(tree["visits"][k]) for k in kids]
        assert sorted(visits) == [1, 1, 2]
        counts[visits.index(2)] += 1
    _, p = scipy_stats.chisquare(counts)
    assert p > 1e-4


def test_expansion_choice_is_uniform():
    scipy_stats = pytest.importorskip("scipy.stats")
    inst = make_instance(
        num_orbits=1,
        tasks=[(0, 5.0), (1, 5.0)],
        opportunities={(0, 1): (0.0, 2.0, 0.0), (1, 1): (0.0, 2.0, 0.0)},
        transitions={(0, 1, 1): (9.0, 0.0), (1, 0, 1): (9.0, 0.0)},
    )
    graph = build_graph(inst)
    trials = 3000
    counts = [0, 0, 0]
    for seed in range(trials):
        _, tree = tree_of(graph, 0, 1.5, 1, seed)
        kids = children_of(tree, 0)
        visited = [k for k in kids if tree["visits"][k] == 1]
        assert len(visited) == 1
        counts[kids.index(visited[0])] += 1
    _, p = scipy_stats.chisquare(counts)
    assert p > 1e-4


def test_average_backprop_accumulates():
    # p = 1: a rollout through the task is worth exactly 10, one through
    # the bare boundary exactly 0, so the cumulative sums are predictable
    graph = build_graph(one_task_instance(1.0))
    _, tree = tree_of(graph, 0, 1.5, 30, 3)
    kids = children_of(tree, 0)
    task_kid = next(k for k in kids if tree["task"][k] >= 0)
    skip_kid = next(k for k in kids if tree["task"][k] < 0)
    n_task = int(tree["visits"][task_kid])
    assert tree["value"][task_kid] == 10.0 * n_task
    assert tree["value"][skip_kid] == 0.0
    assert tree["value"][0] == 10.0 * n_task
    assert int(tree["visits"][0]) == 30


def test_max_backprop_replaces_only_if_greater():
    graph = build_graph(one_task_instance(1.0))
    raw, tree = tree_of(graph, 1, 1.5, 30, 3)
    kids = children_of(tree, 0)
    task_kid = next(k for k in kids if tree["task"][k] >= 0)
    skip_kid = next(k for k in kids if tree["task"][k] < 0)
    # the skip branch keeps seeing value 0; the root must keep 10 anyway
    assert int(tree["visits"][skip_kid]) > 0
    assert tree["value"][task_kid] == 10.0
    assert tree["value"][skip_kid] == 0.0
    assert tree["value"][0] == 10.0
    assert raw["best_rollout_value"] == 10.0


def test_max_root_value_equals_best_rollout():
    inst = generate(GeneratorParams(num_tasks=6, num_orbits=3, seed=2))
    graph = build_graph(inst)
    raw, tree = tree_of(graph, 1, 5.0, 400, 9)
    assert tree["value"][0] == raw["best_rollout_value"]


def test_visit_count_conservation():
    inst = generate(GeneratorParams(num_tasks=6, num_orbits=3, seed=6))
    graph = build_graph(inst)
    raw, tree = tree_of(graph, 0, 1.5, 500, 4)
    total = len(tree["visits"])
    assert int(tree["visits"][0]) == 500
    for i in range(total):
        kids = children_of(tree, i)
        child_sum = sum(int(tree["visits"][k]) for k in kids)
        assert (
            int(tree["visits"][i])
            == child_sum + int(tree["endpoint_count"][i])
        ), i


def test_average_value_stays_in_objective_range():
    inst = generate(GeneratorParams(num_tasks=5, num_orbits=2, seed=12))
    graph = build_graph(inst)
    bound = float(sum(t.profit for t in inst.tasks))
    _, tree = tree_of(graph, 0, 1.5, 300, 8)
    visited = tree["visits"] > 0
    means = tree["value"][visited] / tree["visits"][visited]
    assert (means >= 0.0).all()
    assert (means <= bound + 1e-12).all()


def test_terminal_leaf_skips_simulation_and_accumulates():
    # zero-task layer: the only child is the terminal boundary; every
    # iteration after the first ends on it directly
    inst = make_instance(num_orbits=1, tasks=[(0, 3.0)], opportunities={})
    graph = build_graph(inst)
    _, tree = tree_of(graph, 0, 1.5, 25, 0)
    assert len(tree["visits"]) == 2  # root and terminal boundary
    assert int(tree["visits"][1]) == 25
    assert int(tree["endpoint_count"][1]) == 25
    assert tree["value"][1] == 0.0


def test_rollout_values_zero_when_all_p_zero():
    inst = make_instance(
        num_orbits=2,
        tasks=[(0, 5.0), (1, 2.0)],
        opportunities={
            (0, 1): (0.0, 1.0, 0.0),
            (1, 1): (2.0, 3.0, 0.0),
            (0, 2): (0.0, 1.0, 0.0),
        },
    )
    graph = build_graph(inst)
    raw, tree = tree_of(graph, 1, 5.0, 200, 1)
    assert raw["best_rollout_value"] == 0.0
    assert (tree["value"] == 0.0).all()


def test_rollout_mean_from_root():
    # 1 orbit, 1 task, p = 0.5, profit 10: the first simulation starts at
    # the root and picks the task or the skip uniformly, scoring 5 or 0
    graph = build_graph(one_task_instance(0.5))
    trials = 100_000
    total = 0.0
    seen = set()
    for seed in range(trials):
        raw = _backend.run_search("auto", graph, 0, 1.5, 1, seed, None)
        v = raw["best_rollout_value"]
        seen.add(v)
        total += v
    assert seen == {0.0, 5.0}
    assert total / trials == pytest.approx(2.5, abs=0.1)


def test_search_config_validation():
    inst = one_task_instance(0.5)
    graph = build_graph(inst)

    def cfg(**kw):
        base = dict(
            variant="max",
            exploration_coefficient=1.5,
            num_simulations=10,
            seed=0,
        )
        base.update(kw)
        return SearchConfig(**base)

    for bad in (
        cfg(variant="ucb1"),
        cfg(exploration_coefficient=0.0),
        cfg(exploration_coefficient=-2.0),
        cfg(num_simulations=0),
        cfg(seed=-1),
        cfg(seed=2**64),
        cfg(time_limit=0.0),
    ):
        with pytest.raises(ValueError):
            search(inst, graph, bad)


def test_search_rejects_mismatched_graph():
    inst = one_task_instance(0.5)
    other = one_task_instance(0.9)
    graph = build_graph(other)
    cfg = SearchConfig(
        variant="max", exploration_coefficient=1.5, num_simulations=5, seed=0
    )
    with pytest.raises(ValueError, match="different instance"):
        search(inst, graph, cfg)


def test_one_simulation_search_is_valid():
    from satsched.feasibility import is_valid

    inst = generate(GeneratorParams(num_tasks=5, num_orbits=2, seed=3))
    graph = build_graph(inst)
    cfg = SearchConfig(
        variant="average", exploration_coefficient=1.5, num_simulations=1, seed=5
    )
    result = search(inst, graph, cfg)
    assert result.simulations_run == 1
    assert is_valid(inst, result.schedule)


def test_one_simulation_forced_instance_returns_that_rollout():
    # a single chain with no slack: the only rollout is also the only
    # schedule, so one simulation pins the output exactly
    inst = make_instance(
        num_orbits=1,
        tasks=[(0, 4.0)],
        opportunities={(0, 1): (0.0, 1.0, 1.0)},
    )
    graph = build_graph(inst)
    for seed in range(10):
        cfg = SearchConfig(
            variant="max",
            exploration_coefficient=10.0,
            num_simulations=1,
            seed=seed,
        )
        result = search(inst, graph, cfg)
        assert result.schedule.per_orbit in (((0,),), ((),))
        assert result.expected_value == result.best_rollout_value


def test_time_limit_records_actual_count():
    inst = generate(GeneratorParams(num_tasks=10, num_orbits=9, seed=1))
    graph = build_graph(inst)
    cfg = SearchConfig(
        variant="max",
        exploration_coefficient=5.0,
        num_simulations=50_000_000,
        seed=0,
        time_limit=0.2,
        backend="python",
    )
    result = search(inst, graph, cfg)
    assert 1 <= result.simulations_run < 50_000_000
    from satsched.feasibility import is_valid

    assert is_valid(inst, result.schedule)

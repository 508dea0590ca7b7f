import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import enum_knapsack, subset_sums
from kfplace.graphs import bfs_distances, graph_from_matrix, is_strongly_connected
from kfplace.instances import generate_row_stochastic_instance, instance_distances
from kfplace.kalman import Indicator, truncated_sum_pair
from kfplace.oracle import brute_rgkfsp
from kfplace.resilient import (
    KnapsackInstance,
    SubsetSumInstance,
    bit_length_of,
    build_reduction_instance,
    is_feasible_placement,
    knapsack_dp,
    reduction_threshold,
    solve_rgkfsp,
    subset_sum_brute,
)
from kfplace.solvers import CostModel, solve_gkfsp


# ---------------------------------------------------------------- knapsack

def test_knapsack_zero_capacity():
    sol = knapsack_dp(KnapsackInstance((1, 1), (1, 1), 0))
    assert sol.value == 0 and sol.indicator == (0, 0) and sol.used == 0


def test_knapsack_small_exact():
    sol = knapsack_dp(KnapsackInstance((6, 10, 12), (1, 2, 3), 5))
    assert sol.value == 22 and sol.indicator == (0, 1, 1) and sol.used == 5


def test_knapsack_equal_value_size():
    # sizes double as values; 3 + 5 = 8 is the unique optimum under K = 9
    sol = knapsack_dp(KnapsackInstance((2, 3, 5), (2, 3, 5), 9))
    assert sol.value == 8 and sol.indicator == (0, 1, 1) and sol.used == 8


def test_knapsack_zero_size_items():
    sol = knapsack_dp(KnapsackInstance((0, 5, 2), (0, 0, 4), 3))
    assert sol.indicator == (0, 1, 0)  # worthless zero-size item excluded
    assert sol.value == 5 and sol.used == 0


def test_knapsack_oversized_item_skipped():
    sol = knapsack_dp(KnapsackInstance((100, 1), (10, 1), 5))
    assert sol.indicator == (0, 1) and sol.value == 1


def test_knapsack_empty():
    assert knapsack_dp(KnapsackInstance((), (), 7)).value == 0


def test_knapsack_matches_enumeration_seeded():
    rng = np.random.default_rng(14)
    for _ in range(40):
        count = int(rng.integers(0, 16))
        values = tuple(int(v) for v in rng.integers(0, 30, size=count))
        sizes = tuple(int(s) for s in rng.integers(0, 12, size=count))
        K = int(rng.integers(0, 101))
        inst = KnapsackInstance(values, sizes, K)
        sol = knapsack_dp(inst)
        best_value, _ = enum_knapsack(values, sizes, K)
        assert sol.value == best_value
        assert sol.used == sum(s for s, b in zip(sizes, sol.indicator) if b)
        assert sol.used <= K
        assert sol.value == sum(v for v, b in zip(values, sol.indicator) if b)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 20), st.integers(0, 8)), max_size=9),
    st.integers(0, 40),
)
def test_knapsack_matches_enumeration_property(items, K):
    values = tuple(v for v, _ in items)
    sizes = tuple(s for _, s in items)
    assert knapsack_dp(KnapsackInstance(values, sizes, K)).value == enum_knapsack(
        values, sizes, K
    )[0]


def test_knapsack_rejects_bad_data():
    with pytest.raises(ValueError):
        KnapsackInstance((1,), (1, 2), 3)
    with pytest.raises(ValueError):
        KnapsackInstance((1,), (-1,), 3)
    with pytest.raises(ValueError):
        KnapsackInstance((1.5,), (1,), 3)


# ---------------------------------------------------------------- feasibility

def test_feasibility_predicate():
    costs = CostModel((2, 2, 2), 4, (3, 3, 3), 5)
    assert not is_feasible_placement(Indicator.zeros(3), costs)
    # two sensors: attack cost 6 > 5, placement cost 4 <= 4
    assert is_feasible_placement(Indicator((1, 1, 0)), costs)
    # one sensor: attacker affords 3 <= 5
    assert not is_feasible_placement(Indicator((1, 0, 0)), costs)
    # three sensors: over the placement budget
    assert not is_feasible_placement(Indicator((1, 1, 1)), costs)


# ---------------------------------------------------------------- solver

def test_rgkfsp_matches_brute_force():
    for seed in range(20):
        inst = generate_row_stochastic_instance(n=4 + seed % 5, seed=1200 + seed)
        dmap = instance_distances(inst)
        for objective in ("priori", "posteriori"):
            rep = solve_rgkfsp(inst.system, inst.costs, dmap, objective=objective)
            ref = brute_rgkfsp(inst.system, inst.costs, dmap, objective=objective)
            if math.isinf(ref.objective):
                assert math.isinf(rep.objective)
            else:
                assert rep.objective == pytest.approx(ref.objective, abs=1e-8)


def test_rgkfsp_with_powerless_attacker_reduces_to_gkfsp(ex1_system, ex1_dmap):
    costs = CostModel((1, 2, 1, 1), 2, (1, 1, 1, 1), 0)
    rep = solve_rgkfsp(ex1_system, costs, ex1_dmap)
    single = solve_gkfsp(ex1_system, costs, ex1_dmap)
    assert rep.objective == pytest.approx(single.objective, abs=1e-12)
    assert rep.zeta == single.zeta
    assert rep.attack is not None and rep.attack.is_empty()


def test_rgkfsp_report_shape(ex1_system, ex1_dmap):
    costs = CostModel((1, 1, 1, 1), 3, (1, 1, 1, 1), 2)
    rep = solve_rgkfsp(ex1_system, costs, ex1_dmap)
    assert not rep.chosen.is_empty()
    assert rep.spent == rep.chosen.cost(costs.placement_costs) <= 3
    assert rep.attack is not None
    assert rep.chosen.contains(rep.attack)
    assert is_feasible_placement(rep.chosen, costs)


def test_rgkfsp_infeasible_reports_empty(ex1_system, ex1_dmap):
    # attacker can always afford everything the designer can place
    costs = CostModel((1, 1, 1, 1), 2, (1, 1, 1, 1), 9)
    rep = solve_rgkfsp(ex1_system, costs, ex1_dmap)
    assert rep.chosen.is_empty()
    assert rep.zeta is None
    assert rep.spent == 0
    assert math.isinf(rep.objective)  # the example system is unstable


def test_rgkfsp_prefers_smallest_worst_distance(ex1_system, ex1_dmap):
    # Budget for two sensors; placing both distance-1 nodes costs the
    # attacker 2 + 2 > 3, so worst-case distance 1 is achievable.
    costs = CostModel((1, 1, 1, 1), 2, (2, 1, 2, 2), 3)
    rep = solve_rgkfsp(ex1_system, costs, ex1_dmap)
    assert rep.chosen.support() == (0, 2)
    assert rep.zeta == 1


# ---------------------------------------------------------------- reduction

def test_bit_length():
    assert bit_length_of(1) == 1
    assert bit_length_of(7) == 3
    assert bit_length_of(8) == 4
    with pytest.raises(ValueError):
        bit_length_of(0)


def test_reduction_structure():
    system, costs = build_reduction_instance(SubsetSumInstance((3, 5), 7))
    assert system.n == 5  # 2 elements + 3 binary nodes
    assert np.allclose(system.A.sum(axis=1), 1.0)
    assert is_strongly_connected(graph_from_matrix(system.A))
    assert costs.placement_costs == (3, 5, 1, 2, 4)
    assert costs.attack_costs == costs.placement_costs
    assert costs.placement_budget == 7
    assert costs.attack_budget == 6
    assert system.input_node == 0 and system.input_variance == 1.0
    want = truncated_sum_pair(system, 1).trace_priori
    assert reduction_threshold(system, 2) == pytest.approx(want)


def test_subset_sum_brute_matches_reference():
    rng = np.random.default_rng(21)
    for _ in range(50):
        sizes = tuple(int(s) for s in rng.integers(1, 10, size=int(rng.integers(1, 7))))
        target = int(rng.integers(1, 26))
        ss = SubsetSumInstance(sizes, target)
        assert subset_sum_brute(ss) == (target in subset_sums(sizes))


def test_reduction_biconditional_sampled():
    # sampled desk-scale sweep; the acceptance suite runs the exhaustive
    # small-parameter version
    rng = np.random.default_rng(22)
    yes = no = 0
    for _ in range(120):
        sizes = tuple(int(s) for s in rng.integers(1, 10, size=int(rng.integers(1, 9))))
        target = int(rng.integers(1, 31))
        ss = SubsetSumInstance(sizes, target)
        system, costs = build_reduction_instance(ss)
        dmap = bfs_distances(graph_from_matrix(system.A), system.input_node)
        rep = solve_rgkfsp(system, costs, dmap)
        cheap = rep.objective <= reduction_threshold(system, len(sizes)) + 1e-9
        truth = subset_sum_brute(ss)
        assert cheap == truth, (sizes, target)
        yes += truth
        no += not truth
    assert yes > 10 and no > 10  # both directions exercised


def test_rgkfsp_large_instance_smoke():
    # pseudo-polynomial scaling sanity: a few hundred nodes stay fast
    inst = generate_row_stochastic_instance(n=150, extra_edges=250, seed=3)
    dmap = instance_distances(inst)
    t0 = time.time()
    solve_rgkfsp(inst.system, inst.costs, dmap)
    assert time.time() - t0 < 5.0


def test_subset_sum_validation():
    with pytest.raises(ValueError):
        SubsetSumInstance((), 3)
    with pytest.raises(ValueError):
        SubsetSumInstance((0, 2), 3)
    with pytest.raises(ValueError):
        SubsetSumInstance((1, 2), 0)

"""Resilient placement against a budgeted sensor-removing adversary.

The designer must keep at least one sensor alive under every affordable
attack. Whether the adversary can wipe out all sensors placed within
distance m of the input reduces to a 0/1 knapsack: choose placements
(values = attack costs, sizes = placement costs, capacity = placement
budget) whose total attack cost exceeds the attack budget. The solver scans
m upward and returns the first distance at which such a placement exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import DistanceMap
from .kalman import Indicator, NetworkSystem, truncated_sum_pair
from .solvers import CostModel, SolveReport, evaluate_placement, solve_gkfsa, _pick_trace


@dataclass(frozen=True)
class KnapsackInstance:
    values: tuple[int, ...]
    sizes: tuple[int, ...]
    capacity: int

    def __post_init__(self):
        if len(self.values) != len(self.sizes):
            raise ValueError("values and sizes must have equal length")
        for v in (*self.values, *self.sizes, self.capacity):
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"knapsack data must be nonnegative integers, got {v!r}")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "sizes", tuple(self.sizes))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class KnapsackSolution:
    indicator: tuple[int, ...]
    value: int
    used: int


def knapsack_dp(inst: KnapsackInstance) -> KnapsackSolution:
    """Exact 0/1 knapsack over capacities 0..K, O(len * K) time.

    Backtracking tie rule: when including an item does not strictly improve
    the value, it is excluded, so among optima the one excluding the
    highest-index items is returned. Zero-size items are included exactly
    when their value is positive.
    """
    count, K = len(inst), inst.capacity
    if count == 0:
        return KnapsackSolution((), 0, 0)
    best = np.zeros(K + 1, dtype=np.int64)
    keep = np.zeros((count, K + 1), dtype=bool)
    for i, (phi, kappa) in enumerate(zip(inst.values, inst.sizes)):
        if kappa == 0:
            if phi > 0:
                best += phi
                keep[i, :] = True
            continue
        if kappa > K:
            continue
        candidate = best[: K + 1 - kappa] + phi
        improved = candidate > best[kappa:]
        keep[i, kappa:] = improved
        best[kappa:] = np.where(improved, candidate, best[kappa:])
    bits = [0] * count
    cap = K
    for i in range(count - 1, -1, -1):
        if keep[i, cap]:
            bits[i] = 1
            cap -= inst.sizes[i]
    used = sum(s for s, b in zip(inst.sizes, bits) if b)
    return KnapsackSolution(tuple(bits), int(best[K]), used)


@dataclass(frozen=True)
class SubsetSumInstance:
    """Does some subset of ``sizes`` sum exactly to ``target``?"""

    sizes: tuple[int, ...]
    target: int

    def __post_init__(self):
        if not isinstance(self.target, int) or isinstance(self.target, bool) or self.target < 1:
            raise ValueError("target must be a positive integer")
        if not self.sizes:
            raise ValueError("sizes must be nonempty")
        for s in self.sizes:
            if not isinstance(s, int) or isinstance(s, bool) or s < 1:
                raise ValueError(f"sizes must be positive integers, got {s!r}")
        object.__setattr__(self, "sizes", tuple(self.sizes))


def is_feasible_placement(placement: Indicator, costs: CostModel) -> bool:
    """Within the placement budget, and no affordable attack removes all.

    The adversary removes every sensor iff the total attack cost of the
    placement fits the attack budget, so feasibility is f . mu > F along
    with the budget check and a nonempty support.
    """
    if placement.is_empty():
        return False
    if placement.cost(costs.placement_costs) > costs.placement_budget:
        return False
    return placement.cost(costs.attack_costs) > costs.attack_budget


def solve_rgkfsp(
    sys: NetworkSystem,
    costs: CostModel,
    dmap: DistanceMap,
    objective: str = "priori",
) -> SolveReport:
    """Min-max placement: smallest worst-case surviving distance.

    Nodes are relabeled by nondecreasing distance from the input (ties keep
    original index order). For each m, a knapsack over the nodes within
    distance m (values = attack costs, sizes = placement costs, capacity =
    the placement budget) checks whether some affordable placement costs the
    attacker more than its whole budget; the first such m is optimal and the
    knapsack maximizer is the returned placement. When no m succeeds the
    report carries the empty placement and its (possibly infinite)
    no-measurement objective.
    """
    if costs.n != sys.n:
        raise ValueError("cost vector length must match system dimension")
    order = sorted(dmap.reachable_nodes(), key=lambda j: (dmap.dist[j], j))
    h, f, H, F = (
        costs.placement_costs,
        costs.attack_costs,
        costs.placement_budget,
        costs.attack_budget,
    )
    chosen = Indicator.zeros(sys.n)
    found = False
    last_d = None
    for node in order:
        d = dmap.dist[node]
        if d == last_d:
            continue  # knapsack prefix is per distinct distance, not per node
        last_d = d
        prefix = [j for j in order if dmap.dist[j] <= d]
        sol = knapsack_dp(
            KnapsackInstance(
                values=tuple(f[j] for j in prefix),
                sizes=tuple(h[j] for j in prefix),
                capacity=H,
            )
        )
        if sol.value > F:
            chosen = Indicator.from_support(
                sys.n, [j for j, b in zip(prefix, sol.indicator) if b]
            )
            found = True
            break
    if not found:
        pair = evaluate_placement(sys, chosen, dmap)
        return SolveReport(
            chosen=chosen,
            objective=_pick_trace(pair, objective),
            zeta=None,
            spent=0,
            covariance=pair,
        )
    worst = solve_gkfsa(sys, costs, chosen, dmap, objective=objective)
    return SolveReport(
        chosen=chosen,
        objective=worst.objective,
        zeta=worst.zeta,
        spent=chosen.cost(h),
        covariance=worst.covariance,
        attack=worst.chosen,
    )


def bit_length_of(K: int) -> int:
    """Number of binary digits of K (floor(log2 K) + 1 for K >= 1)."""
    if K < 1:
        raise ValueError("K must be positive")
    return K.bit_length()


def build_reduction_instance(ss: SubsetSumInstance) -> tuple[NetworkSystem, CostModel]:
    """Path-graph system whose resilient-placement answer decides subset sum.

    Nodes 1..|U| carry the subset-sum sizes as both placement and attack
    costs; b(K) further nodes carry powers of two so every budget value in
    0..2^b-1 is expressible. The path has weight-1/3 edges in both
    directions with 1/3 self-loops inside and 2/3 self-loops at the two
    ends, making every row sum to one. The input sits at the first node with
    unit variance; budgets are H = K and F = K - 1.
    """
    u = len(ss.sizes)
    b = bit_length_of(ss.target)
    n = u + b
    A = np.zeros((n, n))
    for i in range(n):
        A[i, i] = 1.0 / 3.0
        if i > 0:
            A[i, i - 1] = 1.0 / 3.0
        if i < n - 1:
            A[i, i + 1] = 1.0 / 3.0
    A[0, 0] = 2.0 / 3.0
    A[n - 1, n - 1] = 2.0 / 3.0
    system = NetworkSystem(A, input_node=0, input_variance=1.0)
    h = list(ss.sizes) + [2**i for i in range(b)]
    costs = CostModel(
        placement_costs=tuple(h),
        placement_budget=ss.target,
        attack_costs=tuple(h),
        attack_budget=ss.target - 1,
    )
    return system, costs


def reduction_threshold(sys: NetworkSystem, set_size: int) -> float:
    """Objective cutoff separating yes from no instances: the a priori trace
    at surviving distance |U| - 1."""
    return truncated_sum_pair(sys, set_size - 1).trace_priori


def subset_sum_brute(ss: SubsetSumInstance) -> bool:
    """Exponential enumeration reference for small instances."""
    if len(ss.sizes) > 25:
        raise ValueError("enumeration reference capped at 25 elements")
    reachable = {0}
    for s in ss.sizes:
        reachable |= {r + s for r in reachable if r + s <= ss.target}
    return ss.target in reachable

"""Brute-force reference solvers for small instances.

These enumerate indicator vectors outright and evaluate every candidate
through the Riccati iteration, so they are correct by construction and cap
out around n = 14. The solver modules are tested against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, KfplaceError, SizeCapError
from .graphs import DistanceMap, bfs_distances, graph_from_matrix
from .kalman import CovariancePair, Indicator, NetworkSystem, dare_solve
from .solvers import CostModel, evaluate_placement

DEFAULT_PLACEMENT_CAP = 14
DEFAULT_MINMAX_CAP = 10

#: dare_solve and the distance-truncated closed form must agree this tightly
#: on zero-noise instances satisfying the structural assumptions.
CROSS_CHECK_TOL = 1e-6

TIE_TOL = 1e-9


@dataclass(frozen=True)
class OracleResult:
    best: Indicator
    all_best: tuple[Indicator, ...]
    objective: float
    evaluated_count: int


def _gray_masks(k: int):
    """All k-bit masks in Gray-code order (consecutive masks differ by one bit)."""
    for i in range(1 << k):
        yield i ^ (i >> 1)


def _mask_to_indicator(n: int, positions: list[int], mask: int) -> Indicator:
    bits = [0] * n
    for t, j in enumerate(positions):
        if mask >> t & 1:
            bits[j] = 1
    return Indicator(tuple(bits))


class Evaluator:
    """Memoized covariance evaluation keyed by the support set.

    Ground truth is dare_solve. On zero-noise instances it cross-checks the
    distance-truncated closed form against the Riccati limit and raises if
    the two routes disagree beyond CROSS_CHECK_TOL.
    """

    def __init__(self, sys: NetworkSystem, dmap: DistanceMap | None = None, cross_check: bool = True):
        self.sys = sys
        if dmap is None:
            dmap = bfs_distances(graph_from_matrix(sys.A), sys.input_node)
        self.dmap = dmap
        self.cross_check = cross_check and not sys.has_sensor_noise()
        self.count = 0
        self._memo: dict[tuple[int, ...], CovariancePair] = {}

    def pair(self, placement: Indicator) -> CovariancePair:
        key = placement.bits
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        self.count += 1
        result = dare_solve(self.sys, placement)
        if (
            self.cross_check
            and not result.is_infinite
            and any(self.dmap.dist[j] is not None for j in placement.support())
        ):
            closed = evaluate_placement(self.sys, placement, self.dmap)
            gap = max(
                np.abs(closed.priori - result.priori).max(),
                np.abs(closed.posteriori - result.posteriori).max(),
            )
            if gap > CROSS_CHECK_TOL:
                raise KfplaceError(
                    f"Riccati and closed-form covariances disagree by {gap:.3e} "
                    f"for support {placement.support()}"
                )
        self._memo[key] = result
        return result

    def trace(self, placement: Indicator, objective: str) -> float:
        p = self.pair(placement)
        return p.trace_priori if objective == "priori" else p.trace_posteriori


def _collect_best(
    candidates: list[tuple[Indicator, float]], minimize: bool
) -> tuple[Indicator, tuple[Indicator, ...], float]:
    best_val = min(v for _, v in candidates) if minimize else max(v for _, v in candidates)
    ties = []
    for ind, v in candidates:
        if v == best_val or (
            math.isfinite(best_val) and abs(v - best_val) <= TIE_TOL * max(1.0, abs(best_val))
        ):
            ties.append(ind)
    return ties[0], tuple(ties), best_val


def brute_gkfsp(
    sys: NetworkSystem,
    costs: CostModel,
    dmap: DistanceMap | None = None,
    cap: int = DEFAULT_PLACEMENT_CAP,
    objective: str = "priori",
    cross_check: bool = True,
) -> OracleResult:
    """Minimum-trace placement by enumerating every affordable nonempty support."""
    if sys.n > cap:
        raise SizeCapError(f"brute_gkfsp capped at n = {cap}, got {sys.n}")
    ev = Evaluator(sys, dmap, cross_check)
    h, H = costs.placement_costs, costs.placement_budget
    candidates = []
    for mask in _gray_masks(sys.n):
        if mask == 0:
            continue
        mu = _mask_to_indicator(sys.n, list(range(sys.n)), mask)
        if mu.cost(h) > H:
            continue
        candidates.append((mu, ev.trace(mu, objective)))
    if not candidates:
        raise InfeasibleError(f"no nonempty placement fits budget {H}")
    best, ties, val = _collect_best(candidates, minimize=True)
    return OracleResult(best, ties, val, ev.count)


def brute_gkfsa(
    sys: NetworkSystem,
    costs: CostModel,
    placement: Indicator,
    dmap: DistanceMap | None = None,
    cap: int = DEFAULT_PLACEMENT_CAP,
    objective: str = "priori",
    cross_check: bool = True,
) -> OracleResult:
    """Maximum-trace attack by enumerating every affordable subset of the placement."""
    support = list(placement.support())
    if len(support) > cap:
        raise SizeCapError(f"brute_gkfsa capped at {cap} placed sensors, got {len(support)}")
    if not support:
        raise ValueError("attack requires a nonempty placement")
    ev = Evaluator(sys, dmap, cross_check)
    f, F = costs.attack_costs, costs.attack_budget
    candidates = []
    for mask in _gray_masks(len(support)):
        nu = _mask_to_indicator(sys.n, support, mask)
        if nu.cost(f) > F:
            continue
        candidates.append((nu, ev.trace(placement.minus(nu), objective)))
    best, ties, val = _collect_best(candidates, minimize=False)
    return OracleResult(best, ties, val, ev.count)


def brute_rgkfsp(
    sys: NetworkSystem,
    costs: CostModel,
    dmap: DistanceMap | None = None,
    cap: int = DEFAULT_MINMAX_CAP,
    objective: str = "priori",
    cross_check: bool = True,
) -> OracleResult:
    """Min over affordable placements of the max over affordable attacks.

    The empty placement participates (it is always affordable) so the
    no-feasible-placement outcome is represented rather than an error;
    infinite traces order above every finite value.
    """
    if sys.n > cap:
        raise SizeCapError(f"brute_rgkfsp capped at n = {cap}, got {sys.n}")
    ev = Evaluator(sys, dmap, cross_check)
    h, f = costs.placement_costs, costs.attack_costs
    H, F = costs.placement_budget, costs.attack_budget
    candidates = []
    pairs = 0
    for mask in _gray_masks(sys.n):
        mu = _mask_to_indicator(sys.n, list(range(sys.n)), mask)
        if mu.cost(h) > H:
            continue
        support = list(mu.support())
        worst = -math.inf
        for amask in _gray_masks(len(support)):
            nu = _mask_to_indicator(sys.n, support, amask)
            if nu.cost(f) > F:
                continue
            pairs += 1
            worst = max(worst, ev.trace(mu.minus(nu), objective))
        candidates.append((mu, worst))
    best, ties, val = _collect_best(candidates, minimize=True)
    return OracleResult(best, ties, val, pairs)

"""Placement and attack solvers driven by graph distance from the input node.

Under zero sensor noise the steady covariance depends on the placement only
through zeta, the shortest distance from the input node to a surviving
sensor. The designer therefore places a single sensor as close to the input
as the budget allows, and the attacker removes whole distance layers outward
from the input until a layer no longer fits the remaining budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InfeasibleError
from .graphs import DistanceMap
from .kalman import (
    CovariancePair,
    Indicator,
    NetworkSystem,
    closed_form_covariance,
    dare_solve,
)

OBJECTIVES = ("priori", "posteriori")


@dataclass(frozen=True)
class CostModel:
    """Placement costs/budget (h, H) and attack costs/budget (f, F).

    All entries are nonnegative integers; fractional costs are rejected
    rather than rounded.
    """

    placement_costs: tuple[int, ...]
    placement_budget: int
    attack_costs: tuple[int, ...]
    attack_budget: int

    def __post_init__(self):
        h, f = self.placement_costs, self.attack_costs
        if len(h) != len(f):
            raise ValueError("placement and attack cost vectors must have equal length")
        for label, values in (("placement", h), ("attack", f)):
            for v in values:
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise ValueError(f"{label} costs must be nonnegative integers, got {v!r}")
        for label, v in (
            ("placement budget", self.placement_budget),
            ("attack budget", self.attack_budget),
        ):
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{label} must be a nonnegative integer, got {v!r}")
        object.__setattr__(self, "placement_costs", tuple(h))
        object.__setattr__(self, "attack_costs", tuple(f))

    @property
    def n(self) -> int:
        return len(self.placement_costs)

    @classmethod
    def uniform(cls, n: int, placement_budget: int, attack_budget: int = 0) -> "CostModel":
        return cls((1,) * n, placement_budget, (1,) * n, attack_budget)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a solver run.

    ``chosen`` is the placement for the designer problems and the attack for
    the attacker problem. ``zeta`` is the surviving shortest distance from
    the input, or None when no sensor survives. ``objective`` is the trace
    of the requested covariance (inf when the covariance diverges).
    """

    chosen: Indicator
    objective: float
    zeta: int | None
    spent: int
    covariance: CovariancePair
    attack: Indicator | None = None


def _pick_trace(pair: CovariancePair, objective: str) -> float:
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    return pair.trace_priori if objective == "priori" else pair.trace_posteriori


def evaluate_placement(
    sys: NetworkSystem, placement: Indicator, dmap: DistanceMap
) -> CovariancePair:
    """Covariance pair for a zero-noise placement, honoring the infinite cases.

    Reachable sensors take the distance-truncated closed form. Empty
    placements and placements the input cannot reach fall back to the
    Riccati iteration, which reports the no-measurement limit (finite iff A
    is Schur stable) or the infinite pair for undetectable unstable systems.
    """
    if any(dmap.dist[j] is not None for j in placement.support()):
        return closed_form_covariance(sys, placement, dmap)
    return dare_solve(sys, placement)


def surviving_zeta(placement: Indicator, dmap: DistanceMap) -> int | None:
    dists = [dmap.dist[j] for j in placement.support() if dmap.dist[j] is not None]
    return min(dists) if dists else None


def solve_gkfsp(
    sys: NetworkSystem,
    costs: CostModel,
    dmap: DistanceMap,
    objective: str = "priori",
) -> SolveReport:
    """Min-trace sensor placement under the budget: one sensor, as close to
    the input node as affordable.

    Ties between equal-distance affordable nodes break toward the lowest
    node index. Raises InfeasibleError when no single node is affordable
    (or none of the affordable nodes is reachable from the input).
    """
    if costs.n != sys.n:
        raise ValueError("cost vector length must match system dimension")
    h, H = costs.placement_costs, costs.placement_budget
    best: int | None = None
    for j in range(sys.n):
        if h[j] > H or dmap.dist[j] is None:
            continue
        if best is None or dmap.dist[j] < dmap.dist[best]:
            best = j
    if best is None:
        raise InfeasibleError(
            f"no single sensor is affordable within placement budget {H}"
            if min(h, default=0) > H
            else "no affordable node is reachable from the input"
        )
    chosen = Indicator.from_support(sys.n, [best])
    pair = closed_form_covariance(sys, chosen, dmap)
    return SolveReport(
        chosen=chosen,
        objective=_pick_trace(pair, objective),
        zeta=dmap.dist[best],
        spent=h[best],
        covariance=pair,
    )


def attack_layers(placement: Indicator, dmap: DistanceMap) -> list[tuple[int | None, list[int]]]:
    """Placed sensors grouped by distance from the input, nearest first.

    Unreachable sensors form a final layer keyed None; removing them can
    never change the surviving minimum distance.
    """
    groups: dict[int, list[int]] = {}
    unreachable: list[int] = []
    for j in placement.support():
        d = dmap.dist[j]
        if d is None:
            unreachable.append(j)
        else:
            groups.setdefault(d, []).append(j)
    layers: list[tuple[int | None, list[int]]] = [(d, groups[d]) for d in sorted(groups)]
    if unreachable:
        layers.append((None, unreachable))
    return layers


def solve_gkfsa(
    sys: NetworkSystem,
    costs: CostModel,
    placement: Indicator,
    dmap: DistanceMap,
    objective: str = "priori",
) -> SolveReport:
    """Max-trace sensor attack: strip whole distance layers outward from the
    input while the remaining budget covers them, then stop.

    Leftover budget is not spent on partial layers; a partly-removed layer
    leaves the surviving minimum distance unchanged. The empty attack is
    always feasible, so there is no infeasible case.
    """
    if costs.n != sys.n:
        raise ValueError("cost vector length must match system dimension")
    if len(placement) != sys.n:
        raise ValueError("placement length must match system dimension")
    if placement.is_empty():
        raise ValueError("attack requires a nonempty placement")
    f, F = costs.attack_costs, costs.attack_budget
    remaining = F
    removed: list[int] = []
    for _, nodes in attack_layers(placement, dmap):
        layer_cost = sum(f[j] for j in nodes)
        if layer_cost > remaining:
            break
        removed.extend(nodes)
        remaining -= layer_cost
    attack = Indicator.from_support(sys.n, removed)
    survivors = placement.minus(attack)
    pair = evaluate_placement(sys, survivors, dmap)
    return SolveReport(
        chosen=attack,
        objective=_pick_trace(pair, objective),
        zeta=surviving_zeta(survivors, dmap),
        spent=F - remaining,
        covariance=pair,
    )

"""Problem-instance bundle, random generators, and JSON (de)serialization.

An instance couples the dynamical system with the placement/attack cost
structure. Node indices are 0-based everywhere in this package, including
``input_node`` in instance files.

File schema (JSON object):
  n           int
  A           n x n row-major array of arrays
  input_node  0-based int
  sigma_w2    nonnegative float
  V           null, {"iso": s} for s * identity, or an n x n array
  h, f        length-n arrays of nonnegative ints
  H, F        nonnegative ints
  metadata    free-form object (generator tag, seed, notes)

Matrix entries are emitted with Python float repr, which round-trips
exactly, so save -> load is lossless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InstanceFormatError
from .graphs import (
    bfs_distances,
    check_distance_assumption,
    graph_from_matrix,
    is_strongly_connected,
)
from .kalman import Indicator, NetworkSystem, check_detectable, check_stabilizable
from .solvers import CostModel

MAX_GENERATION_ATTEMPTS = 1000
COST_RANGE = (1, 10)


@dataclass(frozen=True)
class ProblemInstance:
    system: NetworkSystem
    costs: CostModel
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.costs.n != self.system.n:
            raise ValueError("cost vectors must match the system dimension")


def check_instance(inst: ProblemInstance) -> dict:
    """Structural assumption checks, reported as a dict of booleans.

    ``distance_ok`` covers both reachability of all nodes from the input and
    non-cancellation of the matrix powers along shortest paths;
    ``detectable`` checks every single-sensor pair, which implies every
    nonempty placement (adding measurement rows never breaks detectability).
    """
    A = inst.system.A
    g = graph_from_matrix(A)
    dcheck = check_distance_assumption(A, inst.system.input_node)
    detectable = all(
        check_detectable(A, Indicator.from_support(inst.system.n, [j]))
        for j in range(inst.system.n)
    )
    return {
        "strongly_connected": is_strongly_connected(g),
        "distance_ok": bool(dcheck),
        "stabilizable": check_stabilizable(
            A, inst.system.input_node, inst.system.input_variance
        ),
        "detectable": detectable,
    }


def _random_cycle_edges(n: int, rng) -> set[tuple[int, int]]:
    order = rng.permutation(n)
    return {(int(order[i]), int(order[(i + 1) % n])) for i in range(n)}


def generate_row_stochastic_instance(
    n: int,
    extra_edges: int | None = None,
    seed: int = 0,
    sigma_w2: float = 1.0,
    self_loops: bool = True,
) -> ProblemInstance:
    """Random strongly connected row-stochastic system with integer costs.

    A random Hamiltonian cycle guarantees strong connectivity; extra random
    edges (default n of them) and optional self-loops are layered on top,
    and each row is normalized over positive uniform weights. Row-stochastic
    irreducible matrices satisfy the distance assumption automatically, but
    it is asserted numerically anyway. Budgets are drawn wide: H in
    [min h, sum h] always affords some placement, F in [0, sum f] spans
    powerless to overwhelming adversaries.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    rng = np.random.default_rng(seed)
    if extra_edges is None:
        extra_edges = n
    edges = _random_cycle_edges(n, rng)
    if self_loops:
        edges |= {(j, j) for j in range(n)}
    candidates = [(j, i) for j in range(n) for i in range(n) if (j, i) not in edges]
    if extra_edges > 0 and candidates:
        take = min(extra_edges, len(candidates))
        for idx in rng.choice(len(candidates), size=take, replace=False):
            edges.add(candidates[int(idx)])
    A = np.zeros((n, n))
    for j, i in edges:
        A[i, j] = rng.uniform(0.5, 1.5)
    A /= A.sum(axis=1, keepdims=True)
    input_node = int(rng.integers(0, n))
    g = graph_from_matrix(A)
    if not is_strongly_connected(g):
        raise GenerationError("cycle backbone failed to produce strong connectivity")
    if not check_distance_assumption(A, input_node):
        raise GenerationError("row-stochastic instance failed the distance check")
    h = [int(v) for v in rng.integers(COST_RANGE[0], COST_RANGE[1] + 1, size=n)]
    f = [int(v) for v in rng.integers(COST_RANGE[0], COST_RANGE[1] + 1, size=n)]
    H = int(rng.integers(min(h), sum(h) + 1))
    F = int(rng.integers(0, sum(f) + 1))
    system = NetworkSystem(A, input_node=input_node, input_variance=float(sigma_w2))
    costs = CostModel(tuple(h), H, tuple(f), F)
    meta = {"generator": "row_stochastic", "seed": int(seed), "n": n}
    return ProblemInstance(system, costs, meta)


def generate_normal_instance(
    n: int = 10,
    edge_count: int = 15,
    sigma_w2: float = 0.1,
    sigma_v2: float = 0.0,
    seed: int = 0,
    input_node: int = 0,
) -> ProblemInstance:
    """Sparse system with standard-normal edge weights, resampled until the
    structural assumptions hold numerically.

    edge_count counts every nonzero entry of A, self-loops included. The
    backbone is a random Hamiltonian cycle (n edges); the remaining
    edge_count - n positions are drawn uniformly from the rest of the
    matrix. Rejections (failed connectivity/distance/detectability/
    stabilizability checks) are counted in the metadata.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if edge_count < n:
        raise ValueError("edge_count must be at least n to keep the graph connected")
    if edge_count > n * n:
        raise ValueError("edge_count exceeds the number of matrix positions")
    rng = np.random.default_rng(seed)
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        edges = _random_cycle_edges(n, rng)
        candidates = [(j, i) for j in range(n) for i in range(n) if (j, i) not in edges]
        need = edge_count - len(edges)
        for idx in rng.choice(len(candidates), size=need, replace=False):
            edges.add(candidates[int(idx)])
        A = np.zeros((n, n))
        for j, i in edges:
            A[i, j] = rng.standard_normal()
        if not is_strongly_connected(graph_from_matrix(A)):
            continue
        if not check_distance_assumption(A, input_node):
            continue
        if not check_stabilizable(A, input_node, sigma_w2):
            continue
        if not all(
            check_detectable(A, Indicator.from_support(n, [j])) for j in range(n)
        ):
            continue
        V = float(sigma_v2) * np.eye(n) if sigma_v2 > 0 else None
        system = NetworkSystem(A, input_node=input_node, input_variance=float(sigma_w2), sensor_noise=V)
        h = [int(v) for v in rng.integers(COST_RANGE[0], COST_RANGE[1] + 1, size=n)]
        f = [int(v) for v in rng.integers(COST_RANGE[0], COST_RANGE[1] + 1, size=n)]
        H = int(rng.integers(min(h), sum(h) + 1))
        F = int(rng.integers(0, sum(f) + 1))
        costs = CostModel(tuple(h), H, tuple(f), F)
        meta = {
            "generator": "normal",
            "seed": int(seed),
            "n": n,
            "edge_count": edge_count,
            "rejections": attempt,
        }
        return ProblemInstance(system, costs, meta)
    raise GenerationError(
        f"no viable system after {MAX_GENERATION_ATTEMPTS} attempts (n={n}, edges={edge_count})"
    )


def _require(doc: dict, key: str):
    if key not in doc:
        raise InstanceFormatError(f"missing required field {key!r}", field=key)
    return doc[key]


def _as_noise(value, n: int) -> np.ndarray | None:
    if value is None:
        return None
    if isinstance(value, dict):
        if set(value) != {"iso"}:
            raise InstanceFormatError("V object form must be exactly {\"iso\": s}", field="V")
        s = float(value["iso"])
        if s < 0:
            raise InstanceFormatError("V iso scale must be nonnegative", field="V")
        return s * np.eye(n) if s > 0 else None
    M = np.asarray(value, dtype=float)
    if M.shape != (n, n):
        raise InstanceFormatError(f"V must be {n}x{n}, got {M.shape}", field="V")
    return M


def instance_to_dict(inst: ProblemInstance) -> dict:
    sysm = inst.system
    V = sysm.sensor_noise
    if V is None:
        v_doc = None
    else:
        diag = V[0, 0]
        if np.array_equal(V, diag * np.eye(sysm.n)):
            v_doc = {"iso": float(diag)}
        else:
            v_doc = [[float(x) for x in row] for row in V]
    return {
        "n": sysm.n,
        "A": [[float(x) for x in row] for row in sysm.A],
        "input_node": sysm.input_node,
        "sigma_w2": float(sysm.input_variance),
        "V": v_doc,
        "h": list(inst.costs.placement_costs),
        "H": inst.costs.placement_budget,
        "f": list(inst.costs.attack_costs),
        "F": inst.costs.attack_budget,
        "metadata": inst.metadata,
    }


def instance_from_dict(doc: dict) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    n = _require(doc, "n")
    if not isinstance(n, int) or n < 1:
        raise InstanceFormatError("n must be a positive integer", field="n")
    A = np.asarray(_require(doc, "A"), dtype=float)
    if A.shape != (n, n):
        raise InstanceFormatError(f"A must be {n}x{n}, got {A.shape}", field="A")
    input_node = _require(doc, "input_node")
    if not isinstance(input_node, int) or not 0 <= input_node < n:
        raise InstanceFormatError("input_node must be a 0-based index into the nodes", field="input_node")
    sigma_w2 = float(_require(doc, "sigma_w2"))
    if sigma_w2 < 0:
        raise InstanceFormatError("sigma_w2 must be nonnegative", field="sigma_w2")
    V = _as_noise(doc.get("V"), n)
    h = _require(doc, "h")
    f = _require(doc, "f")
    for name, vec in (("h", h), ("f", f)):
        if not isinstance(vec, list) or len(vec) != n:
            raise InstanceFormatError(f"{name} must be a length-{n} array", field=name)
        if not all(isinstance(v, int) and v >= 0 for v in vec):
            raise InstanceFormatError(f"{name} entries must be nonnegative integers", field=name)
    H = _require(doc, "H")
    F = _require(doc, "F")
    for name, v in (("H", H), ("F", F)):
        if not isinstance(v, int) or v < 0:
            raise InstanceFormatError(f"{name} must be a nonnegative integer", field=name)
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InstanceFormatError("metadata must be an object", field="metadata")
    try:
        system = NetworkSystem(A, input_node=input_node, input_variance=sigma_w2, sensor_noise=V)
        costs = CostModel(tuple(h), H, tuple(f), F)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc
    return ProblemInstance(system, costs, dict(metadata))


def save_instance(inst: ProblemInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2)
        fh.write("\n")


def load_instance(path, validate: bool = False) -> ProblemInstance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    inst = instance_from_dict(doc)
    if validate:
        inst.metadata["checks"] = check_instance(inst)
    return inst


def instance_distances(inst: ProblemInstance):
    return bfs_distances(graph_from_matrix(inst.system.A), inst.system.input_node)

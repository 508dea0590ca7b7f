"""Request/response models for the HTTP service.

Infinite traces never appear as JSON numbers: covariance fields are nulled
and a boolean flag marks divergence, so strict JSON parsers stay happy.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..instances import ProblemInstance, instance_from_dict, instance_to_dict


class InstancePayload(BaseModel):
    """Wire form of a problem instance; mirrors the instance file schema."""

    n: int
    A: list[list[float]]
    input_node: int
    sigma_w2: float = 1.0
    V: dict | list[list[float]] | None = None
    h: list[int]
    H: int
    f: list[int]
    F: int
    metadata: dict = Field(default_factory=dict)

    def to_instance(self) -> ProblemInstance:
        # One validator for files and requests alike.
        return instance_from_dict(self.model_dump())

    @classmethod
    def from_instance(cls, inst: ProblemInstance) -> "InstancePayload":
        return cls(**instance_to_dict(inst))


class Tolerances(BaseModel):
    zero_tol: float
    conv_tol: float
    max_iter: int
    svd_tol: float
    rank_tol: float
    lyapunov_tol: float
    stability_margin: float


class CovarianceSummary(BaseModel):
    """Traces of the steady pair; null values mean the limit diverges."""

    trace_priori: float | None
    trace_posteriori: float | None
    infinite: bool


class PlaceRequest(BaseModel):
    instance: InstancePayload
    objective: str = "priori"


class PlaceResponse(BaseModel):
    placement: list[int]
    support: list[int]
    zeta: int | None
    spent: int
    objective: float | None
    objective_kind: str
    covariance: CovarianceSummary
    tolerances: Tolerances


class AttackRequest(BaseModel):
    instance: InstancePayload
    placement: list[int]
    objective: str = "priori"


class AttackResponse(BaseModel):
    attack: list[int]
    removed: list[int]
    survivors: list[int]
    zeta: int | None
    spent: int
    objective: float | None
    objective_kind: str
    covariance: CovarianceSummary
    tolerances: Tolerances


class ResilientRequest(BaseModel):
    instance: InstancePayload
    objective: str = "priori"


class ResilientResponse(BaseModel):
    placement: list[int]
    support: list[int]
    feasible: bool
    worst_attack: list[int] | None
    zeta: int | None
    spent: int
    objective: float | None
    objective_kind: str
    covariance: CovarianceSummary
    tolerances: Tolerances


class VerifyRequest(BaseModel):
    instance: InstancePayload
    problem: str = "all"
    placement: list[int] | None = None
    objective: str = "priori"
    gap_tol: float = 1e-8


class VerifyEntry(BaseModel):
    problem: str
    solver_objective: float | None
    oracle_objective: float | None
    gap: float | None
    match: bool


class VerifyResponse(BaseModel):
    match: bool
    entries: list[VerifyEntry]
    gap_tol: float
    tolerances: Tolerances


class BoundRequest(BaseModel):
    instance: InstancePayload
    placement: list[int]


class BoundResponse(BaseModel):
    trace_zero_priori: float
    trace_zero_posteriori: float
    trace_correction: float
    trace_correction_posteriori: float
    bound_priori: float
    bound_posteriori: float
    bound_posteriori_joseph: float
    closed_loop_radius: float
    noisy: CovarianceSummary | None
    tolerances: Tolerances


class ExperimentRequest(BaseModel):
    problem: str
    realizations: int = 1
    sigma_v2_values: list[float] = [0.01, 0.05, 0.1, 0.2, 0.5]
    seed: int = 0
    n: int = 10
    edge_count: int = 15
    sigma_w2: float = 0.1
    brute_cap: int = 12
    objective: str = "priori"
    jobs: int = 1


class ExperimentRowModel(BaseModel):
    seed: int
    problem: str
    sigma_v2: float
    opt: float
    alg: float
    bound: float | None
    subopt: float


class ExperimentResponse(BaseModel):
    rows: list[ExperimentRowModel]
    csv: str
    tolerances: Tolerances


class ReduceRequest(BaseModel):
    sizes: list[int]
    target: int


class ReduceResponse(BaseModel):
    instance: InstancePayload
    set_size: int
    binary_nodes: int
    threshold: float
    tolerances: Tolerances


class GenerateRequest(BaseModel):
    kind: str = "stochastic"
    n: int = 10
    seed: int = 0
    extra_edges: int | None = None
    edge_count: int = 15
    sigma_w2: float | None = None
    sigma_v2: float = 0.0


class GenerateResponse(BaseModel):
    instance: InstancePayload
    tolerances: Tolerances


class ErrorBody(BaseModel):
    error: str
    message: str

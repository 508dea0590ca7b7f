"""HTTP service exposing the solvers, oracles, bounds, and generators.

Stateless JSON in/out; instances travel in full with every request. Error
mapping: malformed input and exceeded enumeration caps give 400, infeasible
problems give 409, numerical failures (divergence, instability,
cross-check disagreement) give 500. Verification mismatches are not errors;
they return 200 with ``match: false``.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import (
    InfeasibleError,
    InstanceFormatError,
    KfplaceError,
    SizeCapError,
)
from ..graphs import DEFAULT_ZERO_TOL
from ..instances import (
    ProblemInstance,
    generate_normal_instance,
    generate_row_stochastic_instance,
    instance_distances,
)
from ..kalman import (
    CovariancePair,
    DEFAULT_CONV_TOL,
    DEFAULT_MAX_ITER,
    DEFAULT_RANK_TOL,
    DEFAULT_SVD_TOL,
    Indicator,
    STABILITY_MARGIN,
    dare_solve,
)
from ..noise import (
    ExperimentConfig,
    LYAPUNOV_TOL,
    compute_noise_bound,
    gap_experiment,
    rows_to_csv,
)
from ..oracle import brute_gkfsa, brute_gkfsp, brute_rgkfsp
from ..resilient import (
    SubsetSumInstance,
    bit_length_of,
    build_reduction_instance,
    reduction_threshold,
    solve_rgkfsp,
)
from ..solvers import solve_gkfsa, solve_gkfsp
from . import schemas as S

app = FastAPI(title="kfplace", version=__version__)

TOLERANCES = S.Tolerances(
    zero_tol=DEFAULT_ZERO_TOL,
    conv_tol=DEFAULT_CONV_TOL,
    max_iter=DEFAULT_MAX_ITER,
    svd_tol=DEFAULT_SVD_TOL,
    rank_tol=DEFAULT_RANK_TOL,
    lyapunov_tol=LYAPUNOV_TOL,
    stability_margin=STABILITY_MARGIN,
)


def _error_response(status: int, kind: str, exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": kind, "message": str(exc)}
    )


@app.exception_handler(InstanceFormatError)
async def _on_format(_, exc):
    return _error_response(400, "invalid_instance", exc)


@app.exception_handler(SizeCapError)
async def _on_cap(_, exc):
    return _error_response(400, "size_cap", exc)


@app.exception_handler(ValueError)
async def _on_value(_, exc):
    return _error_response(400, "invalid_request", exc)


@app.exception_handler(InfeasibleError)
async def _on_infeasible(_, exc):
    return _error_response(409, "infeasible", exc)


@app.exception_handler(KfplaceError)
async def _on_numerical(_, exc):
    return _error_response(500, type(exc).__name__, exc)


def _finite(x: float) -> float | None:
    return None if math.isinf(x) else float(x)


def _cov_summary(pair: CovariancePair) -> S.CovarianceSummary:
    return S.CovarianceSummary(
        trace_priori=_finite(pair.trace_priori),
        trace_posteriori=_finite(pair.trace_posteriori),
        infinite=pair.is_infinite,
    )


def _indicator(bits: list[int], n: int, label: str) -> Indicator:
    if len(bits) != n:
        raise ValueError(f"{label} must have length {n}, got {len(bits)}")
    return Indicator(tuple(bits))


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/place", response_model=S.PlaceResponse)
def place(req: S.PlaceRequest):
    inst = req.instance.to_instance()
    dmap = instance_distances(inst)
    rep = solve_gkfsp(inst.system, inst.costs, dmap, objective=req.objective)
    return S.PlaceResponse(
        placement=list(rep.chosen.bits),
        support=list(rep.chosen.support()),
        zeta=rep.zeta,
        spent=rep.spent,
        objective=_finite(rep.objective),
        objective_kind=req.objective,
        covariance=_cov_summary(rep.covariance),
        tolerances=TOLERANCES,
    )


@app.post("/attack", response_model=S.AttackResponse)
def attack(req: S.AttackRequest):
    inst = req.instance.to_instance()
    dmap = instance_distances(inst)
    mu = _indicator(req.placement, inst.system.n, "placement")
    rep = solve_gkfsa(inst.system, inst.costs, mu, dmap, objective=req.objective)
    return S.AttackResponse(
        attack=list(rep.chosen.bits),
        removed=list(rep.chosen.support()),
        survivors=list(mu.minus(rep.chosen).support()),
        zeta=rep.zeta,
        spent=rep.spent,
        objective=_finite(rep.objective),
        objective_kind=req.objective,
        covariance=_cov_summary(rep.covariance),
        tolerances=TOLERANCES,
    )


@app.post("/resilient", response_model=S.ResilientResponse)
def resilient(req: S.ResilientRequest):
    inst = req.instance.to_instance()
    dmap = instance_distances(inst)
    rep = solve_rgkfsp(inst.system, inst.costs, dmap, objective=req.objective)
    return S.ResilientResponse(
        placement=list(rep.chosen.bits),
        support=list(rep.chosen.support()),
        feasible=not rep.chosen.is_empty(),
        worst_attack=list(rep.attack.bits) if rep.attack is not None else None,
        zeta=rep.zeta,
        spent=rep.spent,
        objective=_finite(rep.objective),
        objective_kind=req.objective,
        covariance=_cov_summary(rep.covariance),
        tolerances=TOLERANCES,
    )


def _gap(a: float | None, b: float | None) -> float | None:
    if a is None or b is None:
        return None
    return abs(a - b)


def _verify_one(inst: ProblemInstance, dmap, problem: str, req: S.VerifyRequest) -> S.VerifyEntry:
    obj = req.objective
    solver_val: float | None
    oracle_val: float | None
    if problem == "gkfsp":
        try:
            solver_val = solve_gkfsp(inst.system, inst.costs, dmap, objective=obj).objective
        except InfeasibleError:
            solver_val = None
        try:
            oracle_val = brute_gkfsp(inst.system, inst.costs, dmap, objective=obj).objective
        except InfeasibleError:
            oracle_val = None
    elif problem == "gkfsa":
        mu = (
            _indicator(req.placement, inst.system.n, "placement")
            if req.placement is not None
            else Indicator((1,) * inst.system.n)
        )
        solver_val = solve_gkfsa(inst.system, inst.costs, mu, dmap, objective=obj).objective
        oracle_val = brute_gkfsa(inst.system, inst.costs, mu, dmap, objective=obj).objective
    elif problem == "rgkfsp":
        solver_val = solve_rgkfsp(inst.system, inst.costs, dmap, objective=obj).objective
        oracle_val = brute_rgkfsp(inst.system, inst.costs, dmap, objective=obj).objective
    else:
        raise ValueError(f"unknown problem {problem!r}")
    if solver_val is None or oracle_val is None:
        match = solver_val is None and oracle_val is None
        gap = None
    elif math.isinf(solver_val) or math.isinf(oracle_val):
        match = solver_val == oracle_val
        gap = 0.0 if match else None
    else:
        gap = abs(solver_val - oracle_val)
        match = gap <= req.gap_tol
    return S.VerifyEntry(
        problem=problem,
        solver_objective=None if solver_val is None else _finite(solver_val),
        oracle_objective=None if oracle_val is None else _finite(oracle_val),
        gap=gap,
        match=match,
    )


@app.post("/verify", response_model=S.VerifyResponse)
def verify(req: S.VerifyRequest):
    inst = req.instance.to_instance()
    dmap = instance_distances(inst)
    problems = ["gkfsp", "gkfsa", "rgkfsp"] if req.problem == "all" else [req.problem]
    entries = [_verify_one(inst, dmap, p, req) for p in problems]
    return S.VerifyResponse(
        match=all(e.match for e in entries),
        entries=entries,
        gap_tol=req.gap_tol,
        tolerances=TOLERANCES,
    )


@app.post("/bound", response_model=S.BoundResponse)
def bound(req: S.BoundRequest):
    inst = req.instance.to_instance()
    mu = _indicator(req.placement, inst.system.n, "placement")
    rep = compute_noise_bound(inst.system, mu)
    noisy = (
        _cov_summary(dare_solve(inst.system, mu))
        if inst.system.has_sensor_noise()
        else None
    )
    return S.BoundResponse(
        trace_zero_priori=rep.zero_noise.trace_priori,
        trace_zero_posteriori=rep.zero_noise.trace_posteriori,
        trace_correction=float(np.trace(rep.E)),
        trace_correction_posteriori=float(np.trace(rep.E_post)),
        bound_priori=rep.bound_priori,
        bound_posteriori=rep.bound_posteriori,
        bound_posteriori_joseph=rep.bound_posteriori_joseph,
        closed_loop_radius=rep.closed_loop_radius,
        noisy=noisy,
        tolerances=TOLERANCES,
    )


@app.post("/experiment", response_model=S.ExperimentResponse)
def experiment(req: S.ExperimentRequest):
    cfg = ExperimentConfig(
        problem=req.problem,
        realizations=req.realizations,
        sigma_v2_values=tuple(req.sigma_v2_values),
        seed=req.seed,
        n=req.n,
        edge_count=req.edge_count,
        sigma_w2=req.sigma_w2,
        brute_cap=req.brute_cap,
        objective=req.objective,
        jobs=req.jobs,
    )
    rows = gap_experiment(cfg)
    models = [
        S.ExperimentRowModel(
            seed=r.seed,
            problem=r.problem,
            sigma_v2=r.sigma_v2,
            opt=r.opt,
            alg=r.alg,
            bound=_finite(r.bound),
            subopt=r.subopt,
        )
        for r in rows
    ]
    return S.ExperimentResponse(rows=models, csv=rows_to_csv(rows), tolerances=TOLERANCES)


@app.post("/reduce-subset-sum", response_model=S.ReduceResponse)
def reduce_subset_sum(req: S.ReduceRequest):
    ss = SubsetSumInstance(tuple(req.sizes), req.target)
    system, costs = build_reduction_instance(ss)
    inst = ProblemInstance(
        system,
        costs,
        {"generator": "subset_sum_reduction", "sizes": list(ss.sizes), "target": ss.target},
    )
    return S.ReduceResponse(
        instance=S.InstancePayload.from_instance(inst),
        set_size=len(ss.sizes),
        binary_nodes=bit_length_of(ss.target),
        threshold=reduction_threshold(system, len(ss.sizes)),
        tolerances=TOLERANCES,
    )


@app.post("/generate", response_model=S.GenerateResponse)
def generate(req: S.GenerateRequest):
    if req.kind == "stochastic":
        inst = generate_row_stochastic_instance(
            n=req.n,
            extra_edges=req.extra_edges,
            seed=req.seed,
            sigma_w2=req.sigma_w2 if req.sigma_w2 is not None else 1.0,
        )
    elif req.kind == "normal":
        inst = generate_normal_instance(
            n=req.n,
            edge_count=req.edge_count,
            sigma_w2=req.sigma_w2 if req.sigma_w2 is not None else 0.1,
            sigma_v2=req.sigma_v2,
            seed=req.seed,
        )
    else:
        raise ValueError(f"kind must be 'stochastic' or 'normal', got {req.kind!r}")
    return S.GenerateResponse(
        instance=S.InstancePayload.from_instance(inst), tolerances=TOLERANCES
    )

"""Noisy-measurement corrections and suboptimality experiments.

With sensor noise the distance-based solvers are no longer exact, but the
noisy steady covariance is sandwiched: it dominates the zero-noise
covariance and is dominated by it plus a correction E that solves a
discrete Lyapunov equation driven by the zero-noise Kalman gain. The gap
experiment measures how far the zero-noise solutions actually fall from the
noisy optimum (found by brute force) and logs the correction traces as the
certified bound.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InstabilityError, SizeCapError
from .graphs import bfs_distances, graph_from_matrix
from .kalman import (
    CovariancePair,
    DEFAULT_SVD_TOL,
    Indicator,
    NetworkSystem,
    STABILITY_MARGIN,
    dare_solve,
    pseudo_inverse,
    spectral_radius,
)
from .instances import generate_normal_instance
from .oracle import brute_gkfsa, brute_gkfsp, brute_rgkfsp
from .resilient import KnapsackInstance, knapsack_dp, solve_rgkfsp
from .solvers import CostModel, solve_gkfsa, solve_gkfsp

LYAPUNOV_TOL = 1e-12
LYAPUNOV_CAP = 10**6


def lyapunov_fixed_point(M, Q, tol: float = LYAPUNOV_TOL, cap: int = LYAPUNOV_CAP) -> np.ndarray:
    """Iterate X <- M X M^T + Q from zero until the update stalls.

    The iterate after k steps is the k-term partial sum of the series
    sum_m M^m Q (M^T)^m, so this converges exactly when rho(M) < 1.
    """
    M = np.asarray(M, dtype=float)
    Q = np.asarray(Q, dtype=float)
    X = np.zeros_like(Q)
    for k in range(cap):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = M @ X @ M.T + Q
        if not np.isfinite(nxt).all():
            raise DivergenceError(
                "Lyapunov iterate overflowed; the driving matrix is unstable",
                last_iterate=X,
                iterations=k,
            )
        # Magnitude-scaled test, same reasoning as the Riccati loop: large
        # fixed points cannot settle below an absolute tolerance in doubles.
        if np.abs(nxt - X).max() < tol * max(1.0, float(np.abs(nxt).max())):
            return (nxt + nxt.T) / 2.0
        X = nxt
    raise DivergenceError(
        f"Lyapunov iteration did not settle within {cap} steps",
        last_iterate=X,
        iterations=cap,
    )


def lyapunov_series(M, Q, tol: float = LYAPUNOV_TOL, max_doublings: int = 64) -> np.ndarray:
    """Same series, summed by repeated doubling: S <- S + P S P^T, P <- P^2.

    After k rounds S holds 2^k terms, so this is an independent route to
    the fixed point (log-many matrix products instead of a linear recursion).
    """
    S = np.asarray(Q, dtype=float).copy()
    P = np.asarray(M, dtype=float).copy()
    for k in range(max_doublings):
        with np.errstate(over="ignore", invalid="ignore"):
            T = P @ S @ P.T
        if not np.isfinite(T).all():
            raise DivergenceError(
                "doubling sum overflowed; the driving matrix is unstable",
                last_iterate=S,
                iterations=k,
            )
        if np.abs(T).max() < tol * max(1.0, float(np.abs(S).max())):
            S = S + T
            return (S + S.T) / 2.0
        S = S + T
        P = P @ P
    raise DivergenceError(
        f"doubling sum did not settle within {max_doublings} rounds", last_iterate=S
    )


@dataclass(frozen=True)
class NoiseBoundReport:
    """Correction matrices and trace bounds for a noisy placement.

    bound_priori always dominates the noisy a priori trace: the fixed-gain
    filter whose covariance it describes is a genuine (suboptimal) filter.

    bound_posteriori applies the optimal-gain shortcut (I - LC)E for the
    measurement update. The shortcut is exact only at zero noise; under
    noise it can undershoot the true posteriori covariance (take A = 0 with
    a sensor on the input node: E = 0, so the shortcut bound is 0, but the
    noisy posteriori variance is positive). bound_posteriori_joseph instead
    uses the full symmetric (Joseph) update of the fixed-gain filter,
    (I-LC)(Sigma+E)(I-LC)^T + L Vblock L^T, which provably dominates.
    """

    E: np.ndarray
    E_post: np.ndarray
    gain_K: np.ndarray
    gain_L: np.ndarray
    bound_priori: float
    bound_posteriori: float
    joseph_posteriori: np.ndarray
    bound_posteriori_joseph: float
    zero_noise: CovariancePair
    closed_loop_radius: float


def compute_noise_bound(
    sys: NetworkSystem,
    placement: Indicator,
    svd_tol: float = DEFAULT_SVD_TOL,
    lyap_tol: float = LYAPUNOV_TOL,
) -> NoiseBoundReport:
    """Zero-noise gains K, L and the Lyapunov correction E for a placement.

    E solves E = (A - KC) E (A - KC)^T + K Vblock K^T where K, L come from
    the zero-noise steady covariance. Requires the zero-noise covariance to
    be finite and the closed loop A - KC to be strictly stable. The second
    requirement can fail even for detectable, stabilizable pairs: the
    zero-noise gain only corrects directions the single input excites, so an
    unstable mode of A outside that subspace survives in A - KC.
    """
    if placement.is_empty():
        raise ValueError("noise bound requires a nonempty placement")
    zero_sys = NetworkSystem(sys.A, sys.input_node, sys.input_variance, None)
    pair = dare_solve(zero_sys, placement)
    if pair.is_infinite:
        raise InstabilityError(
            "zero-noise covariance diverges for this placement; "
            "the pair is undetectable with unstable dynamics"
        )
    A = sys.A
    C = sys.measurement_matrix(placement)
    sigma = pair.priori
    inv = pseudo_inverse(C @ sigma @ C.T, svd_tol)
    K = A @ sigma @ C.T @ inv
    L = sigma @ C.T @ inv
    M = A - K @ C
    radius = spectral_radius(M)
    if radius >= 1.0 - STABILITY_MARGIN:
        # The zero-noise gain only corrects directions the input noise
        # excites; leftover unstable modes of A survive in A - KC and the
        # correction series diverges, so no finite bound exists.
        raise InstabilityError(
            f"closed loop A - KC has spectral radius {radius:.6f}, so the "
            "noise-correction series diverges for this placement",
            spectral_radius=radius,
        )
    Vblock = sys.noise_block(placement)
    E = lyapunov_fixed_point(M, K @ Vblock @ K.T, tol=lyap_tol)
    J = np.eye(sys.n) - L @ C
    E_post = J @ E
    joseph = J @ (pair.priori + E) @ J.T + L @ Vblock @ L.T
    return NoiseBoundReport(
        E=E,
        E_post=E_post,
        gain_K=K,
        gain_L=L,
        bound_priori=pair.trace_priori + float(np.trace(E)),
        bound_posteriori=pair.trace_posteriori + float(np.trace(E_post)),
        joseph_posteriori=joseph,
        bound_posteriori_joseph=float(np.trace(joseph)),
        zero_noise=pair,
        closed_loop_radius=radius,
    )


PROBLEMS = ("gkfsp", "gkfsa", "rgkfsp")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    realizations: int = 1
    sigma_v2_values: tuple[float, ...] = (0.01, 0.05, 0.1, 0.2, 0.5)
    seed: int = 0
    n: int = 10
    edge_count: int = 15
    sigma_w2: float = 0.1
    brute_cap: int = 12
    attack_placement: Indicator | None = None
    objective: str = "priori"
    jobs: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.realizations < 1:
            raise ValueError("realizations must be positive")
        if any(s < 0 for s in self.sigma_v2_values):
            raise ValueError("sigma_v2 values must be nonnegative")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")


@dataclass(frozen=True)
class ExperimentRow:
    seed: int
    problem: str
    sigma_v2: float
    opt: float
    alg: float
    bound: float
    subopt: float


CSV_HEADER = ("seed", "problem", "sigma_v2", "opt", "alg", "bound", "subopt")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r.seed, r.problem, r.sigma_v2, r.opt, r.alg, r.bound, r.subopt])
    return buf.getvalue()


def _noisy_system(base: NetworkSystem, sigma_v2: float) -> NetworkSystem:
    V = sigma_v2 * np.eye(base.n) if sigma_v2 > 0 else None
    return NetworkSystem(base.A, base.input_node, base.input_variance, V)


def _experiment_budgets(inst, config: ExperimentConfig, inst_seed: int) -> CostModel:
    """Budgets redrawn so the noisy optimum stays finite for the problem.

    The attacker must never afford wiping out the relevant placement: for
    the attack problem F < f . mu, and for the resilient problem F is kept
    below the best attack-cost total the designer can afford (the all-node
    knapsack value), so a feasible placement exists.
    """
    h, f = inst.costs.placement_costs, inst.costs.attack_costs
    H = inst.costs.placement_budget
    rng = np.random.default_rng([inst_seed, 1])
    if config.problem == "gkfsp":
        return CostModel(h, H, f, 0)
    if config.problem == "gkfsa":
        mu = config.attack_placement or Indicator((1,) * inst.system.n)
        total = mu.cost(f)
        return CostModel(h, H, f, int(rng.integers(0, total)))
    z = knapsack_dp(KnapsackInstance(values=f, sizes=h, capacity=H)).value
    return CostModel(h, H, f, int(rng.integers(0, z)))


def gap_experiment(config: ExperimentConfig) -> list[ExperimentRow]:
    """Measure zero-noise solver quality on noisy instances against brute force.

    Per realization: draw a fresh system and costs, then for every noise
    level compute OPT (noisy brute force), ALG (the zero-noise solver's
    answer evaluated under noise), and the correction-trace bound certifying
    |ALG - OPT|. Suboptimality is (ALG - OPT) / OPT, negative for the
    attacker problem where ALG falls short of the maximum.
    """
    if config.n > config.brute_cap:
        raise SizeCapError(
            f"brute-force reference capped at n = {config.brute_cap}, got {config.n}"
        )
    rng = np.random.default_rng(config.seed)
    inst_seeds = [int(s) for s in rng.integers(0, 2**31 - 1, size=config.realizations)]
    if config.jobs > 1 and len(inst_seeds) > 1:
        # Realizations are independent given their seeds; map preserves input
        # order so the fan-out cannot change the output.
        from concurrent.futures import ProcessPoolExecutor

        workers = min(config.jobs, len(inst_seeds))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_realization_rows, [(config, s) for s in inst_seeds]))
    else:
        chunks = [_realization_rows((config, s)) for s in inst_seeds]
    return [row for chunk in chunks for row in chunk]


def _realization_rows(args: tuple[ExperimentConfig, int]) -> list[ExperimentRow]:
    config, inst_seed = args
    inst = generate_normal_instance(
        n=config.n,
        edge_count=config.edge_count,
        sigma_w2=config.sigma_w2,
        sigma_v2=0.0,
        seed=inst_seed,
    )
    base = inst.system
    dmap = bfs_distances(graph_from_matrix(base.A), base.input_node)
    costs = _experiment_budgets(inst, config, inst_seed)
    obj = config.objective
    mu_fixed = config.attack_placement or Indicator((1,) * base.n)

    if config.problem == "gkfsp":
        mu_alg = solve_gkfsp(base, costs, dmap, objective=obj).chosen
    elif config.problem == "gkfsa":
        nu_alg = solve_gkfsa(base, costs, mu_fixed, dmap, objective=obj).chosen
    else:
        mu_alg = solve_rgkfsp(base, costs, dmap, objective=obj).chosen

    rows = []
    for sigma_v2 in config.sigma_v2_values:
        nsys = _noisy_system(base, sigma_v2)
        if config.problem == "gkfsp":
            alg = _trace(dare_solve(nsys, mu_alg), obj)
            opt = brute_gkfsp(nsys, costs, dmap, objective=obj).objective
            bound = _bound_trace(nsys, mu_alg, obj)
        elif config.problem == "gkfsa":
            alg = _trace(dare_solve(nsys, mu_fixed.minus(nu_alg)), obj)
            noisy_best = brute_gkfsa(nsys, costs, mu_fixed, dmap, objective=obj)
            opt = noisy_best.objective
            bound = _bound_trace(nsys, mu_fixed.minus(noisy_best.best), obj)
        else:
            noisy_attack = brute_gkfsa(nsys, costs, mu_alg, dmap, objective=obj)
            alg = noisy_attack.objective
            opt = brute_rgkfsp(nsys, costs, dmap, objective=obj).objective
            bound = _bound_trace(nsys, mu_alg.minus(noisy_attack.best), obj)
        rows.append(
            ExperimentRow(
                seed=inst_seed,
                problem=config.problem,
                sigma_v2=float(sigma_v2),
                opt=opt,
                alg=alg,
                bound=bound,
                subopt=(alg - opt) / opt,
            )
        )
    return rows


def _trace(pair: CovariancePair, objective: str) -> float:
    return pair.trace_priori if objective == "priori" else pair.trace_posteriori


def _bound_trace(nsys: NetworkSystem, placement: Indicator, objective: str) -> float:
    """Correction trace certifying the gap, inf when no finite correction exists.

    The infinite case (closed loop of the zero-noise gain not stable) keeps
    the gap-vs-bound inequality vacuously true and is visible in the CSV.
    """
    try:
        report = compute_noise_bound(nsys, placement)
    except InstabilityError:
        return float("inf")
    matrix = report.E if objective == "priori" else report.E_post
    return float(np.trace(matrix))

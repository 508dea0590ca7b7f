"""Sensor placement, sensor attack, and resilient placement for steady-state
Kalman filtering on networked linear systems driven by a single noisy node."""

__version__ = "0.1.0"

from .errors import (
    DivergenceError,
    GenerationError,
    InfeasibleError,
    InstabilityError,
    InstanceFormatError,
    KfplaceError,
    SizeCapError,
)
from .graphs import DirectedGraph, DistanceMap, bfs_distances, graph_from_matrix
from .kalman import (
    CovariancePair,
    Indicator,
    NetworkSystem,
    closed_form_covariance,
    dare_solve,
    truncated_sum_pair,
)
from .solvers import CostModel, SolveReport, evaluate_placement, solve_gkfsa, solve_gkfsp
from .resilient import knapsack_dp, solve_rgkfsp
from .noise import NoiseBoundReport, compute_noise_bound
from .instances import ProblemInstance, load_instance, save_instance

__all__ = [
    "__version__",
    "KfplaceError",
    "InfeasibleError",
    "DivergenceError",
    "InstabilityError",
    "SizeCapError",
    "GenerationError",
    "InstanceFormatError",
    "DirectedGraph",
    "DistanceMap",
    "graph_from_matrix",
    "bfs_distances",
    "NetworkSystem",
    "Indicator",
    "CovariancePair",
    "dare_solve",
    "closed_form_covariance",
    "truncated_sum_pair",
    "CostModel",
    "SolveReport",
    "evaluate_placement",
    "solve_gkfsp",
    "solve_gkfsa",
    "solve_rgkfsp",
    "knapsack_dp",
    "NoiseBoundReport",
    "compute_noise_bound",
    "ProblemInstance",
    "save_instance",
    "load_instance",
]

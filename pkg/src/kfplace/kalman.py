"""Steady-state Kalman error covariances for a single-input networked system.

Model: x[k+1] = A x[k] + B w[k] with B = e_{i0} and var(w) = sigma_w^2;
measurements y = C(mu) x + v restricted to the placed sensors mu, each sensor
row a row of the identity. The steady-state a priori covariance solves the
discrete algebraic Riccati equation; with zero sensor noise and the graph
distance condition it collapses to a finite sum of A^m B B^T (A^T)^m terms
truncated at zeta, the distance from the input node to the nearest sensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError
from .graphs import DistanceMap

DEFAULT_CONV_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
DEFAULT_SVD_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-8

#: Eigenvalues within this margin of the unit circle are treated as unstable.
STABILITY_MARGIN = 1e-9


def pseudo_inverse(M, svd_tol: float = DEFAULT_SVD_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values below svd_tol * sigma_max are treated as zero, so the
    zero matrix maps to the zero matrix.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return M.T.copy()
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros_like(M.T)
    keep = s > svd_tol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def spectral_radius(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def is_stable(A, margin: float = STABILITY_MARGIN) -> bool:
    """Schur stability with a numerical margin: rho(A) < 1 - margin."""
    return spectral_radius(A) < 1.0 - margin


@dataclass(frozen=True)
class Indicator:
    """Binary vector over nodes marking sensor placements or attacks."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("indicator entries must be 0 or 1")

    @classmethod
    def from_support(cls, n: int, support) -> "Indicator":
        bits = [0] * n
        for i in support:
            if not 0 <= i < n:
                raise ValueError(f"support index {i} out of range")
            bits[i] = 1
        return cls(tuple(bits))

    @classmethod
    def zeros(cls, n: int) -> "Indicator":
        return cls((0,) * n)

    @classmethod
    def parse(cls, text: str) -> "Indicator":
        """Parse '0101' or '0,1,0,1' into an indicator."""
        text = text.strip()
        parts = text.split(",") if "," in text else list(text)
        try:
            return cls(tuple(int(p) for p in parts))
        except ValueError as exc:
            raise ValueError(f"cannot parse indicator from {text!r}") from exc

    def __len__(self) -> int:
        return len(self.bits)

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def count(self) -> int:
        return sum(self.bits)

    def is_empty(self) -> bool:
        return self.count() == 0

    def cost(self, weights) -> int:
        return int(sum(w for w, b in zip(weights, self.bits) if b))

    def minus(self, other: "Indicator") -> "Indicator":
        """Bits of self with other's support removed."""
        return Indicator(tuple(b & (1 - o) for b, o in zip(self.bits, other.bits)))

    def contains(self, other: "Indicator") -> bool:
        return all(o <= b for b, o in zip(self.bits, other.bits))


@dataclass(frozen=True)
class NetworkSystem:
    """Dynamics matrix, input node, input variance, and sensor noise model.

    ``sensor_noise`` is None for noiseless sensors, otherwise an n x n
    symmetric positive semi-definite covariance.
    """

    A: np.ndarray
    input_node: int
    input_variance: float = 1.0
    sensor_noise: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"dynamics matrix must be square, got shape {A.shape}")
        object.__setattr__(self, "A", A)
        A.setflags(write=False)
        if not 0 <= self.input_node < A.shape[0]:
            raise ValueError(f"input node {self.input_node} out of range")
        if not self.input_variance >= 0:
            raise ValueError("input variance must be nonnegative")
        if self.sensor_noise is not None:
            V = np.asarray(self.sensor_noise, dtype=float)
            if V.shape != A.shape:
                raise ValueError("sensor noise covariance must be n x n")
            if not np.allclose(V, V.T, atol=1e-10):
                raise ValueError("sensor noise covariance must be symmetric")
            if np.linalg.eigvalsh(V).min() < -1e-8 * max(1.0, abs(V).max()):
                raise ValueError("sensor noise covariance must be PSD")
            object.__setattr__(self, "sensor_noise", V)
            V.setflags(write=False)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def input_column(self) -> np.ndarray:
        b = np.zeros((self.n, 1))
        b[self.input_node, 0] = 1.0
        return b

    def process_covariance(self) -> np.ndarray:
        """sigma_w^2 B B^T."""
        b = self.input_column()
        return self.input_variance * (b @ b.T)

    def measurement_matrix(self, placement: Indicator) -> np.ndarray:
        """Rows of the identity selected by the placement (p x n)."""
        support = placement.support()
        return np.eye(self.n)[list(support), :]

    def noise_block(self, placement: Indicator) -> np.ndarray:
        """Sensor noise covariance restricted to the placed sensors (p x p)."""
        support = list(placement.support())
        if self.sensor_noise is None:
            return np.zeros((len(support), len(support)))
        return self.sensor_noise[np.ix_(support, support)]

    def has_sensor_noise(self) -> bool:
        return self.sensor_noise is not None and abs(self.sensor_noise).max() > 0


@dataclass(frozen=True)
class CovariancePair:
    """Steady-state a priori / a posteriori covariances, possibly infinite.

    The infinite state (undetectable pair with unstable dynamics) is carried
    as None matrices with inf traces, keeping min/max comparisons total.
    """

    priori: np.ndarray | None
    posteriori: np.ndarray | None
    trace_priori: float
    trace_posteriori: float

    @classmethod
    def infinite(cls) -> "CovariancePair":
        return cls(None, None, math.inf, math.inf)

    @classmethod
    def from_matrices(cls, priori, posteriori) -> "CovariancePair":
        priori = np.asarray(priori, dtype=float)
        posteriori = np.asarray(posteriori, dtype=float)
        return cls(priori, posteriori, float(np.trace(priori)), float(np.trace(posteriori)))

    @property
    def is_infinite(self) -> bool:
        return self.priori is None


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2.0


def check_detectable(A, placement: Indicator, rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """PBH test: rank([A - lambda I; C(mu)]) = n for every |lambda| >= 1."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    C = np.eye(n)[list(placement.support()), :]
    for lam in np.linalg.eigvals(A):
        if abs(lam) < 1.0 - STABILITY_MARGIN:
            continue
        M = np.vstack([A - lam * np.eye(n), C.astype(complex)])
        if _numeric_rank(M, rank_tol) < n:
            return False
    return True


def check_stabilizable(
    A, input_node: int, input_variance: float, rank_tol: float = DEFAULT_RANK_TOL
) -> bool:
    """PBH test for (A, B sigma_w): rank([A - lambda I, B sigma_w]) = n for |lambda| >= 1.

    With sigma_w = 0 the input column vanishes and the test reduces to
    Schur stability of A.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    b = np.zeros((n, 1), dtype=complex)
    b[input_node, 0] = math.sqrt(input_variance)
    for lam in np.linalg.eigvals(A):
        if abs(lam) < 1.0 - STABILITY_MARGIN:
            continue
        M = np.hstack([A - lam * np.eye(n), b])
        if _numeric_rank(M, rank_tol) < n:
            return False
    return True


def _numeric_rank(M: np.ndarray, rank_tol: float) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def dare_solve(
    sys: NetworkSystem,
    placement: Indicator,
    conv_tol: float = DEFAULT_CONV_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    svd_tol: float = DEFAULT_SVD_TOL,
) -> CovariancePair:
    """Steady-state covariances by fixed-point iteration of the Riccati map.

    Starts from sigma_w^2 B B^T and iterates until the max-abs elementwise
    change drops below conv_tol (relative to the iterate's own magnitude once
    entries exceed 1). The innovation covariance is inverted via Cholesky
    when positive definite and via pseudo-inverse otherwise (the zero-noise
    case is always singular before the sum reaches a sensor).

    Returns the infinite pair when no sensor is placed and A is unstable, or
    when the placed pair is undetectable and A is unstable. Raises
    DivergenceError if the iteration does not settle within max_iter.
    """
    if conv_tol <= 0:
        raise ValueError("conv_tol must be positive")
    if len(placement) != sys.n:
        raise ValueError("placement length must match system dimension")
    A = sys.A
    W = sys.process_covariance()

    if placement.is_empty():
        if not is_stable(A):
            return CovariancePair.infinite()
        # Pure prediction: Lyapunov iteration, posteriori equals priori.
        sigma = _iterate(lambda S: _symmetrize(A @ S @ A.T + W), W, conv_tol, max_iter)
        return CovariancePair.from_matrices(sigma, sigma)

    if not is_stable(A) and not check_detectable(A, placement):
        return CovariancePair.infinite()

    C = sys.measurement_matrix(placement)
    V = sys.noise_block(placement)
    # With a PD sensor-noise block the innovation stays PD and Cholesky is
    # safe; otherwise (zero noise) it is singular until the impulse response
    # reaches a sensor, so go through the pseudo-inverse.
    if V.size and np.linalg.eigvalsh(V).min() > 0:
        solve = _cholesky_solve
    else:
        solve = lambda S, rhs: pseudo_inverse(S, svd_tol) @ rhs  # noqa: E731

    def riccati(S: np.ndarray) -> np.ndarray:
        gain = solve(C @ S @ C.T + V, C @ S @ A.T)
        return _symmetrize(A @ S @ A.T + W - (A @ S @ C.T) @ gain)

    sigma = _iterate(riccati, W, conv_tol, max_iter)
    post = sigma - (sigma @ C.T) @ solve(C @ sigma @ C.T + V, C @ sigma)
    return CovariancePair.from_matrices(sigma, _symmetrize(post))


def _iterate(step, start: np.ndarray, conv_tol: float, max_iter: int) -> np.ndarray:
    # Tolerance is scaled by the iterate's magnitude (floored at 1): fixed
    # points with entries around 1e5 sit where double rounding alone moves
    # entries by more than an absolute 1e-10 per step, so a purely absolute
    # test would spin forever on a converged answer.
    current = start
    for k in range(max_iter):
        nxt = step(current)
        scale = max(1.0, float(np.abs(nxt).max()))
        if np.abs(nxt - current).max() < conv_tol * scale:
            return nxt
        current = nxt
    raise DivergenceError(
        f"covariance iteration did not converge in {max_iter} iterations",
        last_iterate=current,
        iterations=max_iter,
    )


def _cholesky_solve(S: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(S)
    return np.linalg.solve(L.T, np.linalg.solve(L, rhs))


def closed_form_covariance(
    sys: NetworkSystem, placement: Indicator, dmap: DistanceMap
) -> CovariancePair:
    """Truncated-sum covariances valid under zero sensor noise.

    zeta is the minimum distance from the input node to a placed sensor; the
    a priori covariance is sigma_w^2 * sum_{m=0}^{zeta} A^m B B^T (A^T)^m and
    the a posteriori covariance stops at zeta - 1 (zero matrix when a sensor
    sits on the input node).
    """
    if sys.has_sensor_noise():
        raise ValueError("closed form requires zero sensor noise")
    if placement.is_empty():
        raise ValueError("closed form requires at least one placed sensor")
    dists = [dmap.dist[j] for j in placement.support()]
    finite = [d for d in dists if d is not None]
    if not finite:
        raise ValueError("all placed sensors are unreachable from the input node")
    zeta = min(finite)
    return truncated_sum_pair(sys, zeta)


def truncated_sum_pair(sys: NetworkSystem, zeta: int) -> CovariancePair:
    """Covariance pair for a given zeta from the truncated impulse sum."""
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    A = sys.A
    n = sys.n
    b = sys.input_column()
    term = sys.input_variance * (b @ b.T)
    total = np.zeros((n, n))
    posteriori = np.zeros((n, n))
    for m in range(zeta + 1):
        total = total + term
        if m == zeta - 1:
            posteriori = total.copy()
        term = A @ term @ A.T
    return CovariancePair.from_matrices(total, posteriori)

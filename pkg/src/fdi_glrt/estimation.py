"""State estimators for the linear model ``x = H theta + w``.

An observation block ``X`` is an M x N array whose row ``i`` holds the N
sequential readings of meter ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .arnoise import ArNoiseModel, block_stats
from .grid import RankDeficientError

GAUSSIAN_SINGLE = "gaussian-single"
GAUSSIAN_SEQUENTIAL = "gaussian-sequential"
AR_MLE = "ar-mle"


@dataclass(frozen=True)
class StateEstimate:
    theta_hat: np.ndarray
    method: str


def _H(mm) -> np.ndarray:
    return np.asarray(getattr(mm, "H", mm), dtype=float)


def solve_normal(H: np.ndarray, weights: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(H^T diag(weights) H) theta = rhs`` by Cholesky."""
    N = (H * weights[:, None]).T @ H
    try:
        cf = cho_factor(N)
    except np.linalg.LinAlgError:
        raise RankDeficientError("normal matrix is singular (rank-deficient H)") from None
    d = np.abs(np.diag(cf[0]))
    if d.min() <= 1e-8 * d.max():
        raise RankDeficientError("normal matrix is singular (rank-deficient H)")
    return cho_solve(cf, rhs)


def _variances(sigma, M: int) -> np.ndarray:
    s = np.broadcast_to(np.asarray(sigma, dtype=float), (M,))
    if np.any(s <= 0):
        raise ValueError("meter variances must be positive")
    return s


def wls_estimate(mm, sigma, x) -> StateEstimate:
    """Weighted least squares, ``(H^T S^-1 H)^-1 H^T S^-1 x`` with
    ``S = diag(sigma)`` (``sigma`` holds variances)."""
    H = _H(mm)
    x = np.asarray(x, dtype=float)
    if x.shape != (H.shape[0],):
        raise ValueError(f"x must have length {H.shape[0]}, got shape {x.shape}")
    w = 1.0 / _variances(sigma, H.shape[0])
    return StateEstimate(solve_normal(H, w, H.T @ (w * x)), GAUSSIAN_SINGLE)


def wls_estimate_sequential(mm, sigma, X) -> StateEstimate:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be an M x N block")
    est = wls_estimate(mm, sigma, X.mean(axis=1))
    return StateEstimate(est.theta_hat, GAUSSIAN_SEQUENTIAL)


def innovation_variances(models: Sequence[ArNoiseModel]) -> np.ndarray:
    return np.array([m.sigma2 for m in models])


def ar_mle_estimate(mm, models: Sequence[ArNoiseModel], X) -> StateEstimate:
    """Maximum likelihood state under per-meter AR noise.

    With ``a_i = 1^T T_i^T T_i 1`` and ``z_i = 1^T T_i^T (T_i x_i + c_i)``
    the estimate is ``(H^T A H)^-1 H^T z`` where ``A = diag(a_i / s_i)``
    and ``z = [z_i / s_i]``.
    """
    H = _H(mm)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != H.shape[0]:
        raise ValueError(f"X must be {H.shape[0]} x N, got shape {X.shape}")
    a, z = block_stats(models, X)
    s2 = innovation_variances(models)
    theta = solve_normal(H, a / s2, H.T @ (z / s2))
    return StateEstimate(theta, AR_MLE)

"""GLRT detectors for false data injection.

All statistics are quadratic forms in a residual projector and are
evaluated through the orthonormal complement ``B`` of the (whitened)
Jacobian: ``x^T P x = |B^T x|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arnoise import ArNoiseModel, build_whitening
from .estimation import innovation_variances
from .grid import MeasurementMatrix

WHITE = "white"
GAUSSIAN = "gaussian"
GAUSSIAN_SEQUENTIAL = "gaussian-sequential"
AR = "ar"


@dataclass(frozen=True)
class DetectionStatistic:
    value: float
    detector: str
    dof: int


@dataclass(frozen=True)
class NuisanceEstimates:
    theta_1_hat: np.ndarray
    theta_b_hat: np.ndarray


def _as_matrix(mm) -> MeasurementMatrix:
    return mm if isinstance(mm, MeasurementMatrix) else MeasurementMatrix.from_H(mm)


def _white(mm: MeasurementMatrix, x: np.ndarray) -> tuple[float, NuisanceEstimates]:
    theta_b = mm.B.T @ x
    theta_1 = mm.pinv @ x
    return float(theta_b @ theta_b), NuisanceEstimates(theta_1, theta_b)


def glrt_white(mm, x) -> tuple[DetectionStatistic, NuisanceEstimates]:
    """``T(x) = x^T (I - H (H^T H)^-1 H^T) x`` for unit white noise."""
    mm = _as_matrix(mm)
    x = np.asarray(x, dtype=float)
    if x.shape != (mm.M,):
        raise ValueError(f"x must have length {mm.M}, got shape {x.shape}")
    value, nuis = _white(mm, x)
    return DetectionStatistic(value, WHITE, mm.dof), nuis


class GaussianDetector:
    """Pre-whitened GLRT for independent Gaussian meter noise with
    variances ``sigma``. The whitened Jacobian is factored once."""

    def __init__(self, mm, sigma):
        self.mm = _as_matrix(mm)
        s = np.broadcast_to(np.asarray(sigma, dtype=float), (self.mm.M,))
        if np.any(s <= 0):
            raise ValueError("meter variances must be positive")
        self.scale = 1.0 / np.sqrt(s)
        if np.all(s == s[0]):
            # scaling H by a constant leaves its column space alone
            self.whitened = self.mm
        else:
            self.whitened = MeasurementMatrix.from_H(self.scale[:, None] * self.mm.H)

    def statistic(self, x, detector: str = GAUSSIAN) -> DetectionStatistic:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.mm.M,):
            raise ValueError(f"x must have length {self.mm.M}, got shape {x.shape}")
        value, _ = _white(self.whitened, self.scale * x)
        return DetectionStatistic(value, detector, self.mm.dof)

    def sequential(self, X) -> DetectionStatistic:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be an M x N block")
        return self.statistic(X.mean(axis=1), GAUSSIAN_SEQUENTIAL)


def glrt_gaussian(mm, sigma, x) -> DetectionStatistic:
    """``x^T (I - S^-1 H (H^T S^-1 H)^-1 H^T) S^-1 x`` with ``S = diag(sigma)``."""
    return GaussianDetector(mm, sigma).statistic(x)


def glrt_gaussian_sequential(mm, sigma, X) -> DetectionStatistic:
    """Gaussian GLRT evaluated at the row means of the block ``X``."""
    return GaussianDetector(mm, sigma).sequential(X)


class ArDetector:
    """GLRT under per-meter AR noise for blocks of ``n`` samples.

    Meter ``i`` is scaled by ``m_i = sqrt(a_i) / sigma_i``; the statistic is
    ``(1/n) z'^T (I - H' (H'^T H')^-1 H'^T) z'`` with ``H' = diag(m) H`` and
    ``z'_i = 1^T T_i^T (T_i y_i + c_i) / a_i``, ``y_i = m_i x_i``.
    """

    def __init__(self, mm, models: Sequence[ArNoiseModel], n: int):
        self.mm = _as_matrix(mm)
        if len(models) != self.mm.M:
            raise ValueError(f"need {self.mm.M} noise models, got {len(models)}")
        self.models = tuple(models)
        self.n = n
        self._ops: dict[ArNoiseModel, tuple] = {}
        rows: dict[ArNoiseModel, list[int]] = {}
        for i, m in enumerate(self.models):
            rows.setdefault(m, []).append(i)
        self.a = np.empty(self.mm.M)
        for m, idx in rows.items():
            op = build_whitening(m, n)
            self._ops[m] = (op, np.array(idx))
            self.a[idx] = op.a
        self.scale = np.sqrt(self.a / innovation_variances(self.models))
        if np.all(self.scale == self.scale[0]):
            self.whitened = self.mm
        else:
            self.whitened = MeasurementMatrix.from_H(self.scale[:, None] * self.mm.H)

    def whitened_means(self, X) -> np.ndarray:
        """The vector ``z'``."""
        X = np.asarray(X, dtype=float)
        if X.shape != (self.mm.M, self.n):
            raise ValueError(f"X must be {self.mm.M} x {self.n}, got shape {X.shape}")
        Y = self.scale[:, None] * X
        z = np.empty(self.mm.M)
        for op, idx in self._ops.values():
            z[idx] = op.apply(Y[idx]) @ op.t_ones
        return z / self.a

    def __call__(self, X) -> tuple[DetectionStatistic, NuisanceEstimates]:
        value, nuis = _white(self.whitened, self.whitened_means(X))
        return DetectionStatistic(value / self.n, AR, self.mm.dof), nuis


def glrt_ar(mm, models: Sequence[ArNoiseModel], X) -> tuple[DetectionStatistic, NuisanceEstimates]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be an M x N block")
    return ArDetector(mm, models, X.shape[1])(X)


def decide(stat, tau: float) -> bool:
    """Decide H1 iff the statistic strictly exceeds ``tau``."""
    if not np.isfinite(tau):
        raise ValueError("threshold must be finite")
    value = stat.value if isinstance(stat, DetectionStatistic) else float(stat)
    return value > tau


def threshold_for_pfa(null_scores, pfa: float) -> float:
    """Smallest null score with at most a ``pfa`` fraction of scores strictly above it."""
    s = np.sort(np.asarray(null_scores, dtype=float).ravel())
    if s.size < 100:
        raise ValueError(f"need at least 100 null scores, got {s.size}")
    if not 0 < pfa < 1:
        raise ValueError(f"pfa must lie in (0, 1), got {pfa}")
    above = s.size - np.searchsorted(s, s, side="right")
    ok = above <= pfa * s.size
    return float(s[np.argmax(ok)])

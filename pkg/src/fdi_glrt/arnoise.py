"""Autoregressive meter noise: simulation, whitening and Yule-Walker fitting.

Each meter's noise follows

    w[n] = sum_j alpha[j] * w[n-j] + v[n],    v[n] ~ N(0, sigma2)

and is whitened by the banded lower-triangular operator ``T`` (unit
diagonal, ``-alpha[j]`` on the j-th subdiagonal) plus an offset ``c`` that
carries the pre-sample history, so that ``T w + c = v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_toeplitz
from scipy.signal import lfilter, lfiltic


@dataclass(frozen=True)
class ArNoiseModel:
    """AR(p) noise of one meter.

    ``initial_conditions[k]`` is ``w[-(k+1)]``; the default is all zeros.
    """

    coeffs: tuple[float, ...] = ()
    sigma2: float = 1.0
    initial_conditions: tuple[float, ...] | None = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(np.asarray(self.coeffs, dtype=float)))
        object.__setattr__(self, "coeffs", coeffs)
        init = self.initial_conditions
        init = (0.0,) * len(coeffs) if init is None else tuple(float(v) for v in init)
        object.__setattr__(self, "initial_conditions", init)
        if not self.sigma2 > 0:
            raise ValueError(f"innovation variance must be positive, got {self.sigma2}")
        if len(init) != len(coeffs):
            raise ValueError(
                f"need {len(coeffs)} initial conditions for AR({len(coeffs)}), got {len(init)}")

    @classmethod
    def white(cls, sigma2: float) -> "ArNoiseModel":
        return cls((), sigma2)

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def is_stationary(self) -> bool:
        """All roots of ``1 - sum_j alpha_j z^j`` lie outside the unit circle."""
        if self.order == 0:
            return True
        # reversed polynomial: roots of z^p - a1 z^(p-1) - ... - ap inside unit circle
        roots = np.roots(np.r_[1.0, -np.asarray(self.coeffs)])
        return bool(np.all(np.abs(roots) < 1.0))

    def stationary_variance(self) -> float:
        """Variance of the stationary process (AR(0) and AR(1) closed form)."""
        if self.order == 0:
            return self.sigma2
        if self.order == 1:
            return self.sigma2 / (1.0 - self.coeffs[0] ** 2)
        raise NotImplementedError("closed form only for p <= 1")


def _denominator(model: ArNoiseModel) -> np.ndarray:
    return np.r_[1.0, -np.asarray(model.coeffs)]


def ar_filter(model: ArNoiseModel, innovations) -> np.ndarray:
    """Run the AR recursion on given innovations, starting from the model's
    initial conditions. Works along the last axis."""
    v = np.asarray(innovations, dtype=float)
    if model.order == 0:
        return v.copy()
    a = _denominator(model)
    zi = lfiltic([1.0], a, y=list(model.initial_conditions))
    zi = np.broadcast_to(zi, v.shape[:-1] + zi.shape).copy()
    out, _ = lfilter([1.0], a, v, axis=-1, zi=zi)
    return out


def simulate_ar(model: ArNoiseModel, n: int, rng: np.random.Generator,
                burn_in: int = 0, size: tuple[int, ...] = ()) -> np.ndarray:
    """Draw ``n`` samples of AR noise (shape ``size + (n,)``).

    ``burn_in`` extra samples are generated first and discarded.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be >= 0, got {burn_in}")
    v = rng.standard_normal(tuple(size) + (n + burn_in,)) * np.sqrt(model.sigma2)
    return ar_filter(model, v)[..., burn_in:]


@dataclass(frozen=True)
class WhiteningOperator:
    """Banded whitening operator for ``n`` samples of one AR model.

    Only the AR coefficients are stored; :meth:`dense` materializes ``T``.
    """

    coeffs: tuple[float, ...]
    n: int
    c: np.ndarray
    t_ones: np.ndarray  # T @ 1
    a: float            # 1^T T^T T 1

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def apply(self, x) -> np.ndarray:
        """``T x + c`` along the last axis."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} samples, got {x.shape[-1]}")
        y = x + self.c
        for j, alpha in enumerate(self.coeffs, start=1):
            y[..., j:] -= alpha * x[..., :-j]
        return y

    def dense(self) -> np.ndarray:
        T = np.eye(self.n)
        for j, alpha in enumerate(self.coeffs, start=1):
            T -= alpha * np.eye(self.n, k=-j)
        return T


def build_whitening(model: ArNoiseModel, n: int) -> WhiteningOperator:
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    p = model.order
    alpha = np.asarray(model.coeffs)
    init = np.asarray(model.initial_conditions)
    c = np.zeros(n)
    # c[k] = -sum_{j>k} alpha_j * w[k-j], with w[-m] = init[m-1]
    for k in range(min(p, n)):
        for j in range(k + 1, p + 1):
            c[k] -= alpha[j - 1] * init[j - k - 1]
    t_ones = np.ones(n)
    for j in range(1, p + 1):
        t_ones[j:] -= alpha[j - 1]
    c.setflags(write=False)
    t_ones.setflags(write=False)
    return WhiteningOperator(tuple(model.coeffs), n, c, t_ones, float(t_ones @ t_ones))


def whitening_stats(op: WhiteningOperator, x) -> tuple[float, float]:
    """Return ``(a, z)`` with ``a = 1^T T^T T 1`` and ``z = 1^T T^T (T x + c)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (op.n,):
        raise ValueError(f"expected a vector of length {op.n}, got shape {x.shape}")
    return op.a, float(op.t_ones @ op.apply(x))


def block_stats(models: Sequence[ArNoiseModel], X) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`whitening_stats` for an M x N observation block.

    Rows sharing a model are whitened together.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(models):
        raise ValueError(f"need one model per row: {len(models)} models, X shape {X.shape}")
    n = X.shape[1]
    a = np.empty(X.shape[0])
    z = np.empty(X.shape[0])
    groups: dict[ArNoiseModel, list[int]] = {}
    for i, m in enumerate(models):
        groups.setdefault(m, []).append(i)
    for m, rows in groups.items():
        op = build_whitening(m, n)
        a[rows] = op.a
        z[rows] = op.apply(X[rows]) @ op.t_ones
    return a, z


def fit_ar_yule_walker(samples, order: int) -> ArNoiseModel:
    """Fit AR(``order``) by solving the Yule-Walker equations on the biased
    sample autocovariances of the demeaned series."""
    x = np.asarray(samples, dtype=float).ravel()
    if order < 0:
        raise ValueError("order must be >= 0")
    if x.size <= 10 * (order + 1):
        raise ValueError(f"need more than {10 * (order + 1)} samples for AR({order})")
    scale = float(np.mean(x**2))
    x = x - x.mean()
    n = x.size
    r = np.array([x[: n - k] @ x[k:] for k in range(order + 1)]) / n
    if not r[0] > 1e-14 * scale:
        raise np.linalg.LinAlgError("singular autocovariance system (constant input)")
    if order == 0:
        return ArNoiseModel((), float(r[0]))
    coeffs = solve_toeplitz(r[:-1], r[1:])
    sigma2 = float(r[0] - coeffs @ r[1:])
    return ArNoiseModel(tuple(coeffs), sigma2)


def simulate_block(models: Sequence[ArNoiseModel], n: int, rng: np.random.Generator,
                   burn_in: int = 0) -> np.ndarray:
    """M x n noise block, one AR model per row.

    Rows sharing a model are drawn together, groups in order of first
    appearance, so the result depends only on ``rng``'s state.
    """
    W = np.empty((len(models), n))
    groups: dict[ArNoiseModel, list[int]] = {}
    for i, m in enumerate(models):
        groups.setdefault(m, []).append(i)
    for m, rows in groups.items():
        W[rows] = simulate_ar(m, n, rng, burn_in=burn_in, size=(len(rows),))
    return W

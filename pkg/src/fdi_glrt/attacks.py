"""False data injection attacks: random sparse, column-space (unobservable)
and the ICA-based stealth attack, which infers a virtual Jacobian from
observed measurements alone."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import MeasurementMatrix

NONE = "none"
SPARSE = "sparse"
UNOBSERVABLE = "unobservable"
ICA = "ica"
KINDS = (NONE, SPARSE, UNOBSERVABLE, ICA)


@dataclass(frozen=True)
class AttackVector:
    a: np.ndarray
    kind: str
    sparsity: int
    magnitude: float

    @classmethod
    def none(cls, M: int) -> "AttackVector":
        return cls(np.zeros(M), NONE, 0, 0.0)


def sparse_attack(M: int, D: int, A: float, rng: np.random.Generator) -> AttackVector:
    """Constant value ``A`` injected into ``D`` meters drawn without replacement."""
    if not 0 <= D <= M:
        raise ValueError(f"need 0 <= D <= M, got D={D}, M={M}")
    a = np.zeros(M)
    a[rng.choice(M, size=D, replace=False)] = A
    return AttackVector(a, SPARSE, D, float(A))


def unobservable_attack(mm: MeasurementMatrix, theta_a) -> AttackVector:
    theta_a = np.asarray(theta_a, dtype=float)
    if theta_a.shape != (mm.K,):
        raise ValueError(f"theta_a must have length {mm.K}, got shape {theta_a.shape}")
    a = mm.H @ theta_a
    nnz = int(np.count_nonzero(a))
    return AttackVector(a, UNOBSERVABLE, nnz, float(np.abs(theta_a).max(initial=0.0)))


# ---------------------------------------------------------------------------
# FastICA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IcaModel:
    """Result of :func:`fastica` on a centered block ``X_c ~= G @ Y``.

    ``Y`` has unit-variance rows. ``W`` is the orthogonal unmixing matrix in
    the whitened space and ``whitening`` maps centered data into that space.
    """

    G: np.ndarray
    Y: np.ndarray
    W: np.ndarray
    whitening: np.ndarray
    mean: np.ndarray
    converged: bool
    n_iter: int

    @property
    def n_components(self) -> int:
        return self.G.shape[1]


def _sym_decorrelation(W: np.ndarray) -> np.ndarray:
    # (W W^T)^{-1/2} W
    s, u = np.linalg.eigh(W @ W.T)
    s = np.clip(s, np.finfo(float).tiny, None)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ W


def fastica(X, eig_threshold: float = 1e-6, tol: float = 1e-8, max_iter: int = 500,
            rng: np.random.Generator | None = None) -> IcaModel:
    """Symmetric FastICA with the ``tanh`` contrast.

    Rows of ``X`` are variables and columns are samples. Principal
    directions whose covariance eigenvalue falls below
    ``eig_threshold * largest`` are dropped before the fixed-point iteration,
    so at most ``min(M, N)`` components are returned.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (variables x samples)")
    M, N = X.shape
    if N < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng() if rng is None else rng
    mean = X.mean(axis=1)
    Xc = X - mean[:, None]

    # eigen-decomposition of the sample covariance Xc Xc^T / N via the SVD of Xc
    U, s, _ = np.linalg.svd(Xc, full_matrices=False)
    eig = s**2 / N
    if eig.size == 0 or eig[0] == 0:
        raise ValueError("input has zero variance")
    keep = eig >= eig_threshold * eig[0]
    r = int(keep.sum())
    if r == 0:
        raise ValueError("no component survives eigenvalue pruning")
    U, d = U[:, :r], np.sqrt(eig[:r])
    whitening = U.T / d[:, None]         # r x M
    Z = whitening @ Xc                   # unit covariance rows

    W = _sym_decorrelation(rng.standard_normal((r, r)))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        G = np.tanh(W @ Z)
        W_new = (G @ Z.T) / N - np.mean(1.0 - G**2, axis=1)[:, None] * W
        W_new = _sym_decorrelation(W_new)
        lim = np.max(np.abs(np.abs(np.einsum("ij,ij->i", W_new, W)) - 1.0))
        W = W_new
        if lim < tol:
            converged = True
            break

    Y = W @ Z
    mixing = (U * d) @ W.T               # Xc ~= mixing @ Y, W orthogonal
    return IcaModel(mixing, Y, W, whitening, mean, converged, it)


def ica_attack(obs_clean_window, sigma_y2: float, A: float, rng: np.random.Generator,
               **ica_kwargs) -> AttackVector:
    """Stealth attack ``a = A * G dy`` built from an attacker-observed window.

    ``G`` is the inferred virtual Jacobian with columns scaled to unit norm
    (the scale ICA leaves undetermined is put into the quasi-states), and
    ``dy ~ N(0, sigma_y2 I)``.
    """
    if sigma_y2 < 0:
        raise ValueError("sigma_y2 must be >= 0")
    model = fastica(obs_clean_window, rng=rng, **ica_kwargs)
    G = model.G / np.linalg.norm(model.G, axis=0)
    dy = np.sqrt(sigma_y2) * rng.standard_normal(model.n_components)
    a = A * (G @ dy)
    return AttackVector(a, ICA, int(np.count_nonzero(a)), float(A))

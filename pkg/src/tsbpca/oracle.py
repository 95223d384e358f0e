"""Brute-force batch PCA and subspace comparison metrics.

Everything here works on the uncentred second-moment matrix, the same
quantity the streaming updates estimate.
"""

from dataclasses import dataclass

import numpy as np

from ._types import Dataset, validate_dataset
from .exceptions import NotOrthonormal, NotSymmetric, ZeroData


@dataclass(frozen=True, eq=False)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def top(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, :k]


def _rows(ds):
    values = ds.values if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64)
    return values.reshape(-1, values.shape[-1])


def pooled_covariance(ds) -> np.ndarray:
    """``(1 / (B N)) sum_{b,n} x_bn x_bn^T`` over every row of the panel."""
    if isinstance(ds, Dataset):
        validate_dataset(ds)
    X = _rows(ds)
    C = X.T @ X / X.shape[0]
    return (C + C.T) / 2


def batch_pca(C, symmetry_tol=1e-10) -> EigenSolution:
    """Full symmetric eigendecomposition, eigenvalues in descending order.

    Each eigenvector is signed so that its largest-magnitude entry is
    positive.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {C.shape}")
    scale = max(1.0, float(np.abs(C).max(initial=0.0)))
    if np.abs(C - C.T).max(initial=0.0) > symmetry_tol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    w, V = np.linalg.eigh(C)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    pivot = np.abs(V).argmax(axis=0)
    signs = np.sign(V[pivot, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return EigenSolution(w, V * signs)


def _check_orthonormal(Q, tol, name):
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2:
        raise NotOrthonormal(f"{name} must be a 2-D matrix, got shape {Q.shape}")
    err = np.linalg.norm(Q.T @ Q - np.eye(Q.shape[1]))
    if err > tol:
        raise NotOrthonormal(f"{name} is not orthonormal (||Q^T Q - I||_F = {err:.2e})")
    return Q


def subspace_distance(Q1, Q2, tol=1e-6) -> float:
    """Normalised projector distance ``||Q1 Q1^T - Q2 Q2^T||_F / sqrt(2k)``.

    0 for identical spans, 1 for mutually orthogonal spans.
    """
    Q1 = _check_orthonormal(Q1, tol, "Q1")
    Q2 = _check_orthonormal(Q2, tol, "Q2")
    if Q1.shape != Q2.shape:
        raise NotOrthonormal(f"basis shapes differ: {Q1.shape} vs {Q2.shape}")
    k = Q1.shape[1]
    gap = Q1 @ Q1.T - Q2 @ Q2.T
    return float(min(1.0, np.linalg.norm(gap) / np.sqrt(2 * k)))


def reconstruction_error(ds, q, tol=1e-6) -> float:
    """Relative Frobenius error of projecting every row onto ``span(q)``."""
    q = _check_orthonormal(q, tol, "q")
    X = _rows(ds)
    total = np.linalg.norm(X)
    if total == 0:
        raise ZeroData("reconstruction error is undefined for all-zero data")
    if q.shape[1] == q.shape[0]:
        return 0.0
    resid = X - (X @ q) @ q.T
    return float(np.linalg.norm(resid) / total)


def top_eigenspace(ds, k: int) -> np.ndarray:
    return batch_pca(pooled_covariance(ds)).top(k)

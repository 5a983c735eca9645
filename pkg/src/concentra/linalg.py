"""Dense linear algebra: orthonormal bases, singular values, polar decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RankDeficient

RANK_GATE = 1e-8
ORTHO_TOL = 1e-10


def _as_matrix(M) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


@dataclass(frozen=True, eq=False)
class Subspace:
    """A k-dimensional subspace of R^n, stored as a k x n matrix with orthonormal rows."""

    basis: np.ndarray

    def __post_init__(self):
        B = _as_matrix(self.basis).copy()
        k, n = B.shape
        if k > n:
            raise DimensionMismatch(f"subspace dimension {k} exceeds ambient dimension {n}")
        dev = np.max(np.abs(B @ B.T - np.eye(k)))
        if dev > ORTHO_TOL:
            raise ValueError(f"basis rows are not orthonormal (Gram deviation {dev:.3g})")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def projection_matrix(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def embed(self, coords: np.ndarray) -> np.ndarray:
        """Map coordinates in R^k (last axis) to points of F inside R^n."""
        return np.asarray(coords, dtype=float) @ self.basis


def singular_values(M) -> np.ndarray:
    """Singular values in nonincreasing order (LAPACK bidiagonalization)."""
    A = _as_matrix(M)
    return np.linalg.svd(A, compute_uv=False)


def _rank_gate(s: np.ndarray, k: int) -> None:
    if len(s) < k or s[0] == 0.0 or s[k - 1] <= RANK_GATE * s[0]:
        raise RankDeficient(
            f"matrix is numerically rank deficient (s_min/s_max = "
            f"{(s[-1] / s[0]) if s[0] else 0.0:.3g})"
        )


def orthonormalize(M) -> Subspace:
    """Orthonormal basis of the row space of a full-row-rank k x n matrix.

    The QR factor is sign-fixed so that R has a positive diagonal; applied to a
    Gaussian matrix this yields an exactly Haar-distributed frame.
    """
    A = _as_matrix(M)
    k, n = A.shape
    if k > n:
        raise DimensionMismatch(f"cannot orthonormalize {k} rows in R^{n}")
    _rank_gate(np.linalg.svd(A, compute_uv=False), k)
    Q, R = np.linalg.qr(A.T)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Subspace(basis=(Q * signs).T)


def polar_decompose(T) -> tuple[np.ndarray, Subspace]:
    """Write T = S Q with S = (T T^*)^{1/2} and Q the orthonormal-row factor.

    Returns S and the subspace F = Im T^* whose basis is Q.
    """
    A = _as_matrix(T)
    k, n = A.shape
    if k > n:
        raise DimensionMismatch(f"polar decomposition needs k <= n, got {k} x {n}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    _rank_gate(s, k)
    S = (U * s) @ U.T
    S = 0.5 * (S + S.T)
    return S, Subspace(basis=U @ Vt)


def project(x, F: Subspace) -> np.ndarray:
    """Orthogonal projection P_F x; x may be a batch with the vector on the last axis."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != F.ambient_dim:
        raise DimensionMismatch(f"vector of length {x.shape[-1]} vs subspace of R^{F.ambient_dim}")
    return (x @ F.basis.T) @ F.basis

"""Dense real linear algebra and the subspace lattice.

Matrices are plain 2-D float ``numpy`` arrays. Subspaces carry an orthonormal
basis so that dimension comparisons are integer-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-9
SYM_TOL = 1e-10
JACOBI_TOL = 1e-14
PD_THRESHOLD = 1e-12


class ValidationError(ValueError):
    """Malformed input: wrong shapes, non-finite entries, broken invariants."""


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised by :func:`inv_sqrt_pd` when the smallest eigenvalue is too small.

    The offending eigenpair is kept so callers can turn it into a subspace
    hint (a direction along which the matrix degenerates).
    """

    def __init__(self, min_eigenvalue, eigenvector, threshold):
        self.min_eigenvalue = float(min_eigenvalue)
        self.eigenvector = np.asarray(eigenvector, dtype=float)
        self.threshold = float(threshold)
        super().__init__(
            f"matrix is not positive definite: smallest eigenvalue "
            f"{self.min_eigenvalue:.3e} <= threshold {self.threshold:.3e}"
        )


def as_matrix(M, name="matrix") -> np.ndarray:
    A = np.array(M, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    return A


def _check_symmetric(S, name="S"):
    S = as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {S.shape}")
    scale = max(np.abs(S).max(initial=0.0), 1.0)
    if np.abs(S - S.T).max(initial=0.0) > SYM_TOL * scale:
        raise ValidationError(f"{name} is not symmetric")
    return 0.5 * (S + S.T)


def sym_eig(S, tol=JACOBI_TOL, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, Q)`` with ``w`` ascending and ``S = Q diag(w) Q^T``.
    Sweeps stop once the off-diagonal Frobenius mass is below
    ``tol * ||S||_F``.
    """
    A = _check_symmetric(S).copy()
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return A[0].copy(), V
    target = tol * np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                colp, colq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp, rowq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                # the rotation zeroes (p, q) analytically; drop the rounding residue
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def _pd_eig(S, pd_threshold):
    w, Q = sym_eig(S)
    floor = (PD_THRESHOLD if pd_threshold is None else pd_threshold) * max(w[-1], 0.0)
    if w[0] <= floor or w[-1] <= 0.0:
        raise NotPositiveDefinite(w[0], Q[:, 0], floor)
    return w, Q


def inv_sqrt_pd(S, pd_threshold=None):
    """Symmetric inverse square root ``S^{-1/2}`` of a positive definite matrix.

    ``pd_threshold`` is relative to the largest eigenvalue (default 1e-12).
    """
    w, Q = _pd_eig(S, pd_threshold)
    return (Q / np.sqrt(w)) @ Q.T


def sqrt_pd(S, pd_threshold=None):
    w, Q = _pd_eig(S, pd_threshold)
    return (Q * np.sqrt(w)) @ Q.T


def slogdet(M):
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValidationError(f"determinant needs a square matrix, got {M.shape}")
    return np.linalg.slogdet(M)


def det(M) -> float:
    sign, logabs = slogdet(M)
    return float(sign * np.exp(logabs)) if sign != 0 else 0.0


def _svd_rank(M, tol):
    M = as_matrix(M)
    if M.size == 0:
        return M, np.zeros((M.shape[0], 0)), np.zeros(0), np.eye(M.shape[1]), 0
    U, s, Vt = np.linalg.svd(M)
    r = int(np.sum(s > tol * max(s[0], 1.0)))
    return M, U, s, Vt, r


def rank(M, tol=RANK_TOL) -> int:
    return _svd_rank(M, tol)[-1]


def kernel(M, tol=RANK_TOL) -> "Subspace":
    M, _, _, Vt, r = _svd_rank(M, tol)
    return Subspace(Vt[r:].T.copy(), _trusted=True) if M.size else Subspace.full(M.shape[1])


def image(M, tol=RANK_TOL) -> "Subspace":
    M, U, _, _, r = _svd_rank(M, tol)
    return Subspace(U[:, :r].copy(), _trusted=True)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of R^n stored by an orthonormal basis (columns)."""

    basis: np.ndarray
    _trusted: bool = False

    def __post_init__(self):
        B = np.array(self.basis, dtype=float)
        if B.ndim != 2:
            raise ValidationError("subspace basis must be an (n, d) array")
        if not self._trusted and B.shape[1]:
            B = image(B).basis
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @classmethod
    def span(cls, vectors, ambient_dim=None, tol=RANK_TOL):
        """Span of the given column vectors (an (n, m) array)."""
        V = np.array(vectors, dtype=float)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        if V.shape[1] == 0:
            return cls.zero(V.shape[0] if ambient_dim is None else ambient_dim)
        return image(V, tol)

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, 0)), _trusted=True)

    @classmethod
    def full(cls, n):
        return cls(np.eye(n), _trusted=True)

    @classmethod
    def coordinate(cls, n, indices):
        """Span of the standard basis vectors e_j, j in ``indices`` (0-based)."""
        return cls(np.eye(n)[:, sorted(indices)], _trusted=True)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - self.basis @ (self.basis.T @ x)) <= tol * max(np.linalg.norm(x), 1.0))

    def echelon(self, tol=RANK_TOL) -> np.ndarray:
        """Reduced row-echelon spanning rows (a canonical, sign-free description)."""
        R = self.basis.T.copy()
        lead = 0
        for r in range(R.shape[0]):
            while lead < R.shape[1]:
                piv = r + int(np.argmax(np.abs(R[r:, lead])))
                if abs(R[piv, lead]) > tol:
                    break
                lead += 1
            else:
                break
            R[[r, piv]] = R[[piv, r]]
            R[r] /= R[r, lead]
            for i in range(R.shape[0]):
                if i != r:
                    R[i] -= R[i, lead] * R[r]
            lead += 1
        R[np.abs(R) < tol] = 0.0
        return R + 0.0

    def same_as(self, other, tol=1e-9) -> bool:
        _check_ambient(self, other)
        return self.dim == other.dim and np.abs(self.projector() - other.projector()).max(initial=0.0) <= tol

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def _check_ambient(U, V):
    if U.ambient_dim != V.ambient_dim:
        raise ValidationError(f"ambient dimension mismatch: {U.ambient_dim} vs {V.ambient_dim}")


def orthocomplement(U: Subspace, tol=RANK_TOL) -> Subspace:
    if U.dim == 0:
        return Subspace.full(U.ambient_dim)
    return kernel(U.basis.T, tol)


def subspace_sum(U: Subspace, V: Subspace, tol=RANK_TOL) -> Subspace:
    _check_ambient(U, V)
    return Subspace.span(np.hstack([U.basis, V.basis]), U.ambient_dim, tol)


def intersect(U: Subspace, V: Subspace, tol=RANK_TOL) -> Subspace:
    _check_ambient(U, V)
    if U.dim == 0 or V.dim == 0:
        return Subspace.zero(U.ambient_dim)
    # x = U a = V b  <=>  [U, -V] (a, b) = 0
    K = kernel(np.hstack([U.basis, -V.basis]), tol)
    if K.dim == 0:
        return Subspace.zero(U.ambient_dim)
    return Subspace.span(U.basis @ K.basis[: U.dim], U.ambient_dim, tol)

"""Small linear-algebra helpers used throughout the package."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import IllConditionedError

# Uniform rank policy: singular values below RANK_RTOL * sigma_max count as zero.
RANK_RTOL = 1e-10


def as_complex_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return a


def herm(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """Inner product (u, v), linear in u and conjugate-linear in v."""
    return complex(np.vdot(v, u))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + herm(m))


def imag_part(m: np.ndarray) -> np.ndarray:
    """Operator imaginary part (m - m*) / 2i (a Hermitian matrix)."""
    return (m - herm(m)) / 2j


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.linalg.norm(m - herm(m)))


def min_eig_hermitian(m: np.ndarray) -> float:
    if m.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(m)).min())


def is_psd(m: np.ndarray, slack: float = 1e-10) -> bool:
    """Positive semidefinite up to -slack*(1+norm) eigenvalue slack."""
    if m.shape[0] == 0:
        return True
    h = hermitian_part(m)
    return min_eig_hermitian(h) >= -slack * (1.0 + np.linalg.norm(h))


def matrix_rank(m: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def orthonormal_kernel(m: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of ker m."""
    rows, cols = m.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=complex)
    if rows == 0:
        return np.eye(cols, dtype=complex)
    u, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return herm(vh)[:, rank:]


def orthonormal_range(m: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of ran m."""
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return np.zeros((rows, 0), dtype=complex)
    u, s, vh = np.linalg.svd(m)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return u[:, :rank]


def subspace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Gap between the column spans of a and b (0 iff equal subspaces)."""
    qa = orthonormal_range(a)
    qb = orthonormal_range(b)
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    if qa.shape[1] == 0:
        return 0.0
    pa = qa @ herm(qa)
    pb = qb @ herm(qb)
    return float(np.linalg.norm(pa - pb, 2))


def cond2(m: np.ndarray) -> float:
    if m.size == 0:
        return 1.0
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def solve_guarded(a: np.ndarray, b: np.ndarray, cond_limit: float = 1e12,
                  context: str = "linear solve") -> np.ndarray:
    """QR-based solve of a square system with a condition-number alarm."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise IllConditionedError(
            f"{context}: system is not square ({a.shape[0]}x{a.shape[1]})")
    if a.shape[0] == 0:
        return np.zeros((0,) + b.shape[1:], dtype=complex)
    kappa = cond2(a)
    if not np.isfinite(kappa) or kappa > cond_limit:
        raise IllConditionedError(
            f"{context}: condition number {kappa:.3e} exceeds {cond_limit:.1e}")
    q, r = np.linalg.qr(a)
    return scipy.linalg.solve_triangular(r, herm(q) @ b)


def principal_log_unitary(v: np.ndarray, unitary_tol: float = 1e-8) -> np.ndarray:
    """Hermitian L with v = exp(iL), eigenvalue arguments taken in (-pi, pi].

    Requires v unitary within unitary_tol.
    """
    n = v.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    defect = np.linalg.norm(herm(v) @ v - np.eye(n))
    if defect > unitary_tol:
        raise IllConditionedError(
            f"matrix fails unitarity by {defect:.3e} (limit {unitary_tol:.1e})")
    # Unitary matrices are normal: the complex Schur form is diagonal and the
    # Schur basis is orthonormal, which keeps the branch cut clean.
    t, z = scipy.linalg.schur(v, output="complex")
    args = np.angle(np.diagonal(t))
    args = np.where(np.isclose(args, -np.pi, atol=1e-14), np.pi, args)
    return z @ np.diag(args.astype(complex)) @ herm(z)


def block(rows) -> np.ndarray:
    """np.block wrapper tolerating fully empty block rows."""
    return np.block(rows)

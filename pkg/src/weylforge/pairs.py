"""Boundary parameters: Nevanlinna operator pairs and two-half-plane collections.

A single pair tau(lambda) = {(C0(lambda), C1(lambda))} acts on one space and
parametrizes boundary conditions when the two deficiency numbers agree.  When
they differ, the parameter is a collection {tau_plus, tau_minus} of pairs on a
nested space pair, one per half-plane.  Pairs are stored as constant matrices
or as callable matrix families sampled at the points of interest; holomorphy
between samples is the caller's contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterClassError, WeylforgeError
from .linalg import (cond2, herm, imag_part, matrix_rank, min_eig_hermitian,
                     orthonormal_kernel, principal_log_unitary,
                     subspace_distance)
from .reports import ValidationReport

# Eigenvalues above -PSD_SLACK*(1+norm) count as nonnegative.
PSD_SLACK = 1e-10


def _as_family(value, rows: int, cols: int):
    if callable(value):
        return value, False
    mat = np.asarray(value, dtype=complex)
    if mat.shape != (rows, cols):
        raise WeylforgeError(f"pair block has shape {mat.shape}, expected {(rows, cols)}")
    return (lambda lam, _m=mat: _m), True


class OperatorPair:
    """Kernel representation {(C0(lambda), C1(lambda)); K} of a boundary relation."""

    def __init__(self, C0, C1, dim_h0: int, dim_h1: int | None = None,
                 dim_k: int | None = None, half_plane: str = "both"):
        if half_plane not in ("upper", "lower", "both"):
            raise WeylforgeError("half_plane must be upper/lower/both")
        self.dim_h0 = int(dim_h0)
        self.dim_h1 = int(dim_h0 if dim_h1 is None else dim_h1)
        if dim_k is None:
            probe = C0 if not callable(C0) else None
            if probe is None:
                raise WeylforgeError("dim_k required for callable pair blocks")
            dim_k = np.asarray(probe).shape[0]
        self.dim_k = int(dim_k)
        self.half_plane = half_plane
        self._c0, const0 = _as_family(C0, self.dim_k, self.dim_h0)
        self._c1, const1 = _as_family(C1, self.dim_k, self.dim_h1)
        self.constant = const0 and const1

    def at(self, lam: complex):
        lam = complex(lam)
        if self.half_plane == "upper" and lam.imag <= 0:
            raise WeylforgeError("pair defined on the upper half-plane only")
        if self.half_plane == "lower" and lam.imag >= 0:
            raise WeylforgeError("pair defined on the lower half-plane only")
        return (np.asarray(self._c0(lam), dtype=complex),
                np.asarray(self._c1(lam), dtype=complex))

    def stacked(self, lam: complex) -> np.ndarray:
        c0, c1 = self.at(lam)
        return np.hstack([c0, c1])

    def relation_subspace(self, lam: complex) -> np.ndarray:
        """Orthonormal basis of the relation ker (C0 : C1) in H0 (+) H1."""
        return orthonormal_kernel(self.stacked(lam))


def dirichlet_pair(dim: int) -> OperatorPair:
    return OperatorPair(np.eye(dim), np.zeros((dim, dim)), dim)


def neumann_pair(dim: int) -> OperatorPair:
    return OperatorPair(np.zeros((dim, dim)), np.eye(dim), dim)


def selfadjoint_pair(B) -> OperatorPair:
    """Normalized pair (cos B, sin B) of a Hermitian parameter matrix."""
    b = np.asarray(B, dtype=complex)
    if b.ndim == 0:
        b = b.reshape(1, 1)
    from scipy.linalg import cosm, sinm
    return OperatorPair(cosm(b), sinm(b), b.shape[0])


@dataclass(frozen=True)
class SelfAdjointParameter:
    """Hermitian matrix B together with its derived pair (cos B, sin B)."""

    B: np.ndarray

    @property
    def pair(self) -> OperatorPair:
        return selfadjoint_pair(self.B)

    def __post_init__(self):
        defect = np.linalg.norm(self.B - herm(self.B))
        if defect > 1e-10 * (1.0 + np.linalg.norm(self.B)):
            raise ParameterClassError("parameter matrix is not Hermitian")


class BoundaryParameterCollection:
    """Two-half-plane collection {tau_plus, tau_minus} on nested spaces.

    The larger space splits as H1 (+) H2 with H1 occupying the leading
    coordinates; alpha is the signature of the collection class.
    """

    def __init__(self, alpha: int, tau_plus: OperatorPair, tau_minus: OperatorPair,
                 dim_h0: int, dim_h1: int):
        if alpha not in (-1, 1):
            raise WeylforgeError("alpha must be +1 or -1")
        if dim_h1 > dim_h0:
            raise WeylforgeError("H1 must be contained in H0")
        self.alpha = int(alpha)
        self.tau_plus = tau_plus
        self.tau_minus = tau_minus
        self.dim_h0 = int(dim_h0)
        self.dim_h1 = int(dim_h1)

    @property
    def dim_h2(self) -> int:
        return self.dim_h0 - self.dim_h1

    def at(self, lam: complex):
        lam = complex(lam)
        if lam.imag > 0:
            return self.tau_plus.at(lam)
        if lam.imag < 0:
            return self.tau_minus.at(lam)
        raise WeylforgeError("boundary parameters live off the real axis")


def reference_collection(alpha: int, dim_h0: int, dim_h1: int) -> BoundaryParameterCollection:
    """Reference parameter selecting the distinguished extension.

    alpha=+1: upper pair (I, 0) on H0, lower pair (P_H1, 0).
    alpha=-1: upper pair (P_H1, 0), lower pair (I, 0).
    """
    p_h1 = np.zeros((dim_h1, dim_h0), dtype=complex)
    p_h1[:, :dim_h1] = np.eye(dim_h1)
    eye = np.eye(dim_h0, dtype=complex)
    if alpha == +1:
        tau_plus = OperatorPair(eye, np.zeros((dim_h0, dim_h1)), dim_h0, dim_h1,
                                dim_h0, "upper")
        tau_minus = OperatorPair(p_h1, np.zeros((dim_h1, dim_h1)), dim_h0, dim_h1,
                                 dim_h1, "lower")
    else:
        tau_plus = OperatorPair(p_h1, np.zeros((dim_h1, dim_h1)), dim_h0, dim_h1,
                                dim_h1, "upper")
        tau_minus = OperatorPair(eye, np.zeros((dim_h0, dim_h1)), dim_h0, dim_h1,
                                 dim_h0, "lower")
    return BoundaryParameterCollection(alpha, tau_plus, tau_minus, dim_h0, dim_h1)


def _default_samples(half_plane: str):
    if half_plane == "upper":
        return [1j, 0.7 + 1.3j]
    if half_plane == "lower":
        return [-1j, 0.7 - 1.3j]
    return [1j, -1j, 0.7 + 1.3j, 0.7 - 1.3j]


def validate_pair(pair: OperatorPair, lambda_samples=None) -> ValidationReport:
    """Class membership of an equal-space pair: sign condition, symmetry,
    invertibility of C0 -/+ iC1, and full row rank of (C0 : C1)."""
    if pair.dim_h0 != pair.dim_h1:
        raise WeylforgeError("validate_pair expects an equal-space pair")
    n = pair.dim_h0
    samples = list(lambda_samples) if lambda_samples else _default_samples(pair.half_plane)
    report = ValidationReport()
    for lam in samples:
        lam = complex(lam)
        c0, c1 = pair.at(lam)
        sign_matrix = np.sign(lam.imag) * imag_part(c1 @ herm(c0))
        mineig = min_eig_hermitian(sign_matrix)
        slack = PSD_SLACK * (1.0 + np.linalg.norm(sign_matrix))
        report.add("sign_condition", mineig >= -slack, max(0.0, -mineig), slack,
                   detail=f"lambda={lam}")
        mixed = c0 - 1j * np.sign(lam.imag) * c1
        kappa = cond2(mixed)
        report.add("mixed_invertible", np.isfinite(kappa) and kappa < 1e12,
                   detail=f"lambda={lam}, cond={kappa:.3e}")
        rank = matrix_rank(np.hstack([c0, c1]))
        report.add("full_row_rank", rank == n, float(n - rank), 0.0,
                   detail=f"lambda={lam}")
    if pair.half_plane == "both":
        for lam in samples:
            lam = complex(lam)
            c0p, c1p = pair.at(lam)
            c0m, c1m = pair.at(np.conj(lam))
            res = float(np.linalg.norm(c1p @ herm(c0m) - c0p @ herm(c1m)))
            tol = 1e-10 * (1.0 + np.linalg.norm(c0p) * np.linalg.norm(c1p))
            report.add("cross_symmetry", res <= tol, res, tol, detail=f"lambda={lam}")
    if not report.passed:
        report.verdict = "none"
    elif pair.constant and pair.half_plane == "both":
        c0, c1 = pair.at(1j)
        selfadj = float(np.linalg.norm(imag_part(c1 @ herm(c0))))
        report.verdict = ("selfadjoint_constant"
                          if selfadj <= PSD_SLACK * (1.0 + np.linalg.norm(c0) * np.linalg.norm(c1))
                          else "nevanlinna")
    else:
        report.verdict = "nevanlinna"
    return report


def validate_collection(coll: BoundaryParameterCollection,
                        lambda_samples=None) -> ValidationReport:
    """Membership of a collection in its signed class: sign conditions on both
    half-planes, the cross-coupling identity, dimension clauses, and
    surjectivity of the stacked blocks."""
    report = ValidationReport()
    h1 = coll.dim_h1
    # Dimension clauses for the auxiliary spaces.
    if coll.alpha == +1:
        dims_ok = (coll.tau_plus.dim_k == coll.dim_h0 and
                   coll.tau_minus.dim_k == coll.dim_h1)
    else:
        dims_ok = (coll.tau_plus.dim_k == coll.dim_h1 and
                   coll.tau_minus.dim_k == coll.dim_h0)
    report.add("dimension_clause", dims_ok,
               detail=f"alpha={coll.alpha}, k+={coll.tau_plus.dim_k}, "
                      f"k-={coll.tau_minus.dim_k}")
    spaces_ok = (coll.tau_plus.dim_h0 == coll.dim_h0 and
                 coll.tau_plus.dim_h1 == coll.dim_h1 and
                 coll.tau_minus.dim_h0 == coll.dim_h0 and
                 coll.tau_minus.dim_h1 == coll.dim_h1)
    report.add("space_consistency", spaces_ok)
    if not (dims_ok and spaces_ok):
        report.verdict = "none"
        return report

    samples = list(lambda_samples) if lambda_samples else [1j, 0.7 + 1.3j]
    for lam in samples:
        lam = complex(lam)
        if lam.imag < 0:
            lam = np.conj(lam)
        c0, c1 = coll.tau_plus.at(lam)
        d0, d1 = coll.tau_minus.at(np.conj(lam))
        c01, c02 = c0[:, :h1], c0[:, h1:]
        d01, d02 = d0[:, :h1], d0[:, h1:]

        up = 2.0 * imag_part(c1 @ herm(c01)) + coll.alpha * (c02 @ herm(c02))
        mineig = min_eig_hermitian(up)
        slack = PSD_SLACK * (1.0 + np.linalg.norm(up))
        report.add("sign_condition_upper", mineig >= -slack,
                   max(0.0, -mineig), slack, detail=f"lambda={lam}")

        low = 2.0 * imag_part(d1 @ herm(d01)) + coll.alpha * (d02 @ herm(d02))
        maxeig = -min_eig_hermitian(-low)
        slack = PSD_SLACK * (1.0 + np.linalg.norm(low))
        report.add("sign_condition_lower", maxeig <= slack,
                   max(0.0, maxeig), slack, detail=f"lambda={np.conj(lam)}")

        coupling = c1 @ herm(d01) - c01 @ herm(d1) + 1j * coll.alpha * (c02 @ herm(d02))
        res = float(np.linalg.norm(coupling))
        tol = 1e-10 * (1.0 + np.linalg.norm(c0) + np.linalg.norm(d0))
        report.add("cross_coupling", res <= tol, res, tol, detail=f"lambda={lam}")

        rank_up = matrix_rank(np.hstack([c0, c1]))
        report.add("surjective_upper", rank_up == coll.tau_plus.dim_k,
                   detail=f"rank={rank_up}")
        rank_low = matrix_rank(np.hstack([d0, d1]))
        report.add("surjective_lower", rank_low == coll.tau_minus.dim_k,
                   detail=f"rank={rank_low}")

        # Informational only: the mixed-block invertibility conditions that the
        # rank criteria replace in finite dimensions.
        p1 = np.zeros((coll.dim_h0, h1), dtype=complex)
        p1[:h1, :] = np.eye(h1)
        if coll.alpha == +1:
            info_up = cond2(c0 - 1j * c1 @ herm(p1))
            info_low = cond2(d01 + 1j * d1)
        else:
            info_up = cond2(c01 - 1j * c1)
            info_low = cond2(d0 + 1j * d1 @ herm(p1))
        report.add("mixed_block_info", True,
                   detail=f"cond_up={info_up:.2e}, cond_low={info_low:.2e}")
    report.verdict = "member" if report.passed else "none"
    return report


def normalize_selfadjoint(pair: OperatorPair) -> SelfAdjointParameter:
    """Normalized representation (cos B, sin B) of a constant self-adjoint pair.

    B is recovered from the unitary V = (C0 - iC1)^{-1}(C0 + iC1) through the
    principal matrix logarithm; eigenvalues of V at -1 map to B-eigenvalue pi/2.
    """
    if not pair.constant or pair.dim_h0 != pair.dim_h1:
        raise ParameterClassError("normalization needs a constant equal-space pair")
    report = validate_pair(pair)
    if report.verdict != "selfadjoint_constant":
        raise ParameterClassError(
            f"pair is not a constant self-adjoint parameter (verdict {report.verdict!r})")
    c0, c1 = pair.at(1j)
    n = pair.dim_h0
    minus = c0 - 1j * c1
    v = np.linalg.solve(minus, c0 + 1j * c1)
    log = principal_log_unitary(v)          # v = exp(2iB)
    b = 0.5 * log
    param = SelfAdjointParameter(0.5 * (b + herm(b)))
    norm_pair = param.pair
    dist = subspace_distance(
        herm(pair.stacked(1j)), herm(norm_pair.stacked(1j)))
    if dist > 1e-10:
        raise ParameterClassError(
            f"normalized pair is not equivalent to the input (gap {dist:.2e})")
    return param


def adjoint_counterpart(tau: OperatorPair, alpha: int, dim_h1: int,
                        lam: complex, rank_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Pair (K0, K1) representing the opposite-half-plane counterpart at lam.

    The input relation is realized at the conjugate point, its relation-adjoint
    is taken, and the signed half-plane twist is applied; the result is
    returned in kernel representation.
    """
    if alpha not in (-1, 1):
        raise WeylforgeError("alpha must be +1 or -1")
    h0, h1 = tau.dim_h0, tau.dim_h1
    if dim_h1 != h1:
        raise WeylforgeError("dim_h1 inconsistent with the pair")
    c0, c1 = tau.at(np.conj(complex(lam)))
    # Elements of the adjoint relation, parametrized by w: h1 = -C1* w, h0 = C0* w.
    h0_part = herm(c0)
    p2 = np.zeros((h0, h0), dtype=complex)
    if h0 > h1:
        p2[h1:, h1:] = np.eye(h0 - h1)
    first = np.zeros((h0, tau.dim_k), dtype=complex)
    first[:h1, :] = herm(c1)                      # -h1, embedded into H0
    first = first - 1j * alpha * (p2 @ h0_part)   # -h1 - i*alpha*P2 h0
    second = -h0_part[:h1, :]                     # -P1 h0
    span = np.vstack([first, second])
    expected = tau.dim_k
    rank = matrix_rank(span, rank_tol)
    if rank != expected:
        raise ParameterClassError(
            f"degenerate kernel extraction: rank {rank}, expected {expected}")
    kernel_rows = herm(orthonormal_kernel(herm(span), rank_tol))
    return kernel_rows[:, :h0], kernel_rows[:, h0:]


def counterpart_pair(tau: OperatorPair, alpha: int, dim_h1: int,
                     target_half: str) -> OperatorPair:
    """Lazy OperatorPair wrapping adjoint_counterpart per sample point."""
    dim_k = tau.dim_h0 + dim_h1 - tau.dim_k

    def c0(lam):
        return adjoint_counterpart(tau, alpha, dim_h1, lam)[0]

    def c1(lam):
        return adjoint_counterpart(tau, alpha, dim_h1, lam)[1]

    return OperatorPair(c0, c1, tau.dim_h0, dim_h1, dim_k, target_half)

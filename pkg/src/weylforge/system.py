"""Symmetric first-order systems J y' - B(t) y = lambda*Delta(t) y.

The model fixes the canonical space decomposition with two parameters: the
dimension of the outer space H and the dimension of the middle space H-hat.
The full coordinate space splits as H (+) H-hat (+) H and carries the
canonical signature operator.  Systems whose signature operator is not in
canonical form must be pre-transformed by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, WeylforgeError
from .fields import MatrixField
from .linalg import herm, hermiticity_defect, inner, min_eig_hermitian
from .reports import ValidationReport

STRUCTURE_TOL = 1e-12
# A solution combination counts as Delta-annihilated when the smallest singular
# value of the stacked Delta(t_k) Y(t_k) block falls below this times the largest.
DEFINITENESS_RTOL = 1e-8


@dataclass(frozen=True)
class SpaceLayout:
    """Dimensions of the component spaces."""

    nu_plus: int
    nu_hat: int

    def __post_init__(self):
        if self.nu_plus < 0 or self.nu_hat < 0:
            raise WeylforgeError("space dimensions must be nonnegative")

    @property
    def nu_minus(self) -> int:
        return self.nu_plus + self.nu_hat

    @property
    def dim_h0(self) -> int:
        return self.nu_plus + self.nu_hat

    @property
    def dim_total(self) -> int:
        return 2 * self.nu_plus + self.nu_hat

    def project_h(self) -> np.ndarray:
        """[H0 -> H] coordinate projection."""
        p = np.zeros((self.nu_plus, self.dim_h0), dtype=complex)
        p[:, : self.nu_plus] = np.eye(self.nu_plus)
        return p

    def project_hhat(self) -> np.ndarray:
        """[H0 -> H-hat] coordinate projection."""
        p = np.zeros((self.nu_hat, self.dim_h0), dtype=complex)
        p[:, self.nu_plus:] = np.eye(self.nu_hat)
        return p

    def orthoprojector_hhat(self) -> np.ndarray:
        """Orthoprojector in H0 onto H-hat."""
        d = np.zeros(self.dim_h0, dtype=complex)
        d[self.nu_plus:] = 1.0
        return np.diag(d)


def build_signature(layout: SpaceLayout) -> np.ndarray:
    """Canonical signature operator for the layout; degenerate blocks omitted.

    Block form (0, 0, -I; 0, iI, 0; I, 0, 0) on H (+) H-hat (+) H.
    """
    p, h = layout.nu_plus, layout.nu_hat
    n = layout.dim_total
    j = np.zeros((n, n), dtype=complex)
    j[:p, p + h:] = -np.eye(p)
    j[p:p + h, p:p + h] = 1j * np.eye(h)
    j[p + h:, :p] = np.eye(p)
    return j


@dataclass(frozen=True)
class CoefficientField:
    """Coefficient pair of the system: Hermitian B(t) and PSD Delta(t)."""

    B: MatrixField
    Delta: MatrixField

    @property
    def representation(self) -> str:
        if self.B.kind == self.Delta.kind:
            return self.B.kind
        return f"{self.B.kind}/{self.Delta.kind}"

    @property
    def is_constant(self) -> bool:
        return self.B.is_constant and self.Delta.is_constant


@dataclass(frozen=True, eq=False)
class SymmetricSystem:
    """Definite symmetric system on [a, b) with regular endpoint a."""

    layout: SpaceLayout
    coeffs: CoefficientField
    a: float
    b: float
    b_regular: bool
    X_a: np.ndarray = None
    X_b: np.ndarray = None
    J: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.layout.dim_total
        if self.J is None:
            object.__setattr__(self, "J", build_signature(self.layout))
        if self.X_a is None:
            object.__setattr__(self, "X_a", np.eye(n, dtype=complex))
        else:
            object.__setattr__(self, "X_a", np.asarray(self.X_a, dtype=complex))
        if self.X_b is not None:
            object.__setattr__(self, "X_b", np.asarray(self.X_b, dtype=complex))
        if self.coeffs.B.dim != n or self.coeffs.Delta.dim != n:
            raise DimensionMismatchError(
                f"coefficients are {self.coeffs.B.dim}-dim, layout needs {n}")
        if self.b_regular:
            if not math.isfinite(self.b):
                raise WeylforgeError("a regular endpoint b must be finite")
            if self.X_b is None:
                raise WeylforgeError("a regular system needs X_b")
        if self.b <= self.a:
            raise WeylforgeError("empty interval")

    @property
    def dim(self) -> int:
        return self.layout.dim_total

    def B_at(self, t: float) -> np.ndarray:
        return self.coeffs.B(t)

    def Delta_at(self, t: float) -> np.ndarray:
        return self.coeffs.Delta(t)

    def rhs_matrix(self, lam: complex, t: float) -> np.ndarray:
        """Coefficient of the explicit form y' = -J (B + lambda*Delta) y."""
        return -self.J @ (self.B_at(t) + lam * self.Delta_at(t))


@dataclass(frozen=True)
class TraceA:
    """Blocks of the regular-endpoint trace X_a y(a) in H (+) H-hat (+) H order."""

    gamma_0a: np.ndarray
    gamma_hat_a: np.ndarray
    gamma_1a: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.vstack([self.gamma_0a, self.gamma_hat_a, self.gamma_1a])


def trace_a(system: SymmetricSystem, y_at_a) -> TraceA:
    """Split X_a y(a) into its three component blocks."""
    y = np.asarray(y_at_a, dtype=complex)
    if y.ndim == 1:
        y = y.reshape(-1, 1)
    if y.shape[0] != system.dim:
        raise DimensionMismatchError(
            f"trace input has {y.shape[0]} rows, system dimension is {system.dim}")
    v = system.X_a @ y
    p, h = system.layout.nu_plus, system.layout.nu_hat
    return TraceA(v[:p], v[p:p + h], v[p + h:])


def validate_system(system: SymmetricSystem, t_samples) -> ValidationReport:
    """Check Hermiticity of B, positivity of Delta, and the X_a/X_b relations."""
    samples = list(t_samples)
    if not samples:
        raise WeylforgeError("no samples")
    report = ValidationReport()
    j = system.J
    res = float(np.linalg.norm(herm(system.X_a) @ j @ system.X_a - j))
    report.add("X_a*JX_a=J", res <= STRUCTURE_TOL, res, STRUCTURE_TOL)
    if system.X_b is not None:
        res = float(np.linalg.norm(herm(system.X_b) @ j @ system.X_b - j))
        report.add("X_b*JX_b=J", res <= STRUCTURE_TOL, res, STRUCTURE_TOL)
    for t in samples:
        bmat = system.B_at(t)
        res = hermiticity_defect(bmat)
        tol = STRUCTURE_TOL * (1.0 + np.linalg.norm(bmat))
        report.add("B_hermitian", res <= tol, res, tol, detail=f"t={t}")
        dmat = system.Delta_at(t)
        mineig = min_eig_hermitian(dmat)
        tol = STRUCTURE_TOL * (1.0 + np.linalg.norm(dmat))
        report.add("Delta_psd", mineig >= -tol, max(0.0, -mineig), tol,
                   detail=f"t={t}")
    if system.b_regular and not math.isfinite(system.b):
        report.add("b_finite", False, detail="regular flag with infinite b")
    report.verdict = "valid" if report.passed else "invalid"
    return report


@dataclass
class DefinitenessReport:
    definite: bool
    ratios: dict
    tolerance: float = DEFINITENESS_RTOL

    def as_dict(self) -> dict:
        return {"definite": self.definite, "tolerance": self.tolerance,
                "ratios": {str(k): v for k, v in self.ratios.items()}}


def check_definiteness(system: SymmetricSystem, lambda_samples=None,
                       t_grid=None) -> DefinitenessReport:
    """Test whether some nonzero solution combination is Delta-annihilated.

    For each lambda sample the full solution basis is propagated over the grid
    and the stacked Delta(t_k) Y(t_k) block is analysed by SVD: a small ratio
    of smallest to largest singular value exposes an annihilated combination.
    """
    from .ode import PropagationSettings, fundamental_solution

    if lambda_samples is None:
        lambda_samples = [1j, -1j]
    lambda_samples = list(lambda_samples)
    if not lambda_samples:
        raise WeylforgeError("at least one lambda sample required")
    if t_grid is None:
        hi = system.b if system.b_regular else min(system.a + 1.0, system.b)
        t_grid = np.linspace(system.a, hi, 9)
    t_grid = np.asarray(t_grid, dtype=float)

    settings = PropagationSettings()
    ratios: dict = {}
    definite = True
    for lam in lambda_samples:
        phi = fundamental_solution(system, complex(lam), settings)
        stacked = np.vstack([system.Delta_at(t) @ phi(t) for t in t_grid])
        s = np.linalg.svd(stacked, compute_uv=False)
        ratio = float(s[-1] / s[0]) if s.size and s[0] > 0 else 0.0
        ratios[complex(lam)] = ratio
        if ratio < DEFINITENESS_RTOL:
            definite = False
    return DefinitenessReport(definite, ratios)


def pairing_residual(system: SymmetricSystem, y_at_a, z_at_a) -> float:
    """|(J y(a), z(a)) - (J Gamma_a y, Gamma_a z)|; zero since X_a*JX_a=J."""
    y = np.asarray(y_at_a, dtype=complex).reshape(-1)
    z = np.asarray(z_at_a, dtype=complex).reshape(-1)
    lhs = inner(system.J @ y, z)
    ty = (system.X_a @ y.reshape(-1, 1)).reshape(-1)
    tz = (system.X_a @ z.reshape(-1, 1)).reshape(-1)
    rhs = inner(system.J @ ty, tz)
    return abs(lhs - rhs)

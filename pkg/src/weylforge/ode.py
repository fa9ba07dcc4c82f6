"""Propagation of solutions, weighted Gram integrals, and L2 membership.

Fundamental matrices Phi(t) (normalized by Phi(a) = I) are cached per
(system, lambda).  Constant-coefficient systems are evaluated through the
eigendecomposition of the constant right-hand side; everything else runs an
adaptive explicit Runge-Kutta integrator with dense output that is extended
lazily toward b.
"""

from __future__ import annotations

import bisect
import math
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, PropagationError, QuadratureError, WeylforgeError
from .linalg import herm
from .system import SymmetricSystem

# L2 decision thresholds: a column is "in" when three consecutive Cauchy
# increments fall below CAUCHY_RTOL*(1+integral), "out" when the integral
# exceeds GROWTH_RATIO times its value at the first schedule point.
CAUCHY_RTOL = 1e-10
GROWTH_RATIO = 1e8
# Hard magnitude cap: stop extending integrals once solutions reach this size.
OVERFLOW_GUARD = 1e120


@dataclass(frozen=True)
class PropagationSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    method_order: int = 8

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise WeylforgeError("tolerances must be positive")

    @property
    def ivp_method(self) -> str:
        return "DOP853" if self.method_order >= 8 else "RK45"

    def key(self):
        return (self.rel_tol, self.abs_tol, self.max_step, self.method_order)


DEFAULT_SETTINGS = PropagationSettings()


def _integrate(system: SymmetricSystem, lam: complex, t0: float, t1: float,
               y0: np.ndarray, settings: PropagationSettings, forcing=None,
               dense: bool = False):
    """solve_ivp wrapper for the matrix system Y' = -J(B+lam*Delta)Y [- J*Delta*f]."""
    shape = y0.shape
    j = system.J

    def rhs(t, y):
        mat = y.reshape(shape)
        out = system.rhs_matrix(lam, t) @ mat
        if forcing is not None:
            out = out - (j @ (system.Delta_at(t) @ forcing(t))).reshape(shape)
        return out.reshape(-1)

    sol = solve_ivp(rhs, (t0, t1), y0.reshape(-1).astype(complex),
                    method=settings.ivp_method, rtol=settings.rel_tol,
                    atol=settings.abs_tol, max_step=settings.max_step,
                    dense_output=dense)
    if not sol.success:
        raise PropagationError(
            f"integrator stalled: {sol.message}", last_t=float(sol.t[-1]))
    return sol


def propagate(system: SymmetricSystem, lam: complex, t0: float, t1: float,
              Y0, settings: PropagationSettings | None = None) -> np.ndarray:
    """Value at t1 of the solution of Y' = -J(B+lam*Delta)Y with Y(t0) = Y0."""
    settings = settings or DEFAULT_SETTINGS
    y0 = np.asarray(Y0, dtype=complex)
    squeeze = y0.ndim == 1
    if squeeze:
        y0 = y0.reshape(-1, 1)
    if y0.shape[0] != system.dim:
        raise WeylforgeError(
            f"initial value has {y0.shape[0]} rows, system dimension {system.dim}")
    if t1 == t0:
        out = y0.copy()
    elif system.coeffs.is_constant:
        a_mat = system.rhs_matrix(lam, t0)
        out = _ConstantFlow(a_mat)(t1 - t0) @ y0
    else:
        sol = _integrate(system, lam, t0, t1, y0, settings)
        out = sol.y[:, -1].reshape(y0.shape)
    return out.reshape(-1) if squeeze else out


class _ConstantFlow:
    """exp(A*dt) for a fixed matrix A, via eigendecomposition when stable."""

    def __init__(self, a_mat: np.ndarray):
        self.a = np.asarray(a_mat, dtype=complex)
        n = self.a.shape[0]
        self._eigen = None
        if n > 0:
            w, v = np.linalg.eig(self.a)
            try:
                vinv = np.linalg.inv(v)
                residual = np.linalg.norm(v @ np.diag(w) @ vinv - self.a)
                if residual <= 1e-10 * (1.0 + np.linalg.norm(self.a)):
                    self._eigen = (w, v, vinv)
            except np.linalg.LinAlgError:
                pass
        self._cache: dict = {}

    def __call__(self, dt: float) -> np.ndarray:
        n = self.a.shape[0]
        if n == 0:
            return np.zeros((0, 0), dtype=complex)
        if self._eigen is not None:
            w, v, vinv = self._eigen
            return (v * np.exp(w * dt)) @ vinv
        if dt not in self._cache:
            self._cache[dt] = scipy.linalg.expm(self.a * dt)
        return self._cache[dt]


class FundamentalSolution:
    """Fundamental matrix Phi(t, lambda) with Phi(a) = I."""

    def __init__(self, system: SymmetricSystem, lam: complex,
                 settings: PropagationSettings):
        self.system = system
        self.lam = complex(lam)
        self.settings = settings
        self._flow = None
        if system.coeffs.is_constant:
            self._flow = _ConstantFlow(system.rhs_matrix(self.lam, system.a))
        self._segments: list = []       # scipy dense-output segments
        self._seg_ends: list[float] = []
        self._t_end = system.a
        self._state = np.eye(system.dim, dtype=complex)

    def __call__(self, t: float) -> np.ndarray:
        n = self.system.dim
        if self._flow is not None:
            return self._flow(t - self.system.a)
        if t < self.system.a - 1e-12:
            raise WeylforgeError("evaluation left of the regular endpoint a")
        if abs(t - self.system.a) <= 1e-300:
            return np.eye(n, dtype=complex)
        self._extend(t)
        idx = bisect.bisect_left(self._seg_ends, t)
        idx = min(idx, len(self._segments) - 1)
        return self._segments[idx](t).reshape(n, n)

    def _extend(self, t: float) -> None:
        if t <= self._t_end:
            return
        sol = _integrate(self.system, self.lam, self._t_end, t, self._state,
                         self.settings, dense=True)
        self._segments.append(sol.sol)
        self._seg_ends.append(t)
        self._t_end = t
        self._state = sol.y[:, -1].reshape(self._state.shape)


_fundamental_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def fundamental_solution(system: SymmetricSystem, lam: complex,
                         settings: PropagationSettings | None = None) -> FundamentalSolution:
    settings = settings or DEFAULT_SETTINGS
    per_system = _fundamental_cache.setdefault(system, {})
    key = (complex(lam), settings.key())
    if key not in per_system:
        per_system[key] = FundamentalSolution(system, complex(lam), settings)
    return per_system[key]


class SolutionHandle:
    """Operator solution Y(t) = Phi(t) @ coeffs [+ particular(t) @ post]."""

    def __init__(self, system: SymmetricSystem, lam: complex, coeffs,
                 settings: PropagationSettings | None = None,
                 particular=None, post=None):
        self.system = system
        self.lam = complex(lam)
        self.settings = settings or DEFAULT_SETTINGS
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        self.coeffs = c
        self._particular = particular
        self._post = None if post is None else np.asarray(post, dtype=complex)
        self._phi = fundamental_solution(system, self.lam, self.settings)

    @property
    def column_count(self) -> int:
        return self.coeffs.shape[1]

    @property
    def init_at_a(self) -> np.ndarray:
        return self.at(self.system.a)

    def at(self, t: float) -> np.ndarray:
        out = self._phi(t) @ self.coeffs
        if self._particular is not None:
            part = self._particular(t)
            out = out + (part if self._post is None else part @ self._post)
        return out

    def combine(self, g) -> "SolutionHandle":
        g = np.asarray(g, dtype=complex)
        post = self._post @ g if self._post is not None else (
            g if self._particular is not None else None)
        return SolutionHandle(self.system, self.lam, self.coeffs @ g,
                              self.settings, self._particular, post)

    def residual_at(self, ts, forcing=None, h: float = 1e-5) -> float:
        """Spot-check |J Y' - (B+lam*Delta)Y [- Delta f]| by central differences."""
        worst = 0.0
        for t in np.atleast_1d(ts):
            dy = (self.at(t + h) - self.at(t - h)) / (2 * h)
            res = self.system.J @ dy - (
                self.system.B_at(t) + self.lam * self.system.Delta_at(t)) @ self.at(t)
            if forcing is not None:
                res = res - self.system.Delta_at(t) @ forcing(t)
            worst = max(worst, float(np.linalg.norm(res)))
        return worst


def solve_inhomogeneous(system: SymmetricSystem, lam: complex, f, y_a,
                        settings: PropagationSettings | None = None) -> SolutionHandle:
    """Solution of J y' - B y = lam*Delta*y + Delta*f with y(a) = y_a.

    The forced part is integrated once with zero initial data and stored with
    dense output; the homogeneous part rides on the cached fundamental matrix.
    """
    settings = settings or DEFAULT_SETTINGS
    y0 = np.asarray(y_a, dtype=complex)
    if y0.ndim == 1:
        y0 = y0.reshape(-1, 1)
    k = y0.shape[1]

    def f_mat(t):
        val = np.asarray(f(t), dtype=complex)
        return val.reshape(-1, 1) if val.ndim == 1 else val

    store = _ParticularPart(system, lam, f_mat, k, settings)
    return SolutionHandle(system, lam, y0, settings, particular=store.at)


class _ParticularPart:
    """Forced solution with zero initial data, extended lazily."""

    def __init__(self, system, lam, forcing, width, settings):
        self.system = system
        self.lam = complex(lam)
        self.forcing = forcing
        self.width = width
        self.settings = settings
        self._segments: list = []
        self._seg_ends: list[float] = []
        self._t_end = system.a
        self._state = np.zeros((system.dim, width), dtype=complex)

    def at(self, t: float) -> np.ndarray:
        n = self.system.dim
        if abs(t - self.system.a) <= 1e-300:
            return np.zeros((n, self.width), dtype=complex)
        if t < self.system.a - 1e-12:
            raise WeylforgeError("evaluation left of the regular endpoint a")
        if t > self._t_end:
            sol = _integrate(self.system, self.lam, self._t_end, t, self._state,
                             self.settings, forcing=self.forcing, dense=True)
            self._segments.append(sol.sol)
            self._seg_ends.append(t)
            self._t_end = t
            self._state = sol.y[:, -1].reshape(self._state.shape)
        idx = bisect.bisect_left(self._seg_ends, t)
        idx = min(idx, len(self._segments) - 1)
        return self._segments[idx](t).reshape(n, self.width)


_GL_ORDER = 10
_gl_cache: dict = {}


def _gl_nodes(order: int):
    if order not in _gl_cache:
        x, w = np.polynomial.legendre.leggauss(order)
        _gl_cache[order] = (x, w)
    return _gl_cache[order]


def _gl_panel(integrand, lo: float, hi: float) -> np.ndarray:
    x, w = _gl_nodes(_GL_ORDER)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    acc = None
    for xi, wi in zip(x, w):
        val = wi * integrand(mid + half * xi)
        acc = val if acc is None else acc + val
    return half * acc


def _adaptive_panel(integrand, lo, hi, tol, depth):
    whole = _gl_panel(integrand, lo, hi)
    mid = 0.5 * (lo + hi)
    left = _gl_panel(integrand, lo, mid)
    right = _gl_panel(integrand, mid, hi)
    refined = left + right
    err = np.linalg.norm(whole - refined)
    if err <= tol * (1.0 + np.linalg.norm(refined)) or depth >= 28:
        if depth >= 28 and err > tol * (1.0 + np.linalg.norm(refined)):
            raise QuadratureError(
                f"panel [{lo}, {hi}] failed to converge (err {err:.2e})")
        return refined
    return (_adaptive_panel(integrand, lo, mid, tol, depth + 1)
            + _adaptive_panel(integrand, mid, hi, tol, depth + 1))


def integrate_matrix(integrand, lo: float, hi: float, tol: float = 1e-10) -> np.ndarray:
    """Adaptive composite Gauss-Legendre quadrature of a matrix integrand."""
    if hi == lo:
        probe = integrand(lo)
        return np.zeros_like(np.asarray(probe, dtype=complex))
    return _adaptive_panel(integrand, lo, hi, tol, 0)


def weighted_gram(system: SymmetricSystem, Y: SolutionHandle, Z: SolutionHandle,
                  alpha: float, beta: float, quad_tol: float = 1e-10) -> np.ndarray:
    """Delta-weighted Gram integral of Y against Z over [alpha, beta]."""

    def integrand(t):
        return herm(Y.at(t)) @ system.Delta_at(t) @ Z.at(t)

    return integrate_matrix(integrand, alpha, beta, quad_tol)


def default_beta_schedule(system: SymmetricSystem, count: int = 13) -> np.ndarray:
    """Geometric truncation schedule approaching b."""
    if math.isinf(system.b):
        return np.array([system.a + 5.0 * 2.0 ** k for k in range(count)])
    if system.b_regular:
        return np.array([system.b])
    span = system.b - system.a
    return np.array([system.b - span * 2.0 ** (-(k + 1)) for k in range(count)])


def l2_membership(system: SymmetricSystem, Y: SolutionHandle,
                  beta_schedule=None) -> list[str]:
    """Column-wise verdicts 'in' / 'out' / 'undecided' for L2-Delta membership."""
    if system.b_regular:
        return ["in"] * Y.column_count
    schedule = np.asarray(beta_schedule if beta_schedule is not None
                          else default_beta_schedule(system), dtype=float)
    if schedule.size < 3:
        raise WeylforgeError("schedule too short: need at least 3 points")

    k = Y.column_count
    if k == 0:
        return []
    verdicts = ["undecided"] * k
    totals = np.zeros(k)
    base = np.zeros(k)
    quiet = np.zeros(k, dtype=int)

    def diag_increment(lo, hi):
        mat = integrate_matrix(
            lambda t: herm(Y.at(t)) @ system.Delta_at(t) @ Y.at(t),
            lo, hi, 1e-9)
        return np.maximum(np.real(np.diagonal(mat)), 0.0)

    prev = system.a
    for idx, beta in enumerate(schedule):
        if np.linalg.norm(Y.at(beta)) > OVERFLOW_GUARD:
            break
        inc = diag_increment(prev, beta)
        totals = totals + inc
        prev = beta
        if idx == 0:
            base = totals.copy()
            continue
        for j in range(k):
            if verdicts[j] != "undecided":
                continue
            if totals[j] > GROWTH_RATIO * (1.0 + base[j]):
                verdicts[j] = "out"
            elif inc[j] <= CAUCHY_RTOL * (1.0 + totals[j]):
                quiet[j] += 1
                if quiet[j] >= 3:
                    verdicts[j] = "in"
            else:
                quiet[j] = 0
        if all(v != "undecided" for v in verdicts):
            break
    return verdicts


def l2_solution_basis(system: SymmetricSystem, lam: complex, n_expected: int,
                      settings: PropagationSettings | None = None,
                      beta_schedule=None):
    """Coefficient basis (columns) of the n_expected-dimensional L2 solution
    subspace, identified through the eigenvalues of the running Gram matrix.

    Returns (basis, certificate).  Regular systems return the full identity.
    """
    settings = settings or DEFAULT_SETTINGS
    n = system.dim
    if system.b_regular:
        return np.eye(n, dtype=complex), {"kind": "regular"}
    if n_expected == 0:
        return np.zeros((n, 0), dtype=complex), {"kind": "trivial"}
    schedule = np.asarray(beta_schedule if beta_schedule is not None
                          else default_beta_schedule(system), dtype=float)
    phi = fundamental_solution(system, lam, settings)

    gram = np.zeros((n, n), dtype=complex)
    prev_vals = None
    quiet = 0
    history = []
    prev_t = system.a
    for beta in schedule:
        if np.linalg.norm(phi(beta)) > OVERFLOW_GUARD:
            break
        gram = gram + integrate_matrix(
            lambda t: herm(phi(t)) @ system.Delta_at(t) @ phi(t),
            prev_t, beta, 1e-11)
        prev_t = beta
        vals, vecs = np.linalg.eigh(0.5 * (gram + herm(gram)))
        small = vals[:n_expected]
        gap = (vals[n_expected] / max(vals[n_expected - 1], 1e-300)
               if n_expected < n else math.inf)
        history.append({"beta": float(beta), "eigenvalues": small.tolist(),
                        "gap": float(gap) if math.isfinite(gap) else None})
        if prev_vals is not None:
            drift = np.abs(small - prev_vals) / (1.0 + np.abs(small))
            if drift.max() <= CAUCHY_RTOL:
                quiet += 1
            else:
                quiet = 0
        prev_vals = small.copy()
        if quiet >= 2 and gap >= GROWTH_RATIO:
            basis = vecs[:, :n_expected]
            return basis, {"kind": "gram", "converged_at": float(beta),
                           "gap": None if math.isinf(gap) else float(gap),
                           "history": history}
    raise ConvergenceError(
        f"L2 subspace of dimension {n_expected} did not stabilize over the schedule",
        history=history)


def gram_to_b(system: SymmetricSystem, Y: SolutionHandle, Z: SolutionHandle,
              tol: float = 1e-10, beta_schedule=None):
    """Certified improper Gram integral over [a, b).

    Accumulates schedule increments until two consecutive increments fall
    below tol*(1+|acc|).  Returns (matrix, certificate).
    """
    if system.b_regular:
        mat = weighted_gram(system, Y, Z, system.a, system.b, tol)
        return mat, {"kind": "regular"}
    schedule = np.asarray(beta_schedule if beta_schedule is not None
                          else default_beta_schedule(system), dtype=float)
    acc = None
    quiet = 0
    prev = system.a
    for beta in schedule:
        inc = weighted_gram(system, Y, Z, prev, beta, tol)
        acc = inc if acc is None else acc + inc
        prev = beta
        if np.linalg.norm(inc) <= tol * (1.0 + np.linalg.norm(acc)):
            quiet += 1
            if quiet >= 2:
                return acc, {"kind": "tail", "converged_at": float(beta)}
        else:
            quiet = 0
    raise ConvergenceError("Gram integral tail did not converge over the schedule")

"""Coefficient representations: maps t -> scalar or t -> matrix.

Supported representations are constants, polynomials in t, tabulated samples
with piecewise-cubic interpolation, and plain callables.  Constants and
polynomials carry exact derivatives; tabulated fields differentiate their
spline; callables accept user-supplied derivative functions.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import WeylforgeError

_REPRESENTATIONS = ("constant", "polynomial", "tabulated", "callable")


class ScalarField:
    """Real- or complex-valued coefficient function of t."""

    def __init__(self, kind: str, data, derivatives=None):
        if kind not in _REPRESENTATIONS:
            raise WeylforgeError(f"unknown field representation {kind!r}")
        self.kind = kind
        self._data = data
        self._derivatives = derivatives

    @classmethod
    def constant(cls, value) -> "ScalarField":
        return cls("constant", complex(value))

    @classmethod
    def polynomial(cls, coeffs: Sequence[complex]) -> "ScalarField":
        return cls("polynomial", np.polynomial.Polynomial(np.asarray(coeffs, dtype=complex)))

    @classmethod
    def tabulated(cls, ts: Sequence[float], values: Sequence[complex]) -> "ScalarField":
        return cls("tabulated", CubicSpline(np.asarray(ts, dtype=float),
                                            np.asarray(values, dtype=complex)))

    @classmethod
    def from_callable(cls, func: Callable[[float], complex],
                      derivatives: Sequence[Callable] | None = None) -> "ScalarField":
        return cls("callable", func, derivatives)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, t: float) -> complex:
        if self.kind == "constant":
            return self._data
        if self.kind == "polynomial":
            return complex(self._data(t))
        if self.kind == "tabulated":
            return complex(self._data(t))
        return complex(self._data(t))

    def derivative(self, order: int = 1) -> "ScalarField":
        if order == 0:
            return self
        if self.kind == "constant":
            return ScalarField.constant(0.0)
        if self.kind == "polynomial":
            return ScalarField("polynomial", self._data.deriv(order))
        if self.kind == "tabulated":
            return ScalarField("tabulated", self._data.derivative(order))
        if self._derivatives is None or len(self._derivatives) < order:
            raise WeylforgeError(
                "callable field has no derivative of order %d" % order)
        rest = self._derivatives[order:]
        return ScalarField("callable", self._derivatives[order - 1], rest or None)


class MatrixField:
    """Square-matrix-valued coefficient function of t."""

    def __init__(self, kind: str, data, dim: int):
        if kind not in _REPRESENTATIONS:
            raise WeylforgeError(f"unknown field representation {kind!r}")
        self.kind = kind
        self._data = data
        self.dim = int(dim)

    @classmethod
    def constant(cls, value) -> "MatrixField":
        m = np.asarray(value, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise WeylforgeError("constant matrix field must be square")
        return cls("constant", m, m.shape[0])

    @classmethod
    def polynomial(cls, coeffs: Sequence) -> "MatrixField":
        mats = [np.asarray(c, dtype=complex) for c in coeffs]
        if not mats:
            raise WeylforgeError("polynomial matrix field needs coefficients")
        dim = mats[0].shape[0]
        for m in mats:
            if m.shape != (dim, dim):
                raise WeylforgeError("polynomial coefficients must share one shape")
        return cls("polynomial", mats, dim)

    @classmethod
    def tabulated(cls, ts: Sequence[float], values: Sequence) -> "MatrixField":
        vals = np.asarray(values, dtype=complex)
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
            raise WeylforgeError("tabulated values must be shaped (nt, dim, dim)")
        spline = CubicSpline(np.asarray(ts, dtype=float), vals, axis=0)
        return cls("tabulated", spline, vals.shape[1])

    @classmethod
    def from_callable(cls, func: Callable[[float], np.ndarray], dim: int) -> "MatrixField":
        return cls("callable", func, dim)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def constant_value(self) -> np.ndarray:
        if not self.is_constant:
            raise WeylforgeError("field is not constant")
        return self._data

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return self._data
        if self.kind == "polynomial":
            acc = np.zeros((self.dim, self.dim), dtype=complex)
            power = 1.0
            for c in self._data:
                acc = acc + power * c
                power *= t
            return acc
        if self.kind == "tabulated":
            return np.asarray(self._data(t), dtype=complex)
        return np.asarray(self._data(t), dtype=complex)

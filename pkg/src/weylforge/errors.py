"""Exception hierarchy shared across the package."""

from __future__ import annotations


class WeylforgeError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(WeylforgeError):
    """Operands have inconsistent space dimensions."""


class PropagationError(WeylforgeError):
    """The ODE integrator failed to reach the target point."""

    def __init__(self, message: str, last_t: float | None = None):
        super().__init__(message)
        self.last_t = last_t


class QuadratureError(WeylforgeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConvergenceError(WeylforgeError):
    """A limiting process did not converge within its schedule."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


class IllConditionedError(WeylforgeError):
    """A linear solve exceeded the allowed condition number."""


class NotInResolventSetError(WeylforgeError):
    """The normalization solve is singular: lambda sits at a spectral
    point of the reference extension."""


class ParameterClassError(WeylforgeError):
    """A boundary parameter fails the requirements of its class."""


class UnsupportedEndpointError(WeylforgeError):
    """The endpoint-b regime is outside the supported set
    (regular or limit point)."""


class ConfigError(WeylforgeError):
    """Invalid problem configuration document."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.issues))

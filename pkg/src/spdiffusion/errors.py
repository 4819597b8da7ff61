"""Exception hierarchy shared by the solvers and the command line.

Validation problems map to exit code 2, numerical failures to exit code 3.
"""
from __future__ import annotations

from dataclasses import dataclass


class SpdiffusionError(Exception):
    """Base class for all package errors."""


@dataclass
class Violation:
    """One violated invariant of a problem description."""

    kind: str
    message: str
    indices: tuple = ()

    def __str__(self) -> str:
        where = f" {list(self.indices)}" if self.indices else ""
        return f"{self.kind}{where}: {self.message}"


class ValidationError(SpdiffusionError, ValueError):
    """Raised when a problem description breaks one or more invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class DomainError(SpdiffusionError, ValueError):
    """Argument outside the region where a formula is valid."""


class SingularityError(SpdiffusionError, ValueError):
    """Evaluation requested at a singular point (for example x == xi)."""


class ProximityError(SpdiffusionError, ValueError):
    """Outer expansion evaluated inside the inner region of a compartment."""


class ResolutionError(DomainError):
    """Grid too coarse to resolve a compartment."""


class UnsupportedError(SpdiffusionError, NotImplementedError):
    """Combination of options the solvers do not cover."""


class NumericalError(SpdiffusionError, ArithmeticError):
    """Base class for numerical failures (exit code 3)."""


class RangeError(NumericalError):
    """Special function result would overflow or underflow."""


class ConditioningError(NumericalError):
    """Linear system too ill-conditioned to trust."""

    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class AccuracyError(NumericalError):
    """A truncated series or quadrature did not reach its tolerance."""


class ConvergenceError(NumericalError):
    """Iteration failed to converge; carries the residual history."""

    def __init__(self, message, history=None):
        self.history = list(history or [])
        super().__init__(message)


class EventOrderingError(NumericalError):
    """Integrator could not resolve a sequence of events; carries the state."""

    def __init__(self, message, state=None):
        self.state = state
        super().__init__(message)

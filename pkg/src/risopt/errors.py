"""Exception hierarchy shared by the modelling and optimization layers."""

from __future__ import annotations


class RisOptError(Exception):
    """Base class for all errors raised by :mod:`risopt`."""


class ConfigError(RisOptError, ValueError):
    """Invalid scenario, grid or optimizer configuration."""


class NumericalError(RisOptError):
    """Base class for numerical failures (quadrature, singular systems)."""


class QuadratureError(NumericalError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


class ImpedanceFileError(RisOptError, ValueError):
    """Malformed or physically inconsistent impedance file."""


class SingularImpedanceError(NumericalError):
    """The equivalent RIS impedance matrix is exactly singular."""


class DegenerateChannelError(NumericalError):
    """A denominator of the transfer function vanished."""


class LineSearchStallError(RisOptError):
    """Backtracking did not find an acceptable step within the loop budget."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class MonotonicityError(NumericalError):
    """An accepted iterate decreased the objective."""

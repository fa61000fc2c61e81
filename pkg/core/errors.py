"""
Exception hierarchy for the distributed average tracking simulator.
Every module raises a subclass of DatError so callers can catch one type.
"""

from typing import Any, Optional


class DatError(Exception):
    """Base class for all simulator errors."""


class GraphError(DatError, ValueError):
    """Invalid edge list, self edge, or disconnected topology."""


class SpectrumError(DatError, ArithmeticError):
    """Eigenvalue computation did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class SignalError(DatError, ValueError):
    """Invalid input-signal specification or bound estimation request."""


class GainError(DatError, ValueError):
    """Gain synthesis refused or inconsistent gain set."""


class DivergenceError(DatError, ArithmeticError):
    """
    The closed loop left the admissible region.

    Carries the abort time, the offending agent (0-based row, or None when the
    breach is not attributable to one agent) and the partial trajectory.
    """

    def __init__(self, message: str, time: float, agent: Optional[int] = None,
                 trajectory: Any = None):
        where = f" at t={time:.6g}"
        if agent is not None:
            where += f", agent {agent + 1}"
        super().__init__(message + where)
        self.time = time
        self.agent = agent
        self.trajectory = trajectory


class ScenarioError(DatError, ValueError):
    """Scenario document failed validation."""

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None):
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(message + suffix)
        self.field = field
        self.line = line


class ExportError(DatError, OSError):
    """Trajectory, metadata or plot could not be written or read."""

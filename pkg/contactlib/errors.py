"""
Exception hierarchy shared by every contactlib module. Validation problems derive from ValueError so callers that
only know the builtin still catch them; numerical failures derive from SolverError.
"""

from typing import Optional, Tuple


class ContactLibError(Exception):
    """Base class for all errors raised by contactlib."""


class ValidationError(ContactLibError, ValueError):
    """
    Raised when an input violates a documented precondition.
    :param message: Human-readable description
    :param key: Name of the offending field or configuration key, if there is one
    """

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class ConfigError(ValidationError):
    """Raised when an experiment configuration file cannot be parsed or validated."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        if line is not None:
            message = f'{message} (line {line})'
        super().__init__(message, key)
        self.line = line


class SingularGradientError(ContactLibError):
    """Raised when two disk centers coincide and the contact normal is undefined."""

    def __init__(self, pair: Tuple[int, int]):
        super().__init__(f'Centers of particles {pair[0]} and {pair[1]} coincide; contact normal is undefined')
        self.pair = pair


class InfeasibleConfigurationError(ContactLibError):
    """Raised when a configuration has overlapping disks beyond the allowed tolerance."""

    def __init__(self, pair: Tuple[int, int], distance: float, step: Optional[int] = None):
        where = f' at step {step}' if step is not None else ''
        super().__init__(f'Particles {pair[0]} and {pair[1]} overlap{where} (signed distance {distance:.3e})')
        self.pair = pair
        self.distance = distance
        self.step = step


class SolverError(ContactLibError):
    """Base class for numerical solver failures."""


class LineSearchError(SolverError):
    """Raised when a backtracking line search cannot find a step that decreases the objective."""


class ConvergenceError(SolverError):
    """Raised when a solver stops without meeting its tolerances and the caller asked to abort."""

    def __init__(self, message: str, step: Optional[int] = None):
        if step is not None:
            message = f'{message} (step {step})'
        super().__init__(message)
        self.step = step


class QuadratureError(ContactLibError):
    """Raised when adaptive quadrature of the closed-form density does not converge."""


class TruncationError(ContactLibError):
    """Raised when the age grid cannot be truncated within the cell cap."""


class SchemaError(ContactLibError):
    """Raised when a CSV file does not match the columns expected for a plot."""

"""
Exceptions raised by sbmssl.

Parameter problems derive from ValueError, numerical failures from ArithmeticError or
RuntimeError, so callers can catch them at the granularity they need.
"""

from pathlib import Path
from typing import Optional, Union


class ParameterDomainError(ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class SpecFormatError(ValueError):
    """An experiment spec or a results file does not have the expected layout."""


class EdgeListFormatError(ValueError):
    """An edge list file could not be parsed."""

    def __init__(
        self,
        message: str,
        path: Union[str, Path, None] = None,
        line_number: Optional[int] = None,
    ):
        """
        Constructor for an EdgeListFormatError.

        Args:
            message (str): what is wrong.
            path (str or Path, optional): the file being parsed. Defaults to None.
            line_number (int, optional): 1-based line number of the offending line.
                Defaults to None.
        """
        self.path = path
        self.line_number = line_number
        location = []
        if path is not None:
            location.append(f"{path}")
        if line_number is not None:
            location.append(f"line {line_number}")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)


class IndefiniteOperatorError(ArithmeticError):
    """Conjugate gradient met a direction of non-positive curvature."""


class ConvergenceError(RuntimeError):
    """An iterative method exhausted its iteration budget."""

from __future__ import annotations

from typing import Any, Optional


class NumericalConvergenceError(RuntimeError):
    """Raised when a numerical procedure cannot reach its accuracy target."""

    def __init__(self, message: str, *, achieved_error: Optional[Any] = None) -> None:
        super().__init__(message)
        self.achieved_error = achieved_error


class QuadratureNonConvergence(NumericalConvergenceError):
    """Raised when successive quadrature refinements keep disagreeing."""


class ContourHeightError(NumericalConvergenceError):
    """Raised when the integrand has not decayed enough at the contour height."""


class ZetaConvergenceError(NumericalConvergenceError):
    """Raised when a Dirichlet series cannot be truncated within the tail target."""

    def __init__(self, message: str, *, required_terms: int, achieved_error: Optional[Any] = None) -> None:
        super().__init__(message, achieved_error=achieved_error)
        self.required_terms = required_terms


class SeriesTruncationError(NumericalConvergenceError):
    """Raised when neither the a-priori bound nor empirical stopping terminates a series."""


__all__ = [
    "ContourHeightError",
    "NumericalConvergenceError",
    "QuadratureNonConvergence",
    "SeriesTruncationError",
    "ZetaConvergenceError",
]

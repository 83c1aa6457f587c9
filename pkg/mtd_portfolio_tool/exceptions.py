"""
Exception hierarchy shared by every module and mapped to CLI exit codes
"""

from __future__ import annotations

from typing import Optional


class MtdToolError(Exception):
    """Base class for all errors raised by the tool"""

    exit_code = 1


class InputDataError(MtdToolError, ValueError):
    """Unreadable or malformed input, invalid settings, violated pre-conditions"""

    exit_code = 2


class DegenerateDataError(MtdToolError, ValueError):
    """Input is well formed but carries no usable variation"""

    exit_code = 3


class DegenerateAssortativityError(DegenerateDataError):
    """Weighted variance of source or target excess strengths vanishes"""

    def __init__(self, modality: str, end: str, variance: float):
        self.modality = modality
        self.end = end
        self.variance = variance
        super().__init__(
            f"Degenerate assortativity in mode {modality}: {end} excess strengths "
            f"have zero weighted variance ({variance:.3e})"
        )


class InfeasiblePortfolioError(MtdToolError, ValueError):
    """The portfolio constraint block admits no solution"""

    exit_code = 4


class ConvergenceError(MtdToolError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance"""

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        super().__init__(message)

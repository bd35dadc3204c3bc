"""Exception types shared across densepack.

Errors split into two families so the CLI can map them to exit codes:
``InvalidInputError`` (bad geometry, bad files) and ``NumericalError``
(solver trouble on otherwise valid input).
"""

from __future__ import annotations


class DensepackError(Exception):
    """Base class for all densepack errors."""


class InvalidInputError(DensepackError, ValueError):
    pass


class InvalidBasisError(InvalidInputError):
    pass


class CellTooSkewedError(InvalidBasisError):
    """The {-1, 0, 1}^d image window does not contain every minimal image."""


class DegenerateConfigurationError(InvalidInputError):
    pass


class OverlapError(InvalidInputError):
    def __init__(self, k: int, j: int, shift, gap: float):
        self.k, self.j, self.shift, self.gap = k, j, tuple(shift), gap
        super().__init__(
            f"balls {k} and {j} (shift {list(self.shift)}) overlap: gap {gap:.6g} < 0"
        )


class UnsupportedRegimeError(InvalidInputError):
    pass


class NumericalError(DensepackError, ArithmeticError):
    pass


class AccuracyError(NumericalError):
    def __init__(self, message: str, estimate: float | None = None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class HypergeometricRangeError(NumericalError, OverflowError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class RankDeficiencyError(NumericalError):
    pass


class InfeasibleClassError(NumericalError):
    pass

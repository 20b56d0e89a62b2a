"""
Error taxonomy for daelim.

Every error carries the process exit code the CLI reports for it:
1 = bad input, 2 = not reducible, 3 = internal, 4 = resultant vanishes,
5 = verification tolerance exceeded.
"""

from typing import Optional


class DaelimError(Exception):
    """Base class of every error raised by the package."""

    exit_code = 3


# ---------------------------------------------------------------------------
# Input errors (exit 1)
# ---------------------------------------------------------------------------

class InputError(DaelimError):
    exit_code = 1


class DslError(InputError):
    """A problem in a .dae document, positioned by 1-based line and column."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


class DaeSyntaxError(DslError):
    pass


class UndeclaredSymbol(DslError):
    pass


class NonPolynomial(DslError):
    pass


class DerivativeOfParameter(DslError):
    pass


class NonzeroEquationRequired(DslError):
    pass


class DuplicateDeclaration(DslError):
    pass


class TrajectoryError(DslError):
    """Syntax or semantic problem in a trajectory file."""


class MissingAssignment(InputError):
    pass


class ConfigError(InputError):
    pass


# ---------------------------------------------------------------------------
# Algebra kernel errors (exit 3, they point at a bug or malformed input matrix)
# ---------------------------------------------------------------------------

class AlgebraError(DaelimError):
    exit_code = 3


class NotDivisible(AlgebraError):
    pass


class NotSquare(AlgebraError):
    pass


class BarredOperand(AlgebraError):
    pass


class CountMismatch(AlgebraError):
    pass


class ZeroMatrix(AlgebraError):
    pass


# ---------------------------------------------------------------------------
# Pipeline outcomes
# ---------------------------------------------------------------------------

class NotReducible(DaelimError):
    """Index reduction could not balance equations against elimination symbols."""

    exit_code = 2

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ResultantVanishes(DaelimError):
    """The elimination matrix is identically zero."""

    exit_code = 4

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ToleranceExceeded(DaelimError):
    exit_code = 5

    def __init__(self, residual: float, tolerance: float):
        super().__init__(f"max relative residual {residual:.3e} exceeds tolerance {tolerance:.1e}")
        self.residual = residual
        self.tolerance = tolerance

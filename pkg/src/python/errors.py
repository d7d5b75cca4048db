"""
Exception hierarchy for the factoring pipeline and the CLI exit-code mapping.
"""
from typing import Dict, Type


class FactoringError(Exception):
    """Base class for every error raised by this package."""


# ==================== Input errors ====================

class InvalidInstance(FactoringError, ValueError):
    """N is outside the admissible class (odd, >= 9, not a perfect square, < 2^64)."""


class DimensionMismatch(FactoringError, ValueError):
    """Two operators or states that must share a dimension do not."""


class NotDiagonal(FactoringError, ValueError):
    """A unitary expected to be diagonal carries off-diagonal weight."""


class NotUnitModulus(FactoringError, ValueError):
    """A diagonal entry of a step unitary is not a pure phase."""


class UnsupportedStructure(FactoringError, ValueError):
    """A step Hamiltonian is not diagonal plus single-qubit X terms."""


class QasmSyntaxError(FactoringError, ValueError):
    """QASM text outside the subset this package emits."""


class BasisMissing(FactoringError, ValueError):
    """Tomography was asked to reconstruct without all of Z, X and Y counts."""


class EncodingUnsupported(FactoringError, ValueError):
    """The shared-qubit encoding cannot express a residual that contains carries."""


# ==================== Run failures ====================

class Inconsistent(FactoringError, RuntimeError):
    """A column equation became unsatisfiable; the bit-length split is wrong."""

    def __init__(self, message: str, column: int = None):
        super().__init__(message)
        self.column = column


class TooLarge(FactoringError, RuntimeError):
    """An exhaustive enumeration would exceed its cap."""


class NonBinaryResidual(FactoringError, RuntimeError):
    """A substitution can leave {0, 1} on some admissible assignment."""


class NormViolation(FactoringError, RuntimeError):
    """State norm drifted during evolution."""


class DegenerateGap(FactoringError, RuntimeError):
    """The minimum spectral gap is zero, so no runtime estimate exists."""


class NotAFactorization(FactoringError, RuntimeError):
    """No maximal-probability outcome lifts to P * Q = N."""


class NoSplitConsistent(FactoringError, RuntimeError):
    """Every bit-length split was rejected."""


class EvolutionFailed(FactoringError, RuntimeError):
    """Readout failed to produce factors after all retries."""


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NO_SPLIT = 2
EXIT_EVOLUTION_FAILED = 3
EXIT_INVALID_INPUT = 4

_EXIT_CODES: Dict[Type[BaseException], int] = {
    NoSplitConsistent: EXIT_NO_SPLIT,
    EvolutionFailed: EXIT_EVOLUTION_FAILED,
    NotAFactorization: EXIT_EVOLUTION_FAILED,
    InvalidInstance: EXIT_INVALID_INPUT,
    QasmSyntaxError: EXIT_INVALID_INPUT,
    EncodingUnsupported: EXIT_INVALID_INPUT,
}


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    for exc_type, code in _EXIT_CODES.items():
        if isinstance(exc, exc_type):
            return code
    if isinstance(exc, (ValueError, KeyError)) and not isinstance(exc, FactoringError):
        return EXIT_INVALID_INPUT
    return EXIT_FAILURE

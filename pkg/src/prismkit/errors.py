"""Exception hierarchy shared by every prismkit layer.

Each family maps onto one CLI exit code, so a command can surface any
failure without knowing which module raised it.
"""

from __future__ import annotations

from typing import Any


class PrismkitError(Exception):
    """Base class for all prismkit failures."""

    exit_code = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context = context


# Input errors (exit code 2)


class InputError(PrismkitError):
    """The caller handed us something malformed or unsupported."""

    exit_code = 2


class ParseError(InputError):
    """An input file could not be parsed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = path or "<input>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}", path=path, line=line)


class SpecMismatch(InputError):
    """Ring data is invalid, or elements from different rings were combined."""


class ShapeMismatch(InputError):
    """Series or matrices of incompatible shape were combined."""


class IndexOutOfRange(InputError):
    """A face map or coefficient index outside the valid range."""


class NonzeroConstantTerm(InputError):
    """Substitution argument must lie in the divided-power ideal."""


class NotAUnit(InputError):
    """Inversion of an element with positive valuation."""


class UnsupportedLevel(InputError):
    """Preimage construction requested above the supported level."""


class StructureViolation(InputError):
    """A matrix lacks the structure (e.g. strict upper-triangularity) required."""


class ConfigError(InputError):
    """Invalid run configuration."""


# Mathematical check failures (exit code 1)


class CheckFailed(PrismkitError):
    """A verified identity does not hold."""

    exit_code = 1

    def __init__(self, message: str, index: Any = None, **context: Any):
        super().__init__(message, index=index, **context)
        self.index = index


class NotAdmissible(CheckFailed):
    """The nilpotency limit defining a Hodge-Tate crystal could not be certified."""


class CocycleViolation(CheckFailed):
    """A stratification fails the cocycle condition."""


class NotAStratification(CheckFailed):
    """A matrix series does not follow the stratification recursion."""


class ComplexViolation(CheckFailed):
    """d composed with d is nonzero within the verified margin."""


class ChainMapViolation(CheckFailed):
    """rho or rho-prime fails to commute with the differentials."""


class NotInKernel(CheckFailed):
    """A cochain expected to be a cocycle is not."""


class NotInImage(CheckFailed):
    """A cocycle is not in the image it should lie in."""


class ReconstructionMismatch(CheckFailed):
    """A constructed preimage does not map back onto its target."""


class RelationViolation(CheckFailed):
    """A coefficient relation satisfied by every cocycle fails."""


class CocycleIdentityViolation(CheckFailed):
    """U(gh) differs from U(g) g(U(h))."""


class InvariantsMismatch(CheckFailed):
    """Galois invariants disagree with the kernel of the crystal matrix."""


class IdentityViolation(CheckFailed):
    """A q-calculus or tau-connection identity fails."""


# Precision and budget exhaustion (exit code 3)


class PrecisionError(PrismkitError):
    """The answer is not decidable at the configured precision or budget."""

    exit_code = 3


class PrecisionExhausted(PrecisionError):
    """A pivot valuation cannot be separated from the precision horizon."""


class DerivativePrecisionLoss(PrecisionError):
    """E'(pi) vanishes at the working precision."""


class TruncationLoss(PrecisionError):
    """Frobenius would push support beyond the truncation caps."""


class DivisionFailure(PrecisionError):
    """An exact series division left a remainder at the current caps."""


class DegreeOverflow(PrecisionError):
    """The requested level leaves no verifiable degrees below the cap."""

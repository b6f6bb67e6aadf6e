"""
Exception hierarchy for the Hadamard state construction.
"""

from typing import Optional


class HadamardError(Exception):
    """
    Base class for all construction and verification failures.

    Attributes:
        invariant: Name of the invariant or check that failed (if any)
        residual: Measured residual that triggered the failure (if any)
    """

    def __init__(self, message: str, invariant: Optional[str] = None,
                 residual: Optional[float] = None):
        super().__init__(message)
        self.invariant = invariant
        self.residual = residual


class DimensionError(HadamardError, ValueError):
    """Spacetime dimension or array shape not supported."""


class UnsupportedDimensionError(DimensionError):
    """Dimension is valid but the requested path is not available for it."""


class CliffordStructureError(HadamardError):
    """Matrix does not normalize the Clifford generators."""


class ExpressionError(HadamardError, ValueError):
    """Base class for errors in the metric expression language."""

    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ExpressionSyntaxError(ExpressionError):
    """Malformed expression source."""


class UnknownIdentifierError(ExpressionError):
    """Identifier other than t, x or a known function."""


class ArityError(ExpressionError):
    """Function applied to the wrong number of arguments."""


class ExpressionDomainError(HadamardError, ValueError):
    """Expression evaluated outside its domain (division by zero, sqrt of negative)."""


class EllipticityError(HadamardError, ValueError):
    """Spatial metric falls below the configured floor."""


class SignatureError(HadamardError, ValueError):
    """Metric does not have the expected Lorentzian signature."""


class InnerProductError(HadamardError):
    """Gram matrix is not positive definite."""


class SelfAdjointnessError(HadamardError):
    """Operator is not self-adjoint for its gram to the required tolerance."""


class SpectralDomainError(HadamardError, ValueError):
    """Function is undefined at an eigenvalue of the operator."""

    def __init__(self, message: str, eigenvalue: float):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class ConvergenceError(HadamardError):
    """Iterative routine failed to converge."""


class QuadratureMismatchError(HadamardError):
    """Eigendecomposition and integral formula disagree."""


class AssemblyError(HadamardError):
    """Assembled Hamiltonian violates a structural identity."""


class RegularizationError(HadamardError):
    """Spectral gap could not be opened within the allowed strength."""


class OffGridError(HadamardError, ValueError):
    """Requested time is not a grid point."""


class InterpolationError(HadamardError, ValueError):
    """Interpolating model does not match its ends."""


class ConstructionError(HadamardError):
    """State bundle violates a state condition."""


class GapError(HadamardError, ValueError):
    """Static Hamiltonian may have a kernel (non-positive mass)."""


class UnsupportedKillingError(HadamardError, ValueError):
    """Lie derivative requested for a field that is not Killing."""


class ResolutionError(HadamardError, ValueError):
    """Wavepacket does not fit the grid or cutoff."""


class ConfigError(HadamardError, ValueError):
    """
    Scenario configuration violates the schema.

    Attributes:
        pointer: JSON pointer to the offending field (e.g. '/cutoff_k')
    """

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}", invariant="schema")
        self.pointer = pointer

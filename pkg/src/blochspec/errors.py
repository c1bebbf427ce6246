"""Exception hierarchy shared across the package."""


class BlochspecError(Exception):
    """Base class for all package-specific errors."""


class FrequencyResolutionError(BlochspecError):
    """Sample grid too coarse for the requested Fourier cutoff."""


class EmptyInputError(BlochspecError):
    """An operation received no data."""


class UnsupportedFormError(BlochspecError):
    """Operator shape does not match what the operation supports."""


class AssemblyError(BlochspecError):
    """Dimension or structure mismatch while building a matrix."""


class EigensolverError(BlochspecError):
    """Dense eigensolver failed to converge.

    ``partial`` carries whatever Schur progress the backend exposed.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class Det2Error(BlochspecError):
    """Both evaluation paths of the regularized determinant failed."""


class PrincipalSingularError(BlochspecError):
    """Truncated principal-coefficient block is numerically singular."""


class ContourThroughZeroError(BlochspecError):
    """A contour passes too close to a zero of the sampled function."""

    def __init__(self, message, suggested_perturbation=None):
        super().__init__(message)
        self.suggested_perturbation = suggested_perturbation


class RefinementBudgetError(BlochspecError):
    """Adaptive contour sampling exceeded its sample budget."""


class BoundaryZeroError(BlochspecError):
    """Subdivision boxes keep hitting zeros on their boundaries."""


class ReductionError(BlochspecError):
    """First-order reduction failed (singular principal coefficient)."""


class StiffnessError(BlochspecError):
    """Adaptive integrator step size underflowed."""


class ConfigError(BlochspecError):
    """Config file is syntactically or semantically invalid."""

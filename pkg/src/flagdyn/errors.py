"""Exception hierarchy.

Every error names the violated condition and carries the measured residual
where one exists, so failures in long pipelines are diagnosable from the
message alone.  The ``exit_code`` attribute is what the command-line front
end returns to the shell: 1 for validation failures, 2 for parse failures,
3 for numerical failures.
"""

from __future__ import annotations


class FlagdynError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ValidationError(FlagdynError):
    """An input violated one of the documented preconditions."""

    exit_code = 1


class ParseError(FlagdynError):
    """A spec or config file could not be parsed."""

    exit_code = 2


class NumericalError(FlagdynError):
    """A numerical procedure failed or left its validity envelope."""

    exit_code = 3


# -- validation-type errors --------------------------------------------------


class NotHermitianError(ValidationError):
    """Matrix expected to be Hermitian is not (beyond tolerance)."""


class NegativeEigenvalueError(ValidationError):
    """Density matrix has an eigenvalue below -tol."""


class TraceNotOneError(ValidationError):
    """Density matrix trace differs from one beyond tolerance."""


class DimensionMismatchError(ValidationError):
    """Operands have incompatible shapes."""


class InvalidDimensionError(ValidationError):
    """Hilbert-space dimension outside the supported range."""


class NotOnSimplexHyperplaneError(ValidationError):
    """Vector does not sum to one, so it has no simplex projection."""


class NonUnitaryFlagError(ValidationError):
    """Flag frame fails the unitarity check."""


class TangentNotOffDiagonalError(ValidationError):
    """Tangent direction is not an off-diagonal anti-Hermitian matrix
    in the flag frame."""


class NonAdmissibleFlagError(ValidationError):
    """Flag does not diagonalize the group blocks required at a crossing."""


class PlanSpectrumMismatchError(ValidationError):
    """Transport plan endpoints do not carry the spectra of the given
    states."""


class TooFewFlagsError(ValidationError):
    """Not enough (invertible) flags for the requested construction."""


class UnsupportedDimensionForSvgError(ValidationError):
    """SVG rendering is only defined for three-level systems."""


class FlagPathDiscontinuityError(ValidationError):
    """A sampled flag path jumps between consecutive samples without the
    jump being declared as a splice."""


# -- numerical errors --------------------------------------------------------


class EigensolverFailure(NumericalError):
    """The underlying eigensolver did not converge."""


class StepTooLargeError(NumericalError):
    """Fixed-step integration violated a conserved property; the step is
    too large for the system's rates."""


class DegenerateGapError(NumericalError):
    """Spectral gap below tolerance where a simple gap is required."""


class NearCrossingBlowupError(NumericalError):
    """Eigenvalue gap below the crossing tolerance while the coupling
    block does not vanish: the reconstructed Hamiltonian diverges."""


class SingularCombinationError(NumericalError):
    """The weighted combination of field matrices is numerically
    singular."""

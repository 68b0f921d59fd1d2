"""Exception and warning types shared across the toolkit."""


class MemlatError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(MemlatError):
    """Input values outside the documented domain."""


class NonPositiveInput(InvalidInput):
    """A magnitude that must be positive is zero or negative."""


class TrapFrequencyImaginary(MemlatError):
    """Lattice depth came out non-positive, so no longitudinal trap exists."""


class ReflectivityZero(MemlatError):
    """Left-moving atomic coupling has no finite limit at zero reflectivity."""


class NotHurwitz(MemlatError):
    """Drift matrix has an eigenvalue outside the open left half-plane."""


class StepTooLarge(MemlatError):
    """Integrator step too coarse for the system's fastest timescale."""


class CapExceeded(MemlatError):
    """Requested Fock truncation exceeds the configured Hilbert-space cap."""


class DegenerateKernel(MemlatError):
    """Liouvillian nullspace is not one-dimensional; steady state not unique."""


class TruncationLeak(MemlatError):
    """Population at the truncation edge exceeds the configured tolerance."""


class EquivalenceFailed(MemlatError):
    """Generator comparison exceeded the certification tolerance."""


class ZeroCoolRate(MemlatError):
    """Weak-coupling formulas are undefined without laser cooling."""


class NumericalError(MemlatError):
    """A solver postcondition (residual, positivity, trace drift) failed."""


class OutOfRegime(UserWarning):
    """Closed-form result requested outside its validity regime."""


class DetuningSmall(UserWarning):
    """Detuning within ten linewidths; two-level dispersive formulas degrade."""

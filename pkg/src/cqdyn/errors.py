"""Exception hierarchy shared by every module."""


class CqdynError(Exception):
    """Base class for all package errors."""


class ValidationError(CqdynError, ValueError):
    """Input violates a documented precondition."""


class DimensionError(ValidationError):
    """Matrix or vector shapes are incompatible."""


class TruncationError(ValidationError):
    """The Fock-space cutoff is too small for the requested state."""


class UnsupportedError(ValidationError):
    """The requested combination of parameters is not implemented."""


class InsufficientDataError(ValidationError):
    """Not enough samples to perform a fit."""


class NumericError(CqdynError, ArithmeticError):
    """A numerical routine failed or produced an untrustworthy result."""


class AccuracyError(NumericError):
    """Integration drifted beyond tolerance; a smaller step is needed."""


class BlowUpError(NumericError):
    """Classical amplitudes diverged."""


class CollapseError(NumericError):
    """Gaussian wavepacket lost normalizability (Im Sigma <= 0)."""


class NoRootError(NumericError):
    """A bracketing root solve found no sign change."""

    def __init__(self, message, f_lo=None, f_hi=None):
        super().__init__(message)
        self.f_lo = f_lo
        self.f_hi = f_hi

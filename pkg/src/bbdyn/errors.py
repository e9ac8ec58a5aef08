"""Exception hierarchy for bbdyn.

Input/validation errors map to CLI exit code 2, runtime numeric errors to 3.
"""


class BBDynError(Exception):
    """Base class for all bbdyn errors."""


class InputError(BBDynError):
    """Bad user input: malformed problems, configs, dimension clashes."""


class NumericError(BBDynError):
    """Runtime numerical failure in an otherwise valid computation."""


# -- input / validation ------------------------------------------------------

class NotSymmetric(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class BadSpectrum(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class DimensionTooSmall(InputError):
    pass


class IndexOutOfRange(InputError):
    pass


class ProblemFormatError(InputError):
    """Problem file does not match either accepted JSON schema."""


# -- numeric -----------------------------------------------------------------

class ZeroGradient(NumericError):
    """A stepsize was requested at an exactly zero gradient."""


class ZeroInitialGradient(NumericError):
    pass


class ZeroPreviousCoefficients(NumericError):
    pass


class DegenerateSpectrum(NumericError):
    """All eigenvalues coincide; the envelope constants are undefined."""


class InsufficientTrajectory(NumericError):
    pass


class NonPositiveNorm(NumericError):
    pass


class LedgerMismatch(NumericError):
    """Envelope constants were built from different start data than the trajectory."""


class ConvergenceFailure(NumericError):
    """An iterative routine exhausted its budget without meeting tolerance."""

"""Exception and warning types raised across the package.

Every error subclasses a builtin (mostly ``ValueError``) so callers that
only care about the broad category can catch that instead.
"""


class LintSampleError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LintSampleError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateMassError(LintSampleError, ValueError):
    """Sampling was requested from a region carrying zero probability mass."""


class InvalidEdgesError(LintSampleError, ValueError):
    """Grid edge arrays are malformed (too short, non-monotone, non-finite)."""


class InvalidDensityError(LintSampleError, ValueError):
    """A density value is non-finite, or the PDF returned a bad shape."""


class NegativeDensityError(InvalidDensityError):
    """A density value is negative."""


class VertexLimitError(LintSampleError, OverflowError):
    """A structure would need more vertices or dimensions than allowed."""


class SizeMismatchError(LintSampleError, ValueError):
    """A vertex file holds the wrong number of values for its grid."""


class VertexFileError(LintSampleError, ValueError):
    """A vertex or sample file is malformed."""


class DepthLimitError(LintSampleError, ValueError):
    """A tree leaf cannot be split further."""


class SequenceExhaustedError(LintSampleError, OverflowError):
    """A low-discrepancy sequence was asked for more points than it has."""


class WidthMismatchError(LintSampleError, ValueError):
    """A variate stream's row width does not match the structure dimension."""


class ToleranceUnreachedWarning(UserWarning):
    """Tree refinement stopped on its budget before meeting the tolerance."""

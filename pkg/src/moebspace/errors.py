"""Exception hierarchy.

Every error is a ``ValueError`` subclass so callers that only care about
"bad input" can catch one thing.
"""


class MoebiusError(ValueError):
    """Base class for all package errors."""


class StructuralError(MoebiusError):
    """Input has the wrong shape (non-square matrix, n < 2, n above the cap)."""


class SpaceValidationError(MoebiusError):
    """A matrix failed one of the antipodal-space rules.

    The offending :class:`~moebspace.space.ValidationReport` is attached as
    ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnsupportedSizeError(MoebiusError):
    """Operation is undefined for this number of points (e.g. cross-ratio, n < 4)."""


class UnsupportedStructureError(MoebiusError):
    """Antipodal graph lacks the structure an operation needs."""


class CertificationError(MoebiusError):
    """A point could not be certified as a member of M(Z).

    ``trace`` holds the offending flow trace when one exists.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SpecError(MoebiusError):
    """Malformed generator or sample specification."""

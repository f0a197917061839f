"""Exception hierarchy shared across the package."""


class MpacError(Exception):
    """Base class for all mpac errors."""


class NotFoundError(MpacError):
    """A required file or directory is missing."""


class ShapeMismatchError(MpacError):
    """Array shapes are inconsistent (e.g. views with different sample counts)."""


class ParseError(MpacError):
    """A file could not be parsed (e.g. non-numeric CSV cell)."""


class InvalidDataError(MpacError):
    """Input data violates a basic requirement (NaN/Inf entries, bad labels)."""


class InvalidInputError(MpacError):
    """An argument violates a precondition (e.g. non-orthonormal embedding)."""


class NumericalError(MpacError):
    """A numerical routine (factorization, eigensolver, SVD) failed."""

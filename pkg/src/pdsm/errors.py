"""Exception hierarchy shared across the package."""


class PdsmError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(PdsmError, ValueError):
    """An input violates a documented precondition or invariant."""


class FormatError(PdsmError):
    """A file does not conform to the expected on-disk format.

    ``offset`` is the byte offset at which the problem was detected,
    when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedLayoutError(FormatError):
    """The file is well-formed NPY but uses a layout outside the
    supported subset (Fortran order, >2 dims, exotic dtypes)."""


class UnsupportedVersionError(FormatError):
    """The file declares an NPY format version other than 1.0."""

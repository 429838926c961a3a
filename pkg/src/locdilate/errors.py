"""Exception hierarchy.

``StructuralError`` covers malformed input (wrong shapes, mismatched towers,
bad tables).  ``PreconditionError`` means the input is well formed but the
mathematical hypothesis of an operation fails; it carries the certificate
that shows why, so callers can report a witness.
"""


class LocDilateError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(LocDilateError, ValueError):
    pass


class InvalidLevelError(StructuralError):
    pass


class CompatibilityError(StructuralError):
    """A level system violates the nesting relations between two levels."""

    def __init__(self, message, pair=None, offending_norm=None):
        super().__init__(message)
        self.pair = pair
        self.offending_norm = offending_norm


class PreconditionError(LocDilateError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class LbcError(PreconditionError):
    """The boundedness condition fails for some element ``u`` at some level."""

    def __init__(self, message, u=None, level=None, certificate=None):
        super().__init__(message, certificate)
        self.u = u
        self.level = level

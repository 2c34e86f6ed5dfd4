"""Exception hierarchy shared by every layer of the workbench."""


class ResolventError(Exception):
    """Base class for all errors raised by :mod:`resolvent`."""


class DimensionMismatch(ResolventError, ValueError):
    pass


class ModulusMismatch(ResolventError, ValueError):
    pass


class NoSolution(ResolventError):
    """A linear system has no solution over Z/m."""


class EnumerationTooLarge(ResolventError):
    """An element enumeration would exceed the configured guard.

    ``size`` is the number of elements that would have been produced and
    ``where`` names the object (e.g. the resolution level) that overflowed.
    """

    def __init__(self, size, limit, where=""):
        self.size = size
        self.limit = limit
        self.where = where
        loc = f" at {where}" if where else ""
        shown = size if size < 10**18 else f"~2^{int(size).bit_length() - 1}"
        super().__init__(f"enumeration of {shown} elements exceeds guard {limit}{loc}")


class TruncationTooShallow(ResolventError):
    pass


class WindowTooSmall(ResolventError):
    pass


class NotEpi(ResolventError):
    pass


class InvalidHorn(ResolventError):
    pass


class IncompatibleFamily(ResolventError):
    pass


class ConstraintViolation(ResolventError):
    pass


class DegreeOutOfRange(ResolventError, ValueError):
    pass


class InvalidStructure(ResolventError, ValueError):
    """A simplicial object, map or module failed validation on construction."""

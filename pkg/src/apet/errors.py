"""Exception hierarchy shared by the library and the CLI."""


class ApetError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ApetError, ValueError):
    pass


class InvalidBudget(ApetError, ValueError):
    """A token count (basis size, keep count) outside its valid range."""


class SingularGram(ApetError, ArithmeticError):
    """The basis Gram matrix could not be factorized even after jitter."""


class InvalidMatrix(ApetError, ValueError):
    """Empty matrix, wrong rank, or non-finite entries."""


class NonFiniteValue(InvalidMatrix):
    pass


class FormatError(ApetError, ValueError):
    """Base class for malformed matrix files."""


class BadMagic(FormatError):
    pass


class UnsupportedVersion(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class RaggedCsv(FormatError):
    pass


class ZeroMatrix(ApetError, ValueError):
    pass


class PlanMismatch(ApetError, ValueError):
    """A compression plan that does not describe the given matrix."""

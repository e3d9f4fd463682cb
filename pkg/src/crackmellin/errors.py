"""Exception hierarchy shared by all modules."""


class CrackError(Exception):
    """Base class for every error raised by this package."""


class PoleError(CrackError):
    pass


class DomainError(CrackError):
    """Argument outside the strip where an operation is defined."""


class DegenerateError(CrackError):
    pass


class NonConvergence(CrackError):
    pass


class DivergentTransform(CrackError):
    pass


class TailTooFat(CrackError):
    """Spectral data has not decayed by the end of the truncated line."""


class LineMismatch(CrackError):
    pass


class StripViolation(CrackError):
    pass


class GridTooCoarse(CrackError):
    pass


class DegenerateFamily(CrackError):
    pass


class NonIntegrable(CrackError):
    pass


class IncompatibleSource(CrackError):
    """Source term violates the zero-mean compatibility condition."""


class FormatError(CrackError):
    pass


class NonMonotoneGrid(CrackError):
    pass


class TailFitFailure(CrackError):
    pass


class ContourPoleClash(CrackError):
    pass


class InsufficientRange(CrackError):
    pass


class ConfigError(CrackError):
    pass


# Alias used by solver-facing code paths.
SpecialFunctionDomain = DomainError

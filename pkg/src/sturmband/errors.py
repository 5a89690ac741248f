"""Exception hierarchy.

Every error raised by the library derives from :class:`SturmbandError`; the
CLI maps :class:`ConfigError` subclasses to exit status 2.
"""


class SturmbandError(Exception):
    """Base class for all library errors."""


class ConfigError(SturmbandError, ValueError):
    """Invalid user input (frequency, coupling, precision, ...)."""


class CFSyntaxError(ConfigError):
    pass


class InvalidQuotient(ConfigError):
    pass


class UnsupportedAperiodic(ConfigError):
    pass


class CouplingTooSmall(ConfigError):
    pass


class TruncationExceeded(SturmbandError):
    """A truncated frequency was asked for a quotient it does not have."""


class InvalidLabel(SturmbandError, ValueError):
    pass


class DomainViolation(SturmbandError, ValueError):
    pass


class BracketFailure(SturmbandError):
    """Child trace does not exceed 2 in modulus with opposite signs at the bracket ends."""

    def __init__(self, message, path=None):
        if isinstance(path, tuple):
            path = "-".join(path)
        super().__init__(message if not path else f"{message} (path {path})")
        self.path = path


class PrecisionExhausted(SturmbandError):
    pass


class InadmissiblePath(SturmbandError, ValueError):
    pass


class ZeroDerivative(SturmbandError):
    pass


class NotContractive(SturmbandError):
    pass


class InsufficientDepth(SturmbandError):
    pass


class OrderUnavailable(SturmbandError):
    pass


class NoRootInUnitInterval(SturmbandError):
    pass


class DegenerateSingleBand(UserWarning):
    """A one-band generation has no pre-dimension in (0, 1]; 0 is returned."""

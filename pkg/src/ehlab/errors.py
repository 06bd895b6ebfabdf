"""Exception hierarchy shared by every module.

Every error raised on purpose derives from :class:`ArtifactError`, which the
CLI maps to exit code 1.
"""


class ArtifactError(Exception):
    """Base class for all computation errors."""


class InvalidLimit(ArtifactError, ValueError):
    pass


class LimitExceeded(ArtifactError, ValueError):
    pass


class ModeMismatch(ArtifactError, TypeError):
    pass


class InvalidArity(ArtifactError, ValueError):
    pass


class InvalidModulus(ArtifactError, ValueError):
    pass


class InvalidPrime(ArtifactError, ValueError):
    pass


class NoSuchElement(ArtifactError, ValueError):
    pass


class OutOfRange(ArtifactError, ValueError):
    pass


class WrongKind(ArtifactError, TypeError):
    pass


class NotPrimitive(ArtifactError, ValueError):
    pass


class NotCoprime(ArtifactError, ValueError):
    pass


class EmptyWindow(ArtifactError, ValueError):
    pass


class InvalidParameter(ArtifactError, ValueError):
    pass


class GridTooCoarse(ArtifactError, ValueError):
    pass


class WindowTooSmall(ArtifactError, ValueError):
    pass


class Overflow(ArtifactError, OverflowError):
    pass


class BadSeed(ArtifactError, ValueError):
    pass


class OutOfDomain(ArtifactError, ValueError):
    pass


class IdentityViolation(ArtifactError, AssertionError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ShiftTooLarge(ArtifactError, ValueError):
    pass


class MissingIdentity(ArtifactError, ValueError):
    pass


class NotProper(ArtifactError, ValueError):
    pass

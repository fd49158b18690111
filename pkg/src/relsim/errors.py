"""Exception hierarchy.

Every error raised by relsim derives from :class:`RelsimError`.  The two
intermediate classes decide the CLI exit code: :class:`ValidationError`
(bad input, exit 2) and :class:`CapabilityError` (request exceeds what the
simulator can do, exit 3).
"""


class RelsimError(Exception):
    """Base class for all relsim errors."""


class ValidationError(RelsimError, ValueError):
    """Input violates a documented precondition."""


class CapabilityError(RelsimError, RuntimeError):
    """Request is well formed but beyond a configured or numerical limit."""


class InvalidDimension(ValidationError):
    pass


class TooLarge(CapabilityError):
    pass


class SelfLoopRejected(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownVertex(ValidationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class InvalidStrength(ValidationError):
    pass


class InvalidAmplitude(ValidationError):
    pass


class NotConnected(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class SolverError(CapabilityError):
    pass


class TooLargeForEnumeration(CapabilityError):
    pass


class Unreachable(ValidationError):
    pass


class ApparatusNotInitialized(ValidationError):
    pass


class InvalidSubset(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class LocalityViolation(RelsimError):
    """A relation appeared between parties with no common related witness."""

    def __init__(self, message, pair=None, tick=None):
        self.pair = pair
        self.tick = tick
        super().__init__(message)


class InvalidGeometry(ValidationError):
    pass


class ConfigError(ValidationError):
    pass

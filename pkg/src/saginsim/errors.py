"""Exception types shared across the simulator and trainer."""


class SaginError(Exception):
    """Base class for all package errors."""


class ConfigSyntax(SaginError):
    """Raised when a config document cannot be parsed."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = "line %d: %s" % (line_no, message)
        super().__init__(message)


class ConfigInvalid(SaginError):
    """Raised when a parsed config violates a validation rule.

    Carries the offending field name so callers can report it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__("%s: %s" % (field, message))


class DegenerateGeometry(SaginError):
    """Zero-distance or otherwise ill-posed link geometry."""


class InvalidAllocation(SaginError):
    """Nonpositive bandwidth or power handed to a rate computation."""


class LinkDown(SaginError):
    """A link rate required by the service pipeline is not positive."""


class InvalidAction(SaginError):
    """Action component outside its physical envelope."""


class CodecShape(SaginError):
    """Raw action vector has the wrong length or non-finite entries."""


class EpisodeFinished(SaginError):
    """step() called after the horizon was reached without a reset."""


class SamplerDiverged(SaginError):
    """Non-finite values appeared during reverse diffusion sampling."""


class InvalidWeight(SaginError):
    """Negative or non-finite sample weight handed to a weighted loss."""


class NonFiniteGradient(SaginError):
    """An optimizer step saw a NaN/Inf gradient or loss."""

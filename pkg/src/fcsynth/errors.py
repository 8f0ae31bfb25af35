"""Exception hierarchy shared by every stage of the pipeline."""


class FcSynthError(Exception):
    """Base class for all package errors."""


class ValidationError(FcSynthError, ValueError):
    """Input data violates a documented invariant."""


class ConfigParseError(ValidationError):
    """A schema, pools or run-config file could not be parsed."""


class UnknownFunctionError(ValidationError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class CapacityExceededError(ValidationError):
    pass


class EmptyPoolError(ValidationError):
    pass


class RoutingError(ValidationError):
    """The oracle router could not map a question back to a call."""


class NoActionMatchError(RoutingError):
    pass


class AmbiguousActionError(RoutingError):
    pass


class CallParseError(FcSynthError, ValueError):
    """A predicted call string is not a well-formed call.

    ``position`` is the character offset where parsing gave up.
    """

    def __init__(self, reason, position=0):
        super().__init__(f"{reason} (at offset {position})")
        self.reason = reason
        self.position = position


class TransportError(FcSynthError):
    """The chat-completion endpoint stayed unreachable after all retries."""


class MalformedResponseError(FcSynthError):
    pass

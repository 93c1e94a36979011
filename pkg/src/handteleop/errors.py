"""Exception types shared across the package."""


class HandTeleopError(Exception):
    """Base class for all package errors."""


class SingularMatrix(HandTeleopError):
    pass


class InvalidRotation(HandTeleopError):
    pass


class CollinearAnchors(HandTeleopError):
    pass


class AnchorsNotPerpendicular(HandTeleopError):
    pass


class ScaleMismatch(HandTeleopError):
    pass


class NonMonotonicTimestamp(HandTeleopError):
    def __init__(self, detail="", line=None):
        self.line = line
        super().__init__(detail or f"non-monotonic timestamp at line {line}")


class MissingKeypoint(HandTeleopError):
    pass


class BadConfig(HandTeleopError):
    pass


class NotCalibrated(HandTeleopError):
    pass


class SchedulerStopped(HandTeleopError):
    pass


class UnknownTicket(HandTeleopError):
    pass


class ReplayExhausted(HandTeleopError):
    pass


class CorruptEpisode(HandTeleopError):
    pass


class InvariantViolation(HandTeleopError):
    def __init__(self, detail, index=None):
        self.index = index
        super().__init__(detail)


class IoFailure(HandTeleopError):
    pass


class SchemaVersionUnsupported(HandTeleopError):
    pass


class MalformedLine(HandTeleopError):
    def __init__(self, line, detail=""):
        self.line = line
        super().__init__(f"malformed line {line}" + (f": {detail}" if detail else ""))


class DimensionMismatch(HandTeleopError):
    pass


class EmptyInput(HandTeleopError):
    pass


class DuplicateId(HandTeleopError):
    pass


class BadN(HandTeleopError):
    pass


class EpisodeMissing(HandTeleopError):
    pass


class ProtocolViolation(HandTeleopError):
    def __init__(self, state, msg_type):
        self.state = state
        self.msg_type = msg_type
        super().__init__(f"message '{msg_type}' not allowed in state '{state}'")

"""Error taxonomy shared by every trace and the controller."""


class TraceError(Exception):
    """Base class for every failure the engine can signal."""


class InvalidParameterError(TraceError):
    """A user-supplied value (target, port, proxy, pattern, ...) is not usable."""


class NoConnectivityError(TraceError):
    """The connectivity check against the reliable URL failed."""


class RemoteUnreachableError(TraceError):
    """A remote endpoint could not be reached at the transport level."""


class ProtocolViolationError(TraceError):
    """The peer answered, but not in the expected protocol shape."""


class RateLimitedError(TraceError):
    """A client-side request budget would be exceeded."""


class ConfigMissingError(TraceError):
    """A required configuration value or file is absent."""


class ExportIoError(TraceError):
    """Writing an export file failed."""

    REASON_MISSING_PATH = "path does not exists"
    REASON_NO_PERMISSION = "no writing permission"

    def __init__(self, reason: str, path: str):
        super().__init__(f"{reason}: {path}")
        self.reason = reason
        self.path = path

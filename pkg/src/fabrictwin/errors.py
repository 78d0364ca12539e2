"""Error types shared across the package.

Every failure carries a stable machine-readable ``code`` string so that the
HTTP service and the CLI can surface the same vocabulary callers test
against, independent of the human-readable message.
"""


class TwinError(Exception):
    """Base error with a stable code string."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class TopologyError(TwinError):
    pass


class CompositionError(TwinError):
    pass


class PerfError(TwinError):
    pass


class CalibrationError(TwinError):
    pass


class TelemetryError(TwinError):
    pass


class ServiceError(TwinError):
    pass

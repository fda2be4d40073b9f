"""Exception hierarchy shared by every module."""


class MLMRError(Exception):
    """Base class for all errors raised by this package."""


class SingularSystem(MLMRError):
    pass


class NotComputable(MLMRError):
    pass


class CapExceeded(MLMRError):
    pass


class NotInitialized(MLMRError):
    pass


class AllArmsOptimal(MLMRError):
    pass


class ThresholdViolated(MLMRError):
    pass


class DivergenceCapExceeded(MLMRError):
    pass


class ValidationError(MLMRError):
    pass


class ParseError(MLMRError):
    """Config could not be parsed; carries the offending line or field."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field

"""Exception hierarchy shared by all ddmpc modules."""


class DDMPCError(Exception):
    """Base class for errors raised by ddmpc."""


class ShapeError(DDMPCError, ValueError):
    """Array dimensions are inconsistent."""


class WindowTooDeepError(ShapeError):
    """Requested Hankel depth exceeds the sequence length."""


class InsufficientHistoryError(DDMPCError, ValueError):
    """Fewer past samples than the state-order bound requires."""


class ConfigError(DDMPCError, ValueError):
    """Invalid or missing configuration value."""


class DataQualityError(DDMPCError):
    """Offline data does not excite the system sufficiently."""


class PreconditionError(DDMPCError, ValueError):
    """An operation was called outside its documented domain."""


class ValidationError(DDMPCError, ValueError):
    """User-supplied sequence violates a declared bound."""

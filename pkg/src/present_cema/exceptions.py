"""Exception hierarchy shared by every module of the toolkit."""


class CemaError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(CemaError, ValueError):
    """Invalid parameters: framing, bands, synthesis config, byte index."""


class DataError(CemaError, ValueError):
    """Input data that violates an invariant (non-finite, mismatched, empty)."""


class FormatError(DataError):
    """Bytes that are not an EMTS trace-set file."""


class UnsupportedVersionError(FormatError):
    """EMTS file whose version field is not understood by this reader."""


class CorruptionError(FormatError):
    """EMTS payload shorter or longer than its header declares."""


class UndefinedCorrelationError(CemaError, ArithmeticError):
    """Pearson correlation requested on a constant vector."""

"""Exception hierarchy shared by every module."""


class LabelWaveError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LabelWaveError, ValueError):
    """Invalid configuration or mismatched shapes/lengths."""


class ProtocolError(LabelWaveError):
    """A stateful object was driven out of order."""


class InsufficientDataError(LabelWaveError, ValueError):
    pass


class UndefinedCorrelationError(LabelWaveError, ValueError):
    """Correlation requested for a constant (zero-variance) input."""


class DataError(LabelWaveError, ValueError):
    """Input data is non-finite or otherwise unusable."""


class ParseError(LabelWaveError, ValueError):
    """A file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NumericError(LabelWaveError, ArithmeticError):
    """Non-finite values appeared during training or evaluation."""

    def __init__(self, message, epoch=None):
        self.epoch = epoch
        if epoch is not None:
            message = f"{message} at epoch {epoch}"
        super().__init__(message)

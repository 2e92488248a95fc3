"""Exception types shared across the simulator."""


class QFileNetError(Exception):
    """Base class for all simulator errors."""


class ZeroProbability(QFileNetError):
    """A projection landed on a branch with (numerically) zero weight."""

    def __init__(self, probability: float):
        super().__init__(f"projection probability {probability:.3e} is zero")
        self.probability = probability


class InvalidAncilla(QFileNetError):
    pass


class LengthMismatch(QFileNetError, ValueError):
    pass


class FileLengthMismatch(LengthMismatch):
    pass


class CellConsumed(QFileNetError):
    """A quantum-file cell was addressed after a session already used it."""


class PoolEmpty(QFileNetError):
    def __init__(self, message: str = "singlet pool is empty", hop: int | None = None):
        if hop is not None:
            message = f"{message} (hop {hop})"
        super().__init__(message)
        self.hop = hop


class EmptyKey(QFileNetError, ValueError):
    pass


class DegenerateSample(QFileNetError, ValueError):
    pass


class OutputTooLong(QFileNetError, ValueError):
    pass


class ParseError(QFileNetError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RangeError(QFileNetError, ValueError):
    pass

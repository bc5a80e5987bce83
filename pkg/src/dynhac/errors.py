"""Exception types shared across the package."""


class DynhacError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(DynhacError):
    """Design and response (or other paired inputs) disagree on length."""


class RankDeficient(DynhacError):
    """Design matrix is numerically rank deficient."""


class SingularQ(DynhacError):
    """Moment matrix cannot be inverted."""


class NonPsdLrv(DynhacError):
    """Long-run variance estimate implies a negative coefficient variance."""


class BandwidthOutOfRange(DynhacError):
    """Truncation lag or cosine count outside its admissible range."""


class InsufficientData(DynhacError):
    """Not enough observations to build or fit the requested design."""


class InsufficientHistory(DynhacError):
    """Forecast requires more trailing observations than supplied."""


class ZeroSse(DynhacError):
    """Exact fit: sum of squared errors is zero, log-SSE criteria undefined."""


class ExplosiveSpec(DynhacError):
    """Process specification violates covariance stationarity."""


class ParseError(DynhacError):
    """Input file could not be parsed; carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidFlagValue(DynhacError):
    """Command-line flag value outside its admissible set."""

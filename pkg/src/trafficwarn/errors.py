"""Exception hierarchy shared by all stages."""


class TrafficWarnError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TrafficWarnError, ValueError):
    """Invalid configuration: bad shapes, out-of-range parameters, broken references."""


class DataError(TrafficWarnError, ValueError):
    """Input data that cannot be processed (malformed rows, empty series)."""


class NumericalError(TrafficWarnError, ArithmeticError):
    """A numerical routine failed, e.g. a singular innovation covariance."""


class DomainError(TrafficWarnError, ValueError):
    """Argument outside the mathematical domain of a model formula."""


class UndefinedMetricError(TrafficWarnError, ValueError):
    """A metric is undefined for the given inputs (e.g. no ground truth)."""


class TrainingError(TrafficWarnError, RuntimeError):
    """Training diverged (NaN/inf loss)."""

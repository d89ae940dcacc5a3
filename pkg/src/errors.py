class ToolkitError(Exception):
    """
    Base error for every failure the toolkit reports on purpose
    """

    exit_code = 1


class DataError(ToolkitError):
    """
    Ingestion or preprocessing failure (missing file, unparseable cell, bad labels)
    """

    exit_code = 3


class ValidationError(ToolkitError):
    """
    An operation was called outside its preconditions
    """


class InfeasibleError(ToolkitError):
    """
    The estimator cannot be computed on this data (p >= h, singular covariance, degenerate projections)
    """


class ConfigError(ToolkitError):
    """
    Run configuration problem, reported with the offending line when known
    """

    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownMethodError(ConfigError):
    pass

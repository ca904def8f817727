"""Exception hierarchy shared across the package."""


class QSpillError(ValueError):
    """Base class for all domain errors raised by qspill."""


class DataError(QSpillError):
    """Malformed or degenerate input data."""


class EstimationError(QSpillError):
    """A model could not be estimated on the given window."""


class RankDeficiencyError(EstimationError):
    pass


class ConvergenceError(EstimationError):
    pass


class ConnectednessError(QSpillError):
    pass


class PortfolioError(QSpillError):
    pass


class ConfigError(QSpillError):
    pass

class RiskADError(Exception):
    """Base class for every error raised by riskad."""


class DomainError(RiskADError, ValueError):
    """Raised for non-finite or out-of-domain numeric input."""


class ConditionError(RiskADError):
    """A loss does not satisfy the identity an estimator depends on."""


class MissingSourceError(RiskADError):
    """An estimator needs a sample source (P, N or U) that is empty."""


class ConfigError(RiskADError, ValueError):
    """Invalid configuration value (priors, mixing weight, grids, ...)."""


class TrainingError(RiskADError):
    """Training diverged (objective became NaN or infinite)."""

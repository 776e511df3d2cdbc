"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid hyperparameters, shapes or grid positions."""


class DomainError(ValueError):
    """A quantity is evaluated outside the domain where it is defined."""


class TrainingError(RuntimeError):
    """Score-matching training diverged."""

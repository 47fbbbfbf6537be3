"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration violates one of its invariants."""


class SchemaError(ValueError):
    """A document does not conform to its schema.

    ``path`` locates the offending field, e.g. ``users[3].channel_gain_sq``.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class ModelError(ValueError):
    """A PSNR table is malformed or not monotone."""


class DomainError(ValueError):
    """A query falls outside the domain a model is defined on."""


class NotConverged(RuntimeError):
    """An iterative solver hit its iteration limit.

    ``best_bound`` carries the best dual bound reached so far.
    """

    def __init__(self, message, best_bound=None):
        super().__init__(message)
        self.best_bound = best_bound


class RoundingFailed(RuntimeError):
    """A fractional LP solution could not be turned into a certified integral assignment."""

"""Exception hierarchy shared by all corel modules."""


class CorelError(Exception):
    """Base class for every error raised by corel."""


class InvalidSequenceError(CorelError, ValueError):
    pass


class InvalidDistributionError(CorelError, ValueError):
    pass


class InvalidWeightingError(CorelError, ValueError):
    pass


class DimensionError(CorelError, ValueError):
    pass


class SpaceTooLargeError(CorelError):
    """Raised by enumeration oracles when A**L exceeds their budget."""


class IncompleteTableError(CorelError, KeyError):
    pass


class FactorizationError(CorelError):
    """Gram matrix not positive definite even after jitter."""


class UnfittableModelError(CorelError):
    pass


class InvalidReferenceError(CorelError, ValueError):
    pass


class UndefinedMetricError(CorelError, ValueError):
    pass


class InvalidCorpusError(CorelError, ValueError):
    pass


class InvalidInputError(CorelError, ValueError):
    pass


class OptimizationFailedError(CorelError):
    pass


class BudgetExhausted(CorelError):
    """The black box refused an evaluation beyond its budget."""


class ConfigError(CorelError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field

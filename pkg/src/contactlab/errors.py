"""Exception hierarchy shared by all modules."""


class CapabilityError(RuntimeError):
    """The model lacks the structure an operation needs."""


class NumericalRejection(ValueError):
    """Input is outside the regime where a computation is meaningful."""


class ResolutionError(NumericalRejection):
    """Products of the inputs would alias on the grid."""


class BlowupDomainError(NumericalRejection):
    """Characteristics have crossed, or the flow map stopped being a diffeomorphism."""


class DegeneratePlaneError(NumericalRejection):
    """Two stream functions span a (numerically) degenerate plane."""


class ConfigError(ValueError):
    """Malformed experiment or model configuration."""

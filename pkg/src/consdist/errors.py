"""Exception types raised across the package."""


class ConsDistError(Exception):
    """Base class for every error raised by consdist."""


class DimMismatch(ConsDistError, ValueError):
    pass


class ZeroDirection(ConsDistError, ValueError):
    """A projection direction has (near) zero norm."""


class ZeroNorm(ConsDistError, ValueError):
    """A feature has (near) zero norm where a cosine similarity is needed."""


class NonFinite(ConsDistError, ValueError):
    pass


class MissingResidual(ConsDistError, KeyError):
    pass


class AzimuthOutOfRange(ConsDistError, ValueError):
    pass


class EmptyViews(ConsDistError, ValueError):
    pass


class TooFewViews(ConsDistError, ValueError):
    pass


class DegenerateDistribution(ConsDistError, ValueError):
    pass


class ConfigInvalid(ConsDistError, ValueError):
    pass


class ParseError(ConfigInvalid):
    """Malformed config file. ``line`` and ``key`` locate the problem when known."""

    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key


class ValidationError(ConfigInvalid):
    """A config value violates a constraint; ``key`` names the offending field."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key

"""Exception hierarchy shared by every module of the package."""


class WeightedPremiumError(Exception):
    """Base class for all errors raised by this package."""


class DivergentExpectation(WeightedPremiumError):
    """The truncated integral keeps growing as the truncation point is doubled."""


class QuadratureFailure(WeightedPremiumError):
    """The error estimate stays above tolerance after the refinement budget is spent."""


class DivergentPremium(DivergentExpectation):
    """E[X w(lambda, X)] (or the normalizer) is infinite: lambda is outside the domain."""


class ZeroNormalizer(WeightedPremiumError):
    """E[w(lambda, X)] is zero, so the weighted distribution is undefined."""


class GridDegenerate(WeightedPremiumError):
    pass


class AllZeroWeights(WeightedPremiumError):
    pass


class DomainEmpty(WeightedPremiumError):
    pass


class MaxIterExceeded(WeightedPremiumError):
    pass


class ValidationError(WeightedPremiumError, ValueError):
    """A parameter violates its positivity or ordering constraint."""


class SpecParseError(WeightedPremiumError, ValueError):
    """A distribution or weight spec string could not be parsed.

    ``position`` is the 0-based character offset where parsing failed.
    """

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class LossFileError(WeightedPremiumError):
    """An empirical loss file is missing or contains an invalid line."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line

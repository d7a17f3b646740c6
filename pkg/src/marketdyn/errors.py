"""Exception hierarchy shared by all marketdyn modules."""


class MarketDynError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(MarketDynError, ValueError):
    """A parameter is outside its allowed domain (e.g. window = 0)."""


class LengthError(MarketDynError, ValueError):
    """A series is too short, or two series have mismatched lengths."""


class ValidationError(MarketDynError, ValueError):
    """Data violates a structural invariant (e.g. non-positive price)."""


class ParseError(MarketDynError, ValueError):
    """A file could not be parsed (bad header, malformed row)."""


class RegimeError(MarketDynError, RuntimeError):
    """A perturbation left the linear-response regime before the fit window closed."""


class FitError(MarketDynError, ValueError):
    """Not enough usable samples (or degenerate samples) for a fit."""


class ConsistencyError(MarketDynError, RuntimeError):
    """An internal identity failed (negative variance radicand, zero-variance Sharpe)."""

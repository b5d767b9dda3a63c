"""Exception types shared across the package."""


class HazboostError(Exception):
    """Base class for errors raised by hazboost."""


class ValidationError(HazboostError):
    """Bad input data, schema violations, or configuration errors."""


class NumericError(HazboostError):
    """Numeric failure (e.g. a dominated thinning bound that is exceeded)."""

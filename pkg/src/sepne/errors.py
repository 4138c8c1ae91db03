"""Exception types shared across the package."""


class SepneError(Exception):
    """Base class for all package errors."""


class DataError(SepneError, ValueError):
    """Malformed or inconsistent input data."""


class UnsupportedFeatureError(DataError):
    """Input uses a feature that is deliberately not supported (e.g. edge weights)."""


class NumericalError(SepneError, ArithmeticError):
    """A linear-algebra routine failed on inputs that should have been well posed."""

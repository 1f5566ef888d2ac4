"""Exception hierarchy shared by every module."""


class IncompleteInferError(Exception):
    """Base class for all package errors."""


class DomainError(IncompleteInferError, ValueError):
    """A set or parameter lies outside the carrier or model domain."""


class CarrierMismatchError(IncompleteInferError, ValueError):
    """Two objects that must share a carrier do not."""


class SizeError(IncompleteInferError, ValueError):
    """An exhaustive enumeration would exceed its budget."""


class ConfigError(IncompleteInferError, ValueError):
    """Invalid tuning parameter or run configuration."""


class DataError(IncompleteInferError, ValueError):
    """Malformed or inconsistent sample data."""


class NumericError(IncompleteInferError, ArithmeticError):
    """A numerical routine failed beyond its tolerance."""

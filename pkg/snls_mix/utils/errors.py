"""
Exception hierarchy shared across snls-mix modules
"""


class SnlsMixError(Exception):
    """Base class for all snls-mix errors"""
    pass


class DimensionError(SnlsMixError):
    """Raised when array sizes, grid sizes or mode cutoffs are inconsistent"""
    pass


class ParameterError(SnlsMixError):
    """Raised when a numerical parameter is outside its admissible range"""
    pass

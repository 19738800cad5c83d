"""Exception hierarchy shared by every module."""


class ShrinkCovError(Exception):
    """Base class for all package errors."""


class DimError(ShrinkCovError, ValueError):
    """Operand shapes do not agree."""


class ArgError(ShrinkCovError, ValueError):
    """An argument is outside the operation's domain."""


class NumericalError(ShrinkCovError, ArithmeticError):
    """A numerical routine failed to converge."""


class DegenerateTarget(ShrinkCovError, ArithmeticError):
    """The shrinkage system is singular (sample matrix proportional to the target)."""


class InsufficientData(ShrinkCovError, ValueError):
    """Too few observations for the requested statistic."""


class ConfigError(ShrinkCovError, ValueError):
    """Invalid experiment or command configuration."""


class ParseError(ShrinkCovError, ValueError):
    """Malformed input file."""

"""Exception taxonomy shared by all modules.

The CLI maps DataError/ConfigError to exit code 2 (usage/data problems)
and everything else to exit code 1.
"""


class SedformerError(Exception):
    """Base class for errors raised by this package."""


class DataError(SedformerError):
    """Malformed or inconsistent input data."""


class ConfigError(SedformerError):
    """Invalid configuration value or combination."""


class ShapeError(SedformerError):
    """Tensor dimension mismatch."""


class NumericsError(SedformerError):
    """NaN/Inf surfaced during computation; the step must abort."""

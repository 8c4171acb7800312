"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/configuration problems exit 2,
data and shape problems exit 3.
"""


class TgdError(Exception):
    """Base class for all package errors."""


class ShapeError(TgdError):
    """Array rank or extent incompatible with the requested operation."""


class ConfigError(TgdError):
    """Invalid parameter combination (usage-level error)."""


class DataError(TgdError):
    """Malformed input file; message names the file and byte offset."""


class OperatorNotFoundError(TgdError):
    """Unknown preset or operator name."""


class DivergenceError(TgdError):
    """Optimization diverged past the guard threshold."""

"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific type that applies rather than bare ValueError.
"""


class ActmatchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ActmatchError, ValueError):
    """A configuration value is out of range or inconsistent."""


class DataFormatError(ActmatchError, ValueError):
    """An input file is malformed; the message names the byte or line offset."""


class ConvergenceError(ActmatchError, RuntimeError):
    """The iterative encoder failed to reach tolerance within its iteration cap.

    Carries ``objective``, the objective value at the last iterate, so callers
    can report how far the solve got.
    """

    def __init__(self, message: str, objective: float):
        super().__init__(message)
        self.objective = objective

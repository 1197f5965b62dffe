"""Exception types shared across the package.

The CLI maps ValidationError to exit code 2 and the runtime errors to exit
code 3.
"""


class ValidationError(ValueError):
    """Bad parameters or malformed inputs, detected before any work starts."""


class UndecodablePatternError(RuntimeError):
    """The available set of worker outputs does not determine the data."""


class ConditioningError(RuntimeError):
    """A linear system was too ill-conditioned (or singular) to solve."""


class DivergenceError(RuntimeError):
    """Gradient descent residual grew far past its running minimum."""


class FetchError(KeyError):
    """A raw data block requested by a worker-side encoder is missing."""

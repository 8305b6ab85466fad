"""
This module provides the exception classes.
"""

__all__ = [
    'Error',
    'ConfigError',
    'CodecNotAvailable',
    'UsageError',
    'WhiteningFailed',
    'OutputError',
    'TimingError',
]


class Error(Exception):
    """Base class of every exception raised by `gfra`."""
    pass


class ConfigError(Error, ValueError):
    """
    Invalid configuration: a field out of range, an unknown key, or arrays
    whose dimensions disagree with the configuration.
    """
    pass


class CodecNotAvailable(ConfigError):
    """The configured codec name is not registered."""

    def __init__(self, name: str):
        self.name = name
        """The requested codec name."""

    def __repr__(self):
        return f'<CodecNotAvailable, name={self.name!r}>'

    def __str__(self):
        return self.__repr__()


class UsageError(Error, ValueError):
    """An operation was called outside its precondition."""
    pass


class WhiteningFailed(Error, ArithmeticError):
    """
    The sample covariance of an ICA input is rank deficient.

    ```py
    try:
        xw, _ = whiten(x)
    except WhiteningFailed as e:
        print(e.eigenvalues)
    ```
    """

    def __init__(self, eigenvalues):
        self.eigenvalues = eigenvalues
        """Eigenvalues of the offending covariance, ascending."""

    def __repr__(self):
        return (f'<WhiteningFailed, min={self.eigenvalues[0]:.3g}, '
                f'max={self.eigenvalues[-1]:.3g}>')

    def __str__(self):
        return self.__repr__()


class OutputError(Error, IOError):
    """The output location cannot be written."""
    pass


class TimingError(Error):
    """A blocking entry point was called from inside a running event loop."""
    pass

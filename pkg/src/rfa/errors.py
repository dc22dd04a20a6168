"""Exception hierarchy shared by the library and the command-line front end."""


class RFAError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 4


class ConfigError(RFAError, ValueError):
    """Invalid configuration or design parameters."""

    exit_code = 2


class InputError(RFAError, ValueError):
    """Malformed or degenerate input data."""

    exit_code = 2


class NumericalError(RFAError, ArithmeticError):
    """A linear system was singular or too ill-conditioned to solve."""

    exit_code = 3

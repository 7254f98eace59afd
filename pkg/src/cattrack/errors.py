"""Exception types shared across the package."""


class CattrackError(Exception):
    """Base class for package errors."""


class ConfigError(CattrackError, ValueError):
    """Invalid configuration value or unusable parameter combination."""


class NumericalError(CattrackError, RuntimeError):
    """A trajectory produced non-finite amplitudes or otherwise blew up."""


class TruncationError(NumericalError):
    """State weight leaked into the top of the Fock ladder."""

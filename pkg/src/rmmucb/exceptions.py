"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A numeric argument is outside its admissible range."""


class MomentDoesNotExistError(ValueError):
    """The requested absolute moment of a reward distribution diverges."""


class ConfigurationError(ValueError):
    """An experiment configuration is inconsistent or names unknown items."""

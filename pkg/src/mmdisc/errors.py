"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside the documented domain of an operation."""


class UnsupportedSpaceError(ValueError):
    """The operation has no construction for the requested space."""


class UnsupportedCombinationError(ValueError):
    """An experiment combines a space and a sampler that cannot run together."""


class ConfigError(ValueError):
    """An experiment configuration is invalid.

    The offending field is available as ``field``.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field

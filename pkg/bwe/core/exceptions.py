class BweError(Exception):
    """Base class for every error raised by the bandwidth-extension engine."""


class FormatError(BweError):
    """A container or binary artifact is malformed or truncated."""


class WavFormatError(FormatError):
    """The file is not a readable RIFF/WAV container (bad or truncated header)."""


class UnsupportedEncodingError(BweError):
    """The container is valid but its sample encoding is not supported."""


class ContractError(BweError, ValueError):
    """A precondition of an operation was violated by its caller."""


class ConfigError(BweError, ValueError):
    """The run configuration is invalid or incomplete."""


class NumericalError(BweError, RuntimeError):
    """A numerical routine failed to produce a finite answer."""

"""Exception hierarchy. Each category maps to a CLI exit code."""


class NoiseCommError(Exception):
    exit_code = 1


class DomainError(NoiseCommError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 4


class DegenerateFitError(DomainError):
    pass


class ConfigError(NoiseCommError):
    exit_code = 2


class ParseError(NoiseCommError):
    exit_code = 3


class NoPacketError(NoiseCommError):
    """Raised when no valid packet could be found or the preamble is corrupt."""

    exit_code = 5

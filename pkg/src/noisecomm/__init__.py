"""Simulation and DSP toolkit for wireless links built on modulated Johnson noise."""

from .errors import ConfigError, DegenerateFitError, DomainError, NoiseCommError, NoPacketError, ParseError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateFitError",
    "DomainError",
    "NoPacketError",
    "NoiseCommError",
    "ParseError",
]

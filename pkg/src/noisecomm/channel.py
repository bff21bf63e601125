"""Free-space link between transmitter and receiver antennas.

The received contrast is the transmit-side contrast scaled by the Friis
power ratio. The transmit-side contrast in receiver SDR units is not
observable directly; it is a per-scenario link constant, usually anchored
so that one measured (rate, distance, BER) point is reproduced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class LinkBudget:
    distance: float
    tx_gain_dbi: float = 13.6
    rx_gain_dbi: float = 13.6
    frequency_hz: float = 1.42e9

    def __post_init__(self):
        if not self.distance > 0:
            raise DomainError("distance must be > 0")
        if not self.frequency_hz > 0:
            raise DomainError("frequency must be > 0")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def path_factor(link: LinkBudget) -> float:
    """Friis power ratio Gt * Gr * (lambda / (4 pi d))^2."""
    gt = db_to_linear(link.tx_gain_dbi)
    gr = db_to_linear(link.rx_gain_dbi)
    return gt * gr * (link.wavelength / (4.0 * math.pi * link.distance)) ** 2


def received_contrast(tx_contrast: float, link: LinkBudget) -> float:
    if tx_contrast < 0:
        raise DomainError("tx_contrast must be >= 0")
    return tx_contrast * path_factor(link)

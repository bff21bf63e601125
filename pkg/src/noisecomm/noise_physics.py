"""Johnson noise of a terminating load and the voltage divider it forms with
the LNA input.

Only the resistive part of a load enters the calculations. Impedances are
the values measured at the 1.42 GHz operating frequency; there is no
frequency-dependent model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    boltzmann_k: float = 1.380649e-23  # J/K, exact SI value


CONSTANTS = PhysicalConstants()

LNA_INPUT_OHMS = 50.0
OPEN_OHMS = 17000.0
SHORT_OHMS = 0.254


def _domain(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


@dataclass(frozen=True)
class LoadProfile:
    """A terminating load seen by the receiver.

    ``measured_msv`` optionally carries the receiver-side variance observed
    on the bench for this load (SDR units squared). Presets fill it from the
    measured calibration table so experiments can be driven by either the
    physical model or the bench values.
    """

    name: str
    impedance_re: float
    impedance_im: float = 0.0
    physical_temp: float = 296.0
    measured_msv: float | None = None

    def __post_init__(self):
        _domain(self.impedance_re >= 0, f"{self.name}: Re(Z) must be >= 0")
        _domain(self.physical_temp >= 0, f"{self.name}: temperature must be >= 0")


@dataclass(frozen=True)
class DividerModel:
    source_r: float
    shunt_r: float = LNA_INPUT_OHMS

    def __post_init__(self):
        _domain(self.source_r + self.shunt_r > 0, "source_r + shunt_r must be > 0")


def johnson_msv(load: LoadProfile, bandwidth: float) -> float:
    """Open-circuit mean-squared Johnson voltage 4kTBR in V^2."""
    _domain(bandwidth > 0, "bandwidth must be > 0")
    return 4.0 * CONSTANTS.boltzmann_k * load.physical_temp * bandwidth * load.impedance_re


def available_noise_power(temp: float, bandwidth: float) -> float:
    """Noise power kTB (W) delivered into a matched load."""
    _domain(temp >= 0, "temperature must be >= 0")
    _domain(bandwidth > 0, "bandwidth must be > 0")
    return CONSTANTS.boltzmann_k * temp * bandwidth


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        return -math.inf
    return 10.0 * math.log10(watts / 1e-3)


def available_noise_power_dbm(temp: float, bandwidth: float) -> float:
    return watts_to_dbm(available_noise_power(temp, bandwidth))


def divider_gain(model: DividerModel) -> float:
    """Voltage gain R2 / (R1 + R2) of the source/LNA-input divider."""
    denom = model.source_r + model.shunt_r
    _domain(denom != 0, "zero divider denominator")
    return model.shunt_r / denom


def observed_msv(load: LoadProfile, bandwidth: float, shunt_r: float = LNA_INPUT_OHMS) -> float:
    """Mean-squared voltage across the LNA input, 4kTBR1 * g^2, in V^2."""
    g = divider_gain(DividerModel(load.impedance_re, shunt_r))
    return johnson_msv(load, bandwidth) * g * g


def observed_ktb_multiple(load: LoadProfile, bandwidth: float, shunt_r: float = LNA_INPUT_OHMS) -> float:
    """``observed_msv`` expressed as a multiple of kT_P*B.

    The multiple carries units of ohms (4*R1*g^2); for a matched 50 ohm
    pair it is 50.
    """
    _domain(load.physical_temp > 0, "kTB multiple undefined at T = 0")
    return observed_msv(load, bandwidth, shunt_r) / available_noise_power(load.physical_temp, bandwidth)


# Measured receiver variances for each bench load. The 273 K value is not
# tabulated; it is placed on the calibration line 0.000159*T + 0.0212.
_MEASURED = {
    "matched_296": 0.0676,
    "matched_273": 0.000159 * 273 + 0.0212,
    "matched_77": 0.0333,
    "open_296": 0.0274,
    "short_296": 0.0283,
    "lna_input": 0.0273,
}

DERIVED_MEASUREMENTS = frozenset({"matched_273"})


def _build_presets() -> dict[str, LoadProfile]:
    presets = {}
    for temp in (296, 273, 77):
        for kind, ohms in (("open", OPEN_OHMS), ("short", SHORT_OHMS), ("matched", LNA_INPUT_OHMS)):
            name = f"{kind}_{temp}"
            presets[name] = LoadProfile(name, ohms, 0.0, float(temp), _MEASURED.get(name))
    # An LNA input behaves as a matched load at its (cold) noise temperature.
    presets["lna_input"] = LoadProfile("lna_input", LNA_INPUT_OHMS, 0.0, 39.5, _MEASURED["lna_input"])
    return presets


PRESETS: dict[str, LoadProfile] = _build_presets()


def preset(name: str) -> LoadProfile:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown load preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisecomm.errors import ConfigError, DomainError
from noisecomm.noise_physics import (
    CONSTANTS,
    PRESETS,
    DividerModel,
    LoadProfile,
    available_noise_power,
    available_noise_power_dbm,
    divider_gain,
    johnson_msv,
    observed_ktb_multiple,
    observed_msv,
    preset,
)

K = 1.380649e-23


def load(r, t=296.0):
    return LoadProfile("x", r, 0.0, t)


def test_boltzmann_constant_is_exact_si():
    assert CONSTANTS.boltzmann_k == K
    with pytest.raises(AttributeError):
        CONSTANTS.boltzmann_k = 1.0


class TestJohnsonMsv:
    def test_zero_temperature(self):
        assert johnson_msv(load(50, 0.0), 1e6) == 0.0

    def test_zero_resistance(self):
        assert johnson_msv(load(0.0), 1e6) == 0.0

    # expected values: 4 * k * T * B * R evaluated by hand
    @pytest.mark.parametrize("r, expected", [(50, 8.1734e-13), (17000, 2.7790e-10)])
    def test_room_temperature(self, r, expected):
        assert johnson_msv(load(r), 1e6) == pytest.approx(expected, rel=1e-4)

    @pytest.mark.parametrize("bw", [0.0, -1.0])
    def test_bad_bandwidth(self, bw):
        with pytest.raises(DomainError):
            johnson_msv(load(50), bw)


class TestAvailablePower:
    def test_dbm_at_500mhz(self):
        assert available_noise_power_dbm(296, 500e6) == pytest.approx(-86.9, abs=0.05)

    def test_zero_temperature(self):
        assert available_noise_power(0.0, 123.0) == 0.0
        assert available_noise_power_dbm(0.0, 123.0) == -math.inf

    def test_ktb(self):
        assert available_noise_power(296, 1e6) == pytest.approx(4.087e-15, rel=1e-3)

    def test_matched_power_is_v2_over_4r(self):
        for r in (1.0, 50.0, 1e6):
            assert johnson_msv(load(r), 1e6) / (4 * r) == pytest.approx(available_noise_power(296, 1e6))

    def test_negative_temperature(self):
        with pytest.raises(DomainError):
            available_noise_power(-1.0, 1e6)


class TestDivider:
    @pytest.mark.parametrize("r1, g", [(50, 0.5), (0, 1.0), (17000, 2.933e-3)])
    def test_gain(self, r1, g):
        assert divider_gain(DividerModel(r1, 50)) == pytest.approx(g, rel=1e-3)

    def test_zero_denominator(self):
        with pytest.raises(DomainError):
            DividerModel(0.0, 0.0)

    @given(st.floats(0, 1e7), st.floats(1e-3, 1e7))
    def test_gain_in_unit_interval(self, r1, r2):
        g = divider_gain(DividerModel(r1, r2))
        assert 0 < g <= 1


class TestObservedMsv:
    @pytest.mark.parametrize("r1, multiple", [(17000, 0.58), (0.254, 1.0), (50, 50.0)])
    def test_ktb_multiples(self, r1, multiple):
        assert observed_ktb_multiple(load(r1), 1e6) == pytest.approx(multiple, rel=0.01)

    def test_matched_equals_r2_times_ktb(self):
        for r2 in (50.0, 75.0, 1e6):
            got = observed_msv(load(r2), 1e6, shunt_r=r2)
            assert got == pytest.approx(r2 * available_noise_power(296, 1e6), rel=1e-12)

    def test_maximum_at_match(self):
        r1 = np.logspace(-2, 6, 2001)
        v = np.array([observed_msv(load(r), 1e6) for r in r1])
        assert r1[np.argmax(v)] == pytest.approx(50.0, rel=0.01)

    def test_oscilloscope_analogy(self):
        # a 1 Mohm resistor on a 1 Mohm scope input gives far more than the
        # disconnected (open, ~infinite source) case
        connected = observed_msv(load(1e6), 1e6, shunt_r=1e6)
        disconnected = observed_msv(load(1e12), 1e6, shunt_r=1e6)
        assert connected > 1e5 * disconnected

    def test_multiple_undefined_at_zero_temperature(self):
        assert observed_msv(load(50, 0.0), 1e6) == 0.0
        with pytest.raises(DomainError):
            observed_ktb_multiple(load(50, 0.0), 1e6)

    @given(st.floats(1.0, 400.0), st.floats(1.0, 400.0), st.floats(1e3, 1e9), st.floats(1e3, 1e9),
           st.floats(0.1, 1e5))
    def test_linear_in_temperature_and_bandwidth(self, t1, t2, b1, b2, r):
        a = observed_msv(load(r, t1), b1)
        b = observed_msv(load(r, t2), b2)
        assert b / a == pytest.approx((t2 * b2) / (t1 * b1), rel=1e-9)

    def test_imaginary_part_ignored(self):
        a = observed_msv(LoadProfile("a", 17000, 0.0, 296), 1e6)
        b = observed_msv(LoadProfile("b", 17000, -3500.0, 296), 1e6)
        assert a == b


def test_load_invariants():
    with pytest.raises(DomainError):
        LoadProfile("neg", -1.0)
    with pytest.raises(DomainError):
        LoadProfile("cold", 50.0, 0.0, -3.0)


def test_presets():
    assert preset("open_296").impedance_re == 17000
    assert preset("short_77").impedance_re == 0.254
    assert preset("matched_273").physical_temp == 273
    assert set(PRESETS) >= {f"{k}_{t}" for k in ("open", "short", "matched") for t in (296, 273, 77)}
    with pytest.raises(ConfigError):
        preset("nope")

"""On-off keying of a square-wave subcarrier by load switching, and its
radiometric demodulation.

The transmitter holds the OFF load for a 0-bit and toggles ON/OFF at the
subcarrier rate for a 1-bit. Because the information rides on the variance
of zero-mean noise, correlating raw samples with the subcarrier has zero
expectation. The receiver therefore square-law detects first: each bit's
soft intensity is the sum of p(t) * c(t) over the bit period, with p the
instantaneous power and c the +/-1 receive-side subcarrier. That is a
Dicke switched radiometer whose switch sits at the transmitter.

Sample timing is computed from exact sample instants t = n / f_s, never
by counting samples per half-cycle, so non-integer ratios do not drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigError, DomainError, NoPacketError
from .receiver_model import SampleStream, make_rng

BARKER_7 = (1, 1, 1, 0, 0, 1, 0)


@dataclass(frozen=True)
class ModemConfig:
    subcarrier_hz: float = 100.0
    sample_rate_hz: float = 4000.0
    cycles_per_bit: int = 20
    threshold_policy: str = "preamble_midpoint"  # or "fixed"
    fixed_threshold: float = 0.0
    preamble: tuple[int, ...] = BARKER_7
    payload_bits: int = 13
    power: str = "real"  # "real" -> Re(s)^2, "abs2" -> |s|^2
    correlation_floor: float = 0.5

    def __post_init__(self):
        if self.subcarrier_hz <= 0:
            raise ConfigError("subcarrier_hz must be > 0")
        if self.sample_rate_hz < 20 * self.subcarrier_hz:
            raise ConfigError(
                f"sample_rate_hz {self.sample_rate_hz} < 20 * subcarrier_hz {self.subcarrier_hz}"
            )
        if self.cycles_per_bit < 1:
            raise ConfigError("cycles_per_bit must be >= 1")
        if self.threshold_policy not in ("preamble_midpoint", "fixed"):
            raise ConfigError(f"unknown threshold policy {self.threshold_policy!r}")
        if self.power not in ("real", "abs2"):
            raise ConfigError(f"unknown power mode {self.power!r}")
        if any(b not in (0, 1) for b in self.preamble) or not self.preamble:
            raise ConfigError("preamble must be a non-empty 0/1 pattern")
        if self.payload_bits < 0:
            raise ConfigError("payload_bits must be >= 0")

    @property
    def data_rate(self) -> float:
        return self.subcarrier_hz / self.cycles_per_bit

    @property
    def samples_per_bit(self) -> float:
        return self.sample_rate_hz * self.cycles_per_bit / self.subcarrier_hz

    @property
    def packet_bits(self) -> int:
        return len(self.preamble) + self.payload_bits

    @classmethod
    def for_rate(cls, rate_bps: float, cycles_per_bit: int, sample_rate_hz: float, **kw) -> "ModemConfig":
        return cls(subcarrier_hz=rate_bps * cycles_per_bit, sample_rate_hz=sample_rate_hz,
                   cycles_per_bit=cycles_per_bit, **kw)


@dataclass
class SwitchSchedule:
    states: np.ndarray  # bool per sample, True = ON (matched load)
    sample_rate_hz: float

    def __len__(self) -> int:
        return len(self.states)


@dataclass
class DemodResult:
    soft_intensities: np.ndarray
    decided_bits: np.ndarray
    threshold_used: float


# -- timing -----------------------------------------------------------------

def _chips(m: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    # Positive half-cycle is the half-open phase interval [0, 1/2).
    phase = np.mod(m * cfg.subcarrier_hz, cfg.sample_rate_hz)
    return np.where(2.0 * phase < cfg.sample_rate_hz, 1.0, -1.0)


def _bit_index(m: np.ndarray, cfg: ModemConfig) -> np.ndarray:
    return np.floor_divide(m * cfg.subcarrier_hz, cfg.sample_rate_hz * cfg.cycles_per_bit).astype(np.int64)


def schedule_length(n_bits: int, cfg: ModemConfig) -> int:
    """Number of sample instants inside ``n_bits`` bit periods."""
    return math.ceil(n_bits * cfg.cycles_per_bit * cfg.sample_rate_hz / cfg.subcarrier_hz)


def subcarrier_wave(cfg: ModemConfig, n: int, phase_offset: int = 0) -> np.ndarray:
    """The +/-1 square subcarrier sampled at ``n`` instants from ``phase_offset``."""
    if n <= 0:
        raise DomainError("n must be > 0")
    m = np.arange(n, dtype=np.float64) + phase_offset
    return _chips(m, cfg)


# -- transmit -----------------------------------------------------------------

def modulate(bits, cfg: ModemConfig) -> SwitchSchedule:
    bits = np.asarray(bits, dtype=np.int8)
    if bits.size == 0:
        raise DomainError("cannot modulate an empty bit sequence")
    if np.any((bits != 0) & (bits != 1)):
        raise DomainError("bits must be 0 or 1")
    m = np.arange(schedule_length(bits.size, cfg), dtype=np.float64)
    idx = np.minimum(_bit_index(m, cfg), bits.size - 1)
    on = (bits[idx] == 1) & (_chips(m, cfg) > 0)
    return SwitchSchedule(on, cfg.sample_rate_hz)


def render_waveform(schedule: SwitchSchedule, sigma_on: float, sigma_off: float, seed,
                    complex_samples: bool = False) -> SampleStream:
    """Draw zero-mean Gaussian samples whose variance follows the schedule.

    ``sigma_on``/``sigma_off`` are variances (SDR units squared). ``seed`` is
    an int or a tuple of ints naming a substream. The unit-normal draws
    depend only on the seed and length, so changing the variances with a
    fixed seed gives common random numbers across sweep points.
    """
    if sigma_on < 0 or sigma_off < 0:
        raise DomainError("variances must be >= 0")
    rng = make_rng(seed)
    n = len(schedule)
    scale = np.where(schedule.states, math.sqrt(sigma_on), math.sqrt(sigma_off))
    if complex_samples:
        z = rng.standard_normal((n, 2))
        samples = (z[:, 0] + 1j * z[:, 1]) * scale
    else:
        samples = rng.standard_normal(n) * scale
    return SampleStream(samples, schedule.sample_rate_hz, seed)


# -- receive ------------------------------------------------------------------

def _power(samples: np.ndarray, mode: str) -> np.ndarray:
    if mode == "abs2":
        return samples.real**2 + samples.imag**2 if np.iscomplexobj(samples) else samples**2
    x = samples.real if np.iscomplexobj(samples) else samples
    return x * x


def integrate_and_dump(samples, cfg: ModemConfig, sync_offset: int = 0,
                       max_bits: int | None = None) -> np.ndarray:
    """Per-bit soft intensities sum(p * c) for every complete bit."""
    samples = np.asarray(samples)
    if sync_offset < 0:
        raise DomainError("sync_offset must be >= 0")
    avail = samples.size - sync_offset
    n_bits = int(avail * cfg.subcarrier_hz // (cfg.sample_rate_hz * cfg.cycles_per_bit)) if avail > 0 else 0
    if max_bits is not None:
        n_bits = min(n_bits, max_bits)
    if n_bits < 1:
        raise DomainError("stream shorter than one bit period after sync_offset")
    n = schedule_length(n_bits, cfg)
    m = np.arange(n, dtype=np.float64)
    weighted = _power(samples[sync_offset : sync_offset + n], cfg.power) * _chips(m, cfg)
    return np.bincount(_bit_index(m, cfg), weights=weighted, minlength=n_bits)[:n_bits]


def preamble_threshold(intensities, preamble) -> float:
    """Midpoint between mean intensities at the preamble's 1 and 0 positions."""
    pre = np.asarray(preamble)
    x = np.asarray(intensities, dtype=float)[: pre.size]
    if x.size < pre.size:
        raise DomainError("not enough bits to cover the preamble")
    if pre.all() or not pre.any():
        raise DomainError("preamble needs both 0s and 1s to set a threshold")
    return 0.5 * (x[pre == 1].mean() + x[pre == 0].mean())


def decide(intensities, threshold: float) -> np.ndarray:
    return (np.asarray(intensities) > threshold).astype(np.int8)


def demodulate(stream: SampleStream | np.ndarray, cfg: ModemConfig, sync_offset: int = 0,
               max_bits: int | None = None) -> DemodResult:
    """Integrate-and-dump demodulation followed by threshold decisions.

    With the ``preamble_midpoint`` policy the preamble is assumed to start
    at the first demodulated bit.
    """
    samples = stream.samples if isinstance(stream, SampleStream) else stream
    soft = integrate_and_dump(samples, cfg, sync_offset, max_bits)
    if cfg.threshold_policy == "fixed":
        thr = cfg.fixed_threshold
    else:
        thr = preamble_threshold(soft, cfg.preamble)
    return DemodResult(soft, decide(soft, thr), float(thr))


# -- packets ------------------------------------------------------------------

def frame(payload, cfg: ModemConfig | None = None) -> np.ndarray:
    cfg = cfg or ModemConfig()
    payload = np.asarray(payload, dtype=np.int8)
    if payload.size != cfg.payload_bits:
        raise DomainError(f"payload must be exactly {cfg.payload_bits} bits")
    return np.concatenate([np.asarray(cfg.preamble, dtype=np.int8), payload])


def deframe(bits, cfg: ModemConfig | None = None) -> np.ndarray:
    cfg = cfg or ModemConfig()
    bits = np.asarray(bits, dtype=np.int8)
    if bits.size < cfg.packet_bits:
        raise NoPacketError("bit sequence shorter than a packet")
    n_pre = len(cfg.preamble)
    if not np.array_equal(bits[:n_pre], np.asarray(cfg.preamble, dtype=np.int8)):
        raise NoPacketError("preamble mismatch")
    return bits[n_pre : cfg.packet_bits].copy()


@dataclass(frozen=True)
class PacketAlignment:
    offset: int
    threshold: float
    score: float


def preamble_correlation(soft_intensities, preamble) -> np.ndarray:
    """Pearson correlation of the +/-1 preamble against every window."""
    x = np.asarray(soft_intensities, dtype=float)
    p = 2.0 * np.asarray(preamble, dtype=float) - 1.0
    p = p - p.mean()
    win = np.lib.stride_tricks.sliding_window_view(x, p.size)
    centred = win - win.mean(axis=1, keepdims=True)
    num = centred @ p
    den = np.linalg.norm(centred, axis=1) * np.linalg.norm(p)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / den, 0.0)
    return r


def detect_packet(soft_intensities, cfg: ModemConfig) -> PacketAlignment:
    """Locate the preamble in a run of soft intensities.

    Candidate offsets leave room for a whole packet; the earliest maximum
    wins. Peaks below ``cfg.correlation_floor`` raise ``NoPacketError``.
    """
    x = np.asarray(soft_intensities, dtype=float)
    if x.size < cfg.packet_bits:
        raise DomainError("intensity sequence shorter than one packet")
    r = preamble_correlation(x, cfg.preamble)[: x.size - cfg.packet_bits + 1]
    best = int(np.argmax(r))
    if r[best] < cfg.correlation_floor:
        raise NoPacketError(f"no preamble found (peak correlation {r[best]:.3f})")
    if cfg.threshold_policy == "fixed":
        thr = cfg.fixed_threshold
    else:
        thr = preamble_threshold(x[best:], cfg.preamble)
    return PacketAlignment(best, float(thr), float(r[best]))


def bits_to_hex(bits) -> str:
    """Hex dump of a bit sequence, MSB first, zero-padded to whole nibbles."""
    bits = [int(b) for b in bits]
    bits += [0] * (-len(bits) % 4)
    return "".join(f"{int(''.join(map(str, bits[i:i + 4])), 2):x}" for i in range(0, len(bits), 4))


# -- closed-form performance ------------------------------------------------

def intensity_moments(sigma_off: float, sigma_on: float, samples_per_bit: float):
    """Mean and variance of the soft intensity for a 0-bit and a 1-bit.

    Uses E[s^2] = sigma^2 and Var[s^2] = 2 sigma^4 per independent real
    sample; a 1-bit spends half its samples ON, half OFF.
    """
    n = float(samples_per_bit)
    h = n / 2.0
    mean0, var0 = 0.0, n * 2.0 * sigma_off**2
    mean1 = h * (sigma_on - sigma_off)
    var1 = h * 2.0 * sigma_on**2 + h * 2.0 * sigma_off**2
    return (mean0, var0), (mean1, var1)


def analytic_ber(sigma_off: float, sigma_on: float, samples_per_bit: float,
                 threshold: float | None = None) -> float:
    """Gaussian-approximation bit error rate for equiprobable bits.

    ``threshold`` defaults to the midpoint of the two expected intensities.
    """
    (m0, v0), (m1, v1) = intensity_moments(sigma_off, sigma_on, samples_per_bit)
    if threshold is None:
        threshold = 0.5 * (m0 + m1)
    if v0 == 0 and v1 == 0:
        return 0.0 if m1 > m0 else 0.5
    p0 = stats.norm.sf((threshold - m0) / math.sqrt(v0)) if v0 > 0 else float(threshold < m0)
    p1 = stats.norm.cdf((threshold - m1) / math.sqrt(v1)) if v1 > 0 else float(m1 <= threshold)
    return float(0.5 * (p0 + p1))


def simulate_intensities(bits, sigma_off: float, sigma_on: float, cfg: ModemConfig, rng) -> np.ndarray:
    """Soft intensities for aligned bits, drawn half-cycle by half-cycle.

    The sum of k squared N(0, s) samples is s * chi2(k), so each half-cycle's
    contribution is one gamma draw. The result has exactly the distribution
    ``integrate_and_dump`` produces on a rendered waveform, at a cost
    independent of the sample rate. Half-cycles must span an integer number
    of samples.
    """
    spb = cfg.samples_per_bit
    half = spb / (2 * cfg.cycles_per_bit)
    if half != int(half):
        raise DomainError("fast path needs an integer number of samples per half-cycle")
    bits = np.asarray(bits, dtype=np.int8)
    k = int(half)
    g = rng.gamma(k / 2.0, 2.0, size=(bits.size, cfg.cycles_per_bit, 2))
    var_pos = np.where(bits == 1, sigma_on, sigma_off)[:, None]
    return (var_pos * g[:, :, 0]).sum(axis=1) - sigma_off * g[:, :, 1].sum(axis=1)

"""Receiver chain model: physical mean-squared volts to SDR-unit variance,
Gaussian sample synthesis and the theoretical sample PDF."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError
from .noise_physics import LNA_INPUT_OHMS, LoadProfile, observed_msv

# Recorded in every result file so runs can be replayed.
RNG_ALGORITHM = "numpy.random.PCG64/SeedSequence"


def make_rng(seed, *keys: int) -> np.random.Generator:
    """Generator for the substream identified by ``(seed, *keys)``.

    ``seed`` may itself be a (possibly nested) tuple of ints.
    """
    flat = list(_flatten((seed, *keys)))
    if any(k < 0 for k in flat):
        raise DomainError("seeds and substream keys must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(flat)))


def _flatten(key):
    if isinstance(key, (tuple, list)):
        for k in key:
            yield from _flatten(k)
    else:
        yield int(key)


@dataclass(frozen=True)
class ReceiverChain:
    gain_rx: float = 2.3e11  # SDR-units^2 per V^2
    offset: float = 0.0212  # SDR-units^2, receive-chain floor
    bandwidth: float = 1e6
    shunt_r: float = LNA_INPUT_OHMS
    lna_noise_temp: float = 39.5

    def __post_init__(self):
        if self.gain_rx <= 0:
            raise DomainError("gain_rx must be > 0")
        if self.offset < 0:
            raise DomainError("offset must be >= 0")
        if self.bandwidth <= 0:
            raise DomainError("bandwidth must be > 0")


@dataclass
class SampleStream:
    samples: np.ndarray
    sample_rate: float
    seed: int | tuple | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("sample stream contains non-finite values")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def real(self) -> np.ndarray:
        return self.samples.real if np.iscomplexobj(self.samples) else self.samples


def sdr_variance(physical_msv: float, chain: ReceiverChain) -> float:
    """Variance in SDR units: ``physical_msv * gain_rx + offset``."""
    if physical_msv < 0:
        raise DomainError("physical_msv must be >= 0")
    return physical_msv * chain.gain_rx + chain.offset


def predicted_variance(load: LoadProfile, chain: ReceiverChain) -> float:
    return sdr_variance(observed_msv(load, chain.bandwidth, chain.shunt_r), chain)


def load_variance(load: LoadProfile, chain: ReceiverChain, source: str = "predicted") -> float:
    """SDR variance for ``load`` from the physical model or the bench value."""
    if source == "measured":
        if load.measured_msv is None:
            raise DomainError(f"load {load.name!r} has no measured variance")
        return load.measured_msv
    if source != "predicted":
        raise DomainError(f"unknown variance source {source!r}")
    return predicted_variance(load, chain)


def synthesize(
    sigma_sq: float,
    n: int,
    seed,
    sample_rate: float = 1e6,
    complex_samples: bool = False,
    dtype=np.float64,
) -> SampleStream:
    """Zero-mean white Gaussian samples with per-component variance ``sigma_sq``.

    Complex streams draw independent real and imaginary parts, each with
    variance ``sigma_sq``. ``dtype`` names the real component type.
    ``seed`` is an int or a tuple of ints naming a substream.
    """
    if sigma_sq < 0:
        raise DomainError("sigma_sq must be >= 0")
    n = int(n)
    if n <= 0:
        raise DomainError("n must be > 0")
    rng = make_rng(seed)
    scale = math.sqrt(sigma_sq)
    dtype = np.dtype(dtype)
    if complex_samples:
        x = rng.standard_normal((n, 2), dtype=dtype)
        x *= dtype.type(scale)
        out = x.view(np.complex64 if dtype == np.float32 else np.complex128)[:, 0]
    else:
        out = rng.standard_normal(n, dtype=dtype)
        out *= dtype.type(scale)
    return SampleStream(out, sample_rate, seed)


def mean_square(stream: SampleStream | np.ndarray, chunk: int = 1 << 22) -> float:
    """(1/N) * sum(s^2) over the real component, accumulated in float64."""
    x = stream.real if isinstance(stream, SampleStream) else np.asarray(stream)
    if np.iscomplexobj(x):
        x = x.real
    if x.size == 0:
        raise DomainError("mean_square of an empty stream")
    total = 0.0
    for i in range(0, x.size, chunk):
        part = x[i : i + chunk].astype(np.float64, copy=False)
        total += float(np.dot(part, part))
    return total / x.size


def gaussian_pdf(x, sigma_sq: float):
    """Zero-mean normal density with variance ``sigma_sq``."""
    if not sigma_sq > 0:
        raise DomainError("sigma_sq must be > 0")
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x / sigma_sq) / math.sqrt(2.0 * math.pi * sigma_sq)
    return float(out) if out.ndim == 0 else out


def gaussian_gof(samples, sigma_sq: float, bins: int = 50):
    """Chi-square goodness of fit of ``samples`` against N(0, sigma_sq).

    Bins are equiprobable under the null so every expected count equals
    ``len(samples) / bins``. Returns ``(statistic, p_value)``.
    """
    x = np.asarray(samples)
    if np.iscomplexobj(x):
        x = x.real
    if x.size < 5 * bins:
        raise DomainError("too few samples for the requested number of bins")
    edges = stats.norm.ppf(np.linspace(0.0, 1.0, bins + 1), scale=math.sqrt(sigma_sq))
    # searchsorted on the interior edges yields bin indices 0..bins-1
    counts = np.bincount(np.searchsorted(edges[1:-1], x, side="right"), minlength=bins)
    expected = np.full(bins, x.size / bins)
    res = stats.chisquare(counts, expected)
    return float(res.statistic), float(res.pvalue)

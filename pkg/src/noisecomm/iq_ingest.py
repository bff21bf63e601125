"""Recorded IQ captures: file formats and DC-spike cleanup.

Binary formats are little-endian interleaved I/Q records:

``cf32_interleaved``
    float32 I, float32 Q (8 bytes per sample). Lossless; canonical.
``i16_interleaved``
    int16 I, int16 Q (4 bytes per sample); values are multiplied by
    ``scale`` on read.
``csv``
    text, one ``i,q`` pair per line, optional ``i,q`` header line.

A header travels as a JSON sidecar next to the capture (``<file>.json``).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, ParseError
from .receiver_model import SampleStream

FORMATS = ("cf32_interleaved", "i16_interleaved", "csv")
_RECORD = {"cf32_interleaved": (np.dtype("<f4"), 8), "i16_interleaved": (np.dtype("<i2"), 4)}


@dataclass(frozen=True)
class IqFileHeader:
    format: str = "cf32_interleaved"
    sample_rate_hz: float = 1e6
    center_freq_hz: float = 1.42e9
    scale: float = 1.0

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigError(f"unknown IQ format {self.format!r}; expected one of {FORMATS}")
        if not self.sample_rate_hz > 0:
            raise ConfigError("sample_rate_hz must be > 0")


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def read_header(path) -> IqFileHeader:
    """Load the JSON sidecar header for a capture (or a JSON file itself)."""
    p = Path(path)
    if p.suffix != ".json":
        p = sidecar_path(p)
    try:
        data = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"missing IQ header {p}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: {exc}") from None
    unknown = set(data) - set(IqFileHeader.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"{p}: unknown header keys {sorted(unknown)}")
    return IqFileHeader(**data)


def write_header(path, header: IqFileHeader) -> Path:
    p = sidecar_path(path)
    p.write_text(json.dumps(asdict(header), indent=2, sort_keys=True) + "\n")
    return p


def read_iq(path, header: IqFileHeader) -> SampleStream:
    path = Path(path)
    if header.format == "csv":
        return _read_csv(path, header)
    dtype, record = _RECORD[header.format]
    raw = path.read_bytes()
    if len(raw) == 0:
        raise DomainError(f"{path}: empty capture")
    if len(raw) % record:
        bad = len(raw) - len(raw) % record
        raise ParseError(f"{path}: truncated record at byte offset {bad}")
    iq = np.frombuffer(raw, dtype=dtype).reshape(-1, 2)
    if header.format == "cf32_interleaved":
        samples = iq.view(np.dtype("<c8"))[:, 0].astype(np.complex64)
        if header.scale != 1.0:
            samples = samples * np.float32(header.scale)
    else:
        samples = (iq[:, 0] + 1j * iq[:, 1].astype(np.float64)) * header.scale
    return SampleStream(samples, header.sample_rate_hz)


def _read_csv(path: Path, header: IqFileHeader) -> SampleStream:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and line.replace(" ", "").lower() == "i,q"):
                continue
            parts = line.split(",")
            try:
                if len(parts) != 2:
                    raise ValueError(f"expected 2 columns, got {len(parts)}")
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DomainError(f"{path}: empty capture")
    a = np.asarray(rows)
    return SampleStream((a[:, 0] + 1j * a[:, 1]) * header.scale, header.sample_rate_hz)


def write_iq(path, stream: SampleStream | np.ndarray, header: IqFileHeader, sidecar: bool = True) -> None:
    samples = stream.samples if isinstance(stream, SampleStream) else np.asarray(stream)
    samples = samples.astype(np.complex128) / header.scale if header.scale != 1.0 else samples
    path = Path(path)
    if header.format == "cf32_interleaved":
        path.write_bytes(np.asarray(samples, dtype="<c8").tobytes())
    elif header.format == "i16_interleaved":
        iq = np.stack([np.real(samples), np.imag(samples)], axis=1)
        iq = np.clip(np.rint(iq), -32768, 32767).astype("<i2")
        path.write_bytes(iq.tobytes())
    else:
        s = np.asarray(samples, dtype=np.complex128)
        with open(path, "w") as fh:
            fh.write("i,q\n")
            for v in s:
                fh.write(f"{float(v.real)!r},{float(v.imag)!r}\n")
    if sidecar:
        write_header(path, header)


# -- Hampel identifier --------------------------------------------------------

MAD_SCALE = 1.4826  # MAD -> standard deviation for Gaussian data


def _hampel_pass(x: np.ndarray, k: int, n_sigma: float, chunk: int = 8192) -> np.ndarray:
    n = x.size
    med = np.empty(n)
    mad = np.empty(n)
    # interior points see the full 2k+1 window
    windows = np.lib.stride_tricks.sliding_window_view(x, 2 * k + 1)
    for start in range(0, windows.shape[0], chunk):
        w = windows[start : start + chunk]
        m = np.median(w, axis=1)
        med[k + start : k + start + len(w)] = m
        mad[k + start : k + start + len(w)] = np.median(np.abs(w - m[:, None]), axis=1)
    # edges use the truncated neighbourhood
    for i in list(range(k)) + list(range(n - k, n)):
        w = x[max(0, i - k) : i + k + 1]
        m = np.median(w)
        med[i] = m
        mad[i] = np.median(np.abs(w - m))
    out = x.copy()
    bad = np.abs(x - med) > n_sigma * MAD_SCALE * mad
    out[bad] = med[bad]
    return out


def hampel_filter(values, k: int = 100, n_sigma: float = 3.0, max_passes: int = 50) -> np.ndarray:
    """Replace points that deviate from their neighbourhood median by more
    than ``n_sigma`` scaled MADs.

    Each point's neighbourhood is the ``k`` samples either side (truncated
    at the ends). Passes repeat until nothing changes, so the output is a
    fixed point and re-filtering it is a no-op. Complex input is filtered
    per component.
    """
    x = np.asarray(values)
    if k < 1:
        raise DomainError("k must be >= 1")
    if x.size <= 2 * k:
        raise DomainError(f"sequence of length {x.size} too short for k={k}")
    if np.iscomplexobj(x):
        return hampel_filter(x.real, k, n_sigma, max_passes) + 1j * hampel_filter(x.imag, k, n_sigma, max_passes)
    cur = x.astype(np.float64)
    for _ in range(max_passes):
        nxt = _hampel_pass(cur, k, n_sigma)
        if np.array_equal(nxt, cur):
            return nxt
        cur = nxt
    return cur

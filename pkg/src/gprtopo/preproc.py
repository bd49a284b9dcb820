"""B-scan signal chain: background removal, band-pass, AGC, and imaging.

A :class:`Bscan` stores samples as an ``(n_samples, n_traces)`` matrix, one
column per A-scan. All operations return new B-scans and treat traces
independently, except background removal which averages across traces.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .image import GrayImage

AGC_EPS = 1e-12
DEFAULT_AGC_WINDOWS = (32, 64, 128, 256, 512)  # in units of dt

_MAGIC = b"GPRB"
_HEADER = struct.Struct("<4sIIdd")


@dataclass(frozen=True, eq=False)
class Bscan:
    """Radar section: ``data[i, j]`` is time sample ``i`` of trace ``j``.

    ``dt`` is the sample interval in seconds and ``trace_spacing`` the
    antenna step in meters.
    """

    data: np.ndarray
    dt: float
    trace_spacing: float

    def __post_init__(self):
        d = np.array(self.data, dtype=np.float64)
        if d.ndim == 1:
            d = d[:, None]
        if d.ndim != 2:
            raise ValueError(f"B-scan data must be 2D, got shape {d.shape}")
        if d.shape[0] < 2 or d.shape[1] < 1:
            raise ValueError("B-scan needs >= 2 samples and >= 1 trace")
        if not self.dt > 0 or not self.trace_spacing > 0:
            raise ValueError("dt and trace_spacing must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def n_traces(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def with_data(self, data) -> "Bscan":
        return replace(self, data=data)


def background_removal(b: Bscan) -> Bscan:
    """Subtract the mean trace, i.e. the across-trace mean of every time row."""
    return b.with_data(b.data - b.data.mean(axis=1, keepdims=True))


def bandpass_mask(freqs, f_lo: float, f_hi: float, taper_frac: float = 0.1) -> np.ndarray:
    """Raised-cosine band-pass gain evaluated at ``|freqs|``.

    Unity on ``[f_lo*(1+taper), f_hi*(1-taper)]``, zero outside
    ``[f_lo, f_hi]``, cosine ramps between.
    """
    f = np.abs(np.asarray(freqs, dtype=np.float64))
    lo_edge = f_lo * (1.0 + taper_frac)
    hi_edge = f_hi * (1.0 - taper_frac)
    low = np.ones_like(f)
    if lo_edge > f_lo:
        ramp = 0.5 * (1.0 - np.cos(np.pi * (f - f_lo) / (lo_edge - f_lo)))
        low = np.where(f < lo_edge, ramp, 1.0)
    low = np.where(f < f_lo, 0.0, low)
    high = np.ones_like(f)
    if f_hi > hi_edge:
        ramp = 0.5 * (1.0 + np.cos(np.pi * (f - hi_edge) / (f_hi - hi_edge)))
        high = np.where(f > hi_edge, ramp, 1.0)
    high = np.where(f > f_hi, 0.0, high)
    return low * high


def bandpass(b: Bscan, f_lo: float = 100e6, f_hi: float = 1900e6,
             taper_frac: float = 0.1) -> Bscan:
    """Zero-phase frequency-domain band-pass applied to every trace."""
    nyquist = 0.5 / b.dt
    if f_lo < 0:
        raise ValueError("f_lo must be non-negative")
    if f_lo >= f_hi:
        raise ValueError(f"f_lo ({f_lo:g} Hz) must be below f_hi ({f_hi:g} Hz)")
    if f_hi > nyquist * (1 + 1e-12):
        raise ValueError(f"f_hi ({f_hi:g} Hz) exceeds Nyquist ({nyquist:g} Hz)")
    if not 0.0 <= taper_frac <= 0.5:
        raise ValueError("taper_frac must lie in [0, 0.5]")
    n = b.n_samples
    spectrum = np.fft.rfft(b.data, axis=0)
    mask = bandpass_mask(np.fft.rfftfreq(n, b.dt), f_lo, f_hi, taper_frac)
    return b.with_data(np.fft.irfft(spectrum * mask[:, None], n=n, axis=0))


def window_samples(window_s: float, dt: float) -> int:
    return int(np.floor(window_s / dt + 0.5))


def windowed_rms(data: np.ndarray, length: int) -> np.ndarray:
    """RMS over a centered window of ``length`` samples along axis 0.

    The window for sample ``i`` spans ``[i - length//2, i - length//2 + length)``
    clipped to the trace; the mean uses only the samples inside.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    csum = np.concatenate([np.zeros((1,) + data.shape[1:]), np.cumsum(data**2, axis=0)])
    start = np.clip(np.arange(n) - length // 2, 0, n)
    stop = np.clip(np.arange(n) - length // 2 + length, 0, n)
    shape = (n,) + (1,) * (data.ndim - 1)
    count = (stop - start).reshape(shape)
    energy = csum[stop] - csum[start]
    return np.sqrt(np.maximum(energy, 0.0) / count)


def agc(b: Bscan, window_s: float, target_rms: float = 1.0) -> Bscan:
    """Sliding-window RMS gain control.

    Each sample is scaled by ``target_rms / max(AGC_EPS, local_rms)``, where the
    local RMS is taken over a centered window of ``round(window_s/dt)`` samples.
    """
    if window_s < 3 * b.dt * (1 - 1e-9):
        raise ValueError("AGC window must span at least 3 samples")
    if not target_rms > 0:
        raise ValueError("target_rms must be positive")
    length = window_samples(window_s, b.dt)
    rms = windowed_rms(b.data, length)
    gain = target_rms / np.maximum(AGC_EPS, rms)
    return b.with_data(b.data * gain)


def agc_variants(b: Bscan, windows=None, target_rms: float = 1.0) -> list[Bscan]:
    """One AGC output per window length (seconds); five by default."""
    if windows is None:
        windows = [w * b.dt for w in DEFAULT_AGC_WINDOWS]
    windows = list(windows)
    if not windows:
        raise ValueError("at least one AGC window is required")
    return [agc(b, w, target_rms) for w in windows]


def to_image(b: Bscan, clip_pct: float = 99.0) -> GrayImage:
    """Map amplitudes to [0, 1] with zero at 0.5.

    Amplitudes are clipped at the ``clip_pct`` percentile of ``|data|``; the
    clip level maps to 1 and its negative to 0. Image rows are time samples.
    """
    if not 50.0 < clip_pct <= 100.0:
        raise ValueError("clip_pct must lie in (50, 100]")
    clip = float(np.percentile(np.abs(b.data), clip_pct))
    if clip == 0.0:
        return GrayImage(np.full(b.data.shape, 0.5))
    scaled = np.clip(b.data, -clip, clip) / clip
    return GrayImage(np.clip(0.5 + 0.5 * scaled, 0.0, 1.0))


# ---------------------------------------------------------------- file formats


def write_bscan(b: Bscan, path) -> None:
    """Write the little-endian ``GPRB`` container (header + row-major f32)."""
    header = _HEADER.pack(_MAGIC, b.n_samples, b.n_traces, b.dt, b.trace_spacing)
    body = np.ascontiguousarray(b.data, dtype="<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_bscan(path) -> Bscan:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: file too short for a GPRB header")
    magic, ns, nt, dt, dx = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * ns * nt
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(ns, nt)
    return Bscan(data.astype(np.float64), dt, dx)


def read_bscan_csv(path, dt: float, trace_spacing: float) -> Bscan:
    """Rows are time samples, columns are traces."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if len({len(r) for r in rows}) > 1:
        raise ValueError(f"{path}: ragged CSV rows")
    return Bscan(np.array(rows), dt, trace_spacing)


def load_bscan(path, dt: float | None = None, trace_spacing: float | None = None) -> Bscan:
    """Read a GPRB container, or a CSV when ``dt`` and ``trace_spacing`` are given."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        if dt is None or trace_spacing is None:
            raise ValueError("CSV B-scans need dt and trace_spacing")
        return read_bscan_csv(path, dt, trace_spacing)
    return read_bscan(path)

"""Frequency-domain analysis: magnitude spectra, spectrograms and FFT band masks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.signal import get_window
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_finite_1d, check_trace_matrix
from .exceptions import ConfigurationError
from .traceio import Trace, TraceSet


@dataclass(frozen=True)
class Spectrum:
    bin_magnitudes: np.ndarray
    bin_resolution_hz: float

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.arange(self.bin_magnitudes.size) * self.bin_resolution_hz

    def peaks(self, k: int = 10, min_hz: float = 0.0) -> list[tuple[float, float]]:
        """The ``k`` largest local maxima above ``min_hz`` as ``(hz, magnitude)``."""
        m = self.bin_magnitudes
        idx = np.flatnonzero((m[1:-1] >= m[:-2]) & (m[1:-1] > m[2:])) + 1
        idx = idx[self.frequencies_hz[idx] >= min_hz]
        idx = idx[np.argsort(-m[idx], kind="stable")][:k]
        return [(float(i * self.bin_resolution_hz), float(m[i])) for i in idx]

    def to_rows(self):
        return zip(self.frequencies_hz.tolist(), self.bin_magnitudes.tolist())


@dataclass(frozen=True)
class BandSpec:
    low_hz: float
    high_hz: float
    mode: Literal["pass", "notch"] = "pass"

    def __post_init__(self):
        if self.mode not in ("pass", "notch"):
            raise ConfigurationError(f"band mode must be 'pass' or 'notch', got {self.mode!r}")
        if not 0 <= self.low_hz < self.high_hz:
            raise ConfigurationError(
                f"band needs 0 <= low_hz < high_hz, got [{self.low_hz}, {self.high_hz}]")

    @classmethod
    def around(cls, center_hz: float, half_width_hz: float = 1e6, mode="pass") -> BandSpec:
        return cls(max(0.0, center_hz - half_width_hz), center_hz + half_width_hz, mode)

    @classmethod
    def parse(cls, text: str, mode="pass") -> BandSpec:
        """``"LO:HI"`` in Hz, scientific notation allowed."""
        try:
            lo, hi = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigurationError(f"band must look like LO:HI, got {text!r}") from None
        return cls(lo, hi, mode)


def fft_magnitude(trace, sample_rate_hz: float) -> Spectrum:
    """One-sided magnitude spectrum ``|rfft(x)|``.

    Accepts a :class:`Trace` or a 1-D array.
    """
    x = check_finite_1d(trace.samples if isinstance(trace, Trace) else trace, min_len=2)
    if not sample_rate_hz > 0:
        raise ConfigurationError("sample_rate_hz must be positive")
    return Spectrum(np.abs(np.fft.rfft(x)), sample_rate_hz / x.size)


def mean_spectrum(ts: TraceSet) -> Spectrum:
    mags = np.abs(np.fft.rfft(ts.samples.astype(np.float64), axis=1)).mean(axis=0)
    return Spectrum(mags, ts.sample_rate_hz / ts.samples_per_trace)


def spectrogram_frame_count(n_samples: int, window_len: int, overlap: int) -> int:
    if not 0 <= overlap < window_len <= n_samples:
        raise ConfigurationError(
            f"need 0 <= overlap < window_len <= samples, got overlap={overlap}, "
            f"window_len={window_len}, samples={n_samples}")
    return (n_samples - window_len) // (window_len - overlap) + 1


def spectrogram(trace, window_len: int, overlap: int) -> np.ndarray:
    """Hann-windowed short-time magnitude spectra, shape ``(frames, window_len//2 + 1)``."""
    x = check_finite_1d(trace.samples if isinstance(trace, Trace) else trace, min_len=1)
    n_frames = spectrogram_frame_count(x.size, window_len, overlap)
    hop = window_len - overlap
    frames = np.lib.stride_tricks.sliding_window_view(x, window_len)[::hop][:n_frames]
    return np.abs(np.fft.rfft(frames * get_window("hann", window_len), axis=1))


def band_weights(n_samples: int, sample_rate_hz: float, bands: Sequence[BandSpec],
                 taper_hz: float = 0.0) -> np.ndarray:
    """Per-bin gains for the one-sided spectrum of an ``n_samples`` signal.

    Pass bands are united (bins outside all of them are removed); notch bands
    are then cut.  With ``taper_hz > 0`` each edge rolls off with a raised
    cosine over ``taper_hz`` outside a pass band / inside a notch's
    complement.
    """
    nyquist = sample_rate_hz / 2
    for band in bands:
        if band.high_hz > nyquist:
            raise ConfigurationError(
                f"band [{band.low_hz}, {band.high_hz}] Hz exceeds Nyquist {nyquist} Hz")
    if taper_hz < 0:
        raise ConfigurationError("taper_hz must be >= 0")
    freqs = np.fft.rfftfreq(n_samples, 1.0 / sample_rate_hz)

    def inside(band):
        if taper_hz == 0:
            return ((freqs >= band.low_hz) & (freqs <= band.high_hz)).astype(np.float64)
        dist = np.maximum(band.low_hz - freqs, freqs - band.high_hz).clip(min=0.0)
        return np.where(dist >= taper_hz, 0.0, 0.5 * (1 + np.cos(np.pi * dist / taper_hz)))

    passes = [inside(b) for b in bands if b.mode == "pass"]
    notches = [inside(b) for b in bands if b.mode == "notch"]
    w = np.max(passes, axis=0) if passes else np.ones_like(freqs)
    for n in notches:
        w = w * (1.0 - n)
    return w


class BandFilter(TransformerMixin, BaseEstimator):
    """Brick-wall (optionally tapered) FFT-bin mask applied row-wise.

    ``transform`` takes a ``(n_traces, n_samples)`` array; filtering is
    stateless, so ``fit`` only validates the bands against the sample rate.
    """

    def __init__(self, bands=(), sample_rate_hz=2.5e9, taper_hz=0.0):
        self.bands = bands
        self.sample_rate_hz = sample_rate_hz
        self.taper_hz = taper_hz

    def _bands(self) -> list[BandSpec]:
        bands = [self.bands] if isinstance(self.bands, BandSpec) else list(self.bands)
        return bands

    def fit(self, X, y=None):
        X = check_trace_matrix(X, min_traces=1)
        self.weights_ = band_weights(X.shape[1], self.sample_rate_hz, self._bands(), self.taper_hz)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        X = check_trace_matrix(X, min_traces=1)
        w = band_weights(X.shape[1], self.sample_rate_hz, self._bands(), self.taper_hz)
        spec = np.fft.rfft(X, axis=1)
        return np.fft.irfft(spec * w, n=X.shape[1], axis=1)


def band_filter(ts: TraceSet, band: BandSpec | Sequence[BandSpec], taper_hz: float = 0.0) -> TraceSet:
    """Filter every trace of ``ts``; metadata passes through untouched."""
    filt = BandFilter(band, ts.sample_rate_hz, taper_hz)
    return ts.with_samples(filt.fit_transform(ts.samples))

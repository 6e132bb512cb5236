"""Simple EM analysis: amplitude statistics of encrypting vs idle captures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, DataError
from .traceio import Trace, TraceSet


def rms(trace, start: int = 0, end: int | None = None) -> float:
    """Root-mean-square of ``samples[start:end]``."""
    x = trace.samples if isinstance(trace, Trace) else np.asarray(trace)
    end = x.shape[-1] if end is None else end
    if not 0 <= start < end <= x.shape[-1]:
        raise ConfigurationError(f"need 0 <= start < end <= {x.shape[-1]}, got [{start}, {end})")
    seg = np.asarray(x[start:end], dtype=np.float64)
    return float(np.sqrt(np.mean(seg * seg)))


@dataclass(frozen=True)
class SemaReport:
    rms_active: float
    rms_idle: float
    peak_active: float
    peak_idle: float
    ratio_rms: float
    per_trace_rms_active: np.ndarray
    per_trace_rms_idle: np.ndarray

    def to_dict(self, per_trace: bool = False) -> dict:
        d = {
            "rms_active": self.rms_active,
            "rms_idle": self.rms_idle,
            "peak_active": self.peak_active,
            "peak_idle": self.peak_idle,
            "ratio_rms": self.ratio_rms,
        }
        if per_trace:
            d["per_trace_rms_active"] = self.per_trace_rms_active.tolist()
            d["per_trace_rms_idle"] = self.per_trace_rms_idle.tolist()
        return d


def _aggregate(ts: TraceSet):
    x = ts.samples.astype(np.float64)
    per_trace = np.sqrt(np.mean(x * x, axis=1))
    return float(np.sqrt(np.mean(x * x))), float(np.abs(x).max()), per_trace


def compare_sets(active: TraceSet, idle: TraceSet) -> SemaReport:
    """Set-wide RMS and peak amplitude of both captures and their RMS ratio."""
    if len(active) < 1 or len(idle) < 1:
        raise DataError("both trace sets must be non-empty")
    if active.sample_rate_hz != idle.sample_rate_hz:
        raise DataError(
            f"sample rates differ: {active.sample_rate_hz} Hz vs {idle.sample_rate_hz} Hz")
    rms_a, peak_a, per_a = _aggregate(active)
    rms_i, peak_i, per_i = _aggregate(idle)
    if rms_i == 0 or rms_a == 0:
        raise DataError("RMS ratio undefined: a set is identically zero")
    return SemaReport(rms_a, rms_i, peak_a, peak_i, rms_a / rms_i, per_a, per_i)

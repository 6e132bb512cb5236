"""Synthetic EM trace generation under a Hamming-weight emission model.

Each encrypting trace is

    baseline * activity_gain
    + sum_j gain * HW(I_j) * pulse_j
    + sum_k A_k * sin(2 pi f_k t + phi_k)
    + N(0, noise_sigma**2)

where ``I_j`` is byte j of the round-1 S-box output and ``pulse_j`` is a
rectangular window.  Interferer phases are drawn per trace: the tones are not
synchronised with the trigger, so they act as narrowband noise across traces.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``.  Trace i
of a set uses the stream ``SeedSequence(seed, spawn_key=(0, i))`` and the
plaintexts use ``spawn_key=(1,)``, so any trace can be regenerated alone.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .exceptions import ConfigurationError
from .leakage import _HW8
from .present import (BLOCK_MASK, encrypt, encrypt_many, round1_sbox_state,
                      round1_sbox_state_many)
from .traceio import Trace, TraceSet

RNG_ALGORITHM = "numpy.PCG64 via SeedSequence(seed, spawn_key)"

REFERENCE_INTERFERERS_HZ = (11.25e6, 22.5e6, 45.08e6, 56.33e6, 78.83e6, 90.08e6, 112.66e6)
DEFAULT_INTERFERER_AMPLITUDE = 0.5


def reference_interferers(amplitude: float = DEFAULT_INTERFERER_AMPLITUDE) -> tuple:
    return tuple((f, amplitude) for f in REFERENCE_INTERFERERS_HZ)


@dataclass(frozen=True)
class SynthConfig:
    gain: float = 1.0
    noise_sigma: float = 1.0
    baseline: float = 5.0
    activity_gain: float = 2.0
    sample_rate_hz: float = 2.5e9
    samples_per_trace: int = 4096
    first_leak_offset: int = 512
    leak_spacing: int = 256
    leak_width: int = 16
    interferers: tuple = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "interferers",
                           tuple((float(f), float(a)) for f, a in self.interferers))
        self.validate()

    def validate(self) -> None:
        if self.noise_sigma < 0:
            raise ConfigurationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not self.sample_rate_hz > 0:
            raise ConfigurationError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if min(self.samples_per_trace, self.leak_spacing, self.leak_width) <= 0:
            raise ConfigurationError("samples_per_trace, leak_spacing and leak_width must be > 0")
        if self.first_leak_offset < 0:
            raise ConfigurationError("first_leak_offset must be >= 0")
        if self.leak_width > self.leak_spacing:
            raise ConfigurationError("leak_width must not exceed leak_spacing (pulses would overlap)")
        if self.first_leak_offset + 8 * self.leak_spacing > self.samples_per_trace:
            raise ConfigurationError(
                f"eight leakage windows need first_leak_offset + 8*leak_spacing "
                f"<= samples_per_trace ({self.first_leak_offset} + {8 * self.leak_spacing} "
                f"> {self.samples_per_trace})")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        for f, _ in self.interferers:
            if f < 0:
                raise ConfigurationError(f"interferer frequency must be >= 0, got {f}")

    def leak_windows(self) -> list[tuple[int, int]]:
        """``(start, stop)`` sample range of the pulse for key bytes 1..8."""
        return [(self.first_leak_offset + j * self.leak_spacing,
                 self.first_leak_offset + j * self.leak_spacing + self.leak_width)
                for j in range(8)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interferers"] = [list(x) for x in self.interferers]
        return d


def trace_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, index)))


def plaintext_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))


class _Renderer:
    """Precomputed pieces shared by every trace of one config."""

    def __init__(self, cfg: SynthConfig):
        self.cfg = cfg
        t = np.arange(cfg.samples_per_trace) / cfg.sample_rate_hz
        omega_t = 2 * np.pi * np.array([f for f, _ in cfg.interferers])[:, None] * t[None, :]
        amps = np.array([a for _, a in cfg.interferers])[:, None]
        self.sin = amps * np.sin(omega_t)
        self.cos = amps * np.cos(omega_t)
        self.pulses = np.zeros((8, cfg.samples_per_trace))
        for j, (a, b) in enumerate(cfg.leak_windows()):
            self.pulses[j, a:b] = 1.0

    def render(self, hw: np.ndarray | None, rng: np.random.Generator, active: bool) -> np.ndarray:
        cfg = self.cfg
        level = cfg.baseline * (cfg.activity_gain if active else 1.0)
        out = np.full(cfg.samples_per_trace, level)
        if hw is not None and cfg.gain != 0:
            out += (cfg.gain * hw.astype(np.float64)) @ self.pulses
        if cfg.interferers:
            phase = rng.uniform(0.0, 2 * np.pi, size=len(cfg.interferers))
            # sin(wt + phi) = sin(wt) cos(phi) + cos(wt) sin(phi)
            out += np.cos(phase) @ self.sin + np.sin(phase) @ self.cos
        if cfg.noise_sigma > 0:
            out += cfg.noise_sigma * rng.standard_normal(cfg.samples_per_trace)
        return out.astype(np.float32)


def _state_hw(state) -> np.ndarray:
    """Per-byte Hamming weights, byte 1 (most significant) first."""
    state = np.asarray(state, dtype=np.uint64)
    shifts = np.arange(56, -8, -8, dtype=np.uint64)
    return _HW8[((state[..., None] >> shifts) & np.uint64(0xFF)).astype(np.uint8)]


def synthesize_trace(pt: int, key: int, cfg: SynthConfig, rng: np.random.Generator) -> Trace:
    """One encrypting trace for plaintext ``pt`` under ``key``."""
    cfg.validate()
    hw = _state_hw(round1_sbox_state(pt, key))
    samples = _Renderer(cfg).render(hw, rng, active=True)
    return Trace(samples, pt, encrypt(pt, key))


def random_plaintexts(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, BLOCK_MASK, size=n, dtype=np.uint64, endpoint=True)


def synthesize_set(n_traces: int, key: int, cfg: SynthConfig) -> TraceSet:
    """``n_traces`` encrypting traces with uniformly random plaintexts."""
    if n_traces < 1:
        raise ConfigurationError("n_traces must be >= 1")
    cfg.validate()
    pts = random_plaintexts(n_traces, plaintext_rng(cfg.seed))
    hw = _state_hw(round1_sbox_state_many(pts, key))
    renderer = _Renderer(cfg)
    samples = np.empty((n_traces, cfg.samples_per_trace), dtype=np.float32)
    for i in range(n_traces):
        samples[i] = renderer.render(hw[i], trace_rng(cfg.seed, i), active=True)
    cts = encrypt_many(pts, key)
    return TraceSet(samples, pts, cfg.sample_rate_hz, cts, key,
                    meta={"rng": RNG_ALGORITHM, "seed": cfg.seed})


def synthesize_idle_set(n_traces: int, cfg: SynthConfig) -> TraceSet:
    """Traces of the device not encrypting: no leakage, activity gain 1.

    No encryption takes place, so plaintexts are recorded as zero and neither
    key nor ciphertexts are stored.
    """
    if n_traces < 1:
        raise ConfigurationError("n_traces must be >= 1")
    cfg.validate()
    renderer = _Renderer(cfg)
    samples = np.empty((n_traces, cfg.samples_per_trace), dtype=np.float32)
    for i in range(n_traces):
        samples[i] = renderer.render(None, trace_rng(cfg.seed, i), active=False)
    return TraceSet(samples, np.zeros(n_traces, dtype=np.uint64), cfg.sample_rate_hz,
                    meta={"rng": RNG_ALGORITHM, "seed": cfg.seed})


def synthesize_mixed_key_set(keys, cfg: SynthConfig) -> TraceSet:
    """One trace per key in ``keys``; used to probe what round-1 leakage reveals."""
    keys = [int(k) for k in keys]
    if not keys:
        raise ConfigurationError("at least one key is required")
    cfg.validate()
    pts = random_plaintexts(len(keys), plaintext_rng(cfg.seed))
    renderer = _Renderer(cfg)
    samples = np.empty((len(keys), cfg.samples_per_trace), dtype=np.float32)
    for i, (pt, k) in enumerate(zip(pts, keys)):
        hw = _state_hw(round1_sbox_state(int(pt), k))
        samples[i] = renderer.render(hw, trace_rng(cfg.seed, i), active=True)
    return TraceSet(samples, pts, cfg.sample_rate_hz, meta={"rng": RNG_ALGORITHM, "seed": cfg.seed})


def with_seed(cfg: SynthConfig, seed: int) -> SynthConfig:
    return replace(cfg, seed=seed)

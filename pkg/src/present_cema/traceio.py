"""Trace containers and the EMTS v1 binary trace-set format.

Layout (little-endian):

=======  ====  ==========================================================
offset   size  field
=======  ====  ==========================================================
0        4     magic ``b"EMTS"``
4        2     version (u16) = 1
6        2     flags (u16): bit0 key present, bit1 ciphertexts present
8        4     trace_count (u32)
12       4     samples_per_trace (u32)
16       8     sample_rate_hz (f64)
24       10    key, 80-bit little-endian integer, zeros when absent
34       ...   trace_count records of: plaintext u64, ciphertext u64
               (zeros when absent), samples_per_trace x f32
=======  ====  ==========================================================
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field, replace
from typing import BinaryIO

import numpy as np

from .exceptions import (ConfigurationError, CorruptionError, DataError,
                         FormatError, UnsupportedVersionError)
from .present import KEY_MASK

MAGIC = b"EMTS"
VERSION = 1
FLAG_KEY = 0x1
FLAG_CIPHERTEXT = 0x2
HEADER = struct.Struct("<4sHHIId10s")
HEADER_SIZE = HEADER.size  # 34
RECORD_OVERHEAD = 16


def record_dtype(samples_per_trace: int) -> np.dtype:
    return np.dtype([("plaintext", "<u8"), ("ciphertext", "<u8"),
                     ("samples", "<f4", (samples_per_trace,))])


def file_size(trace_count: int, samples_per_trace: int) -> int:
    return HEADER_SIZE + trace_count * (RECORD_OVERHEAD + 4 * samples_per_trace)


@dataclass(frozen=True)
class Trace:
    samples: np.ndarray
    plaintext: int
    ciphertext: int | None = None


@dataclass(frozen=True, eq=False)
class TraceSet:
    """A homogeneous collection of traces.

    Samples are kept as a ``(n_traces, samples_per_trace)`` float array;
    synthesized and loaded sets are float32, filtered sets float64.
    """

    samples: np.ndarray
    plaintexts: np.ndarray
    sample_rate_hz: float
    ciphertexts: np.ndarray | None = None
    key: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 2 or samples.shape[0] < 1 or samples.shape[1] < 1:
            raise DataError(f"samples must be a non-empty 2-D array, got shape {samples.shape}")
        if not np.issubdtype(samples.dtype, np.floating):
            samples = samples.astype(np.float64)
        bad = ~np.isfinite(samples).all(axis=1)
        if bad.any():
            raise DataError(f"non-finite sample in trace {int(np.flatnonzero(bad)[0])}")
        pts = np.asarray(self.plaintexts, dtype=np.uint64).reshape(-1)
        if pts.shape[0] != samples.shape[0]:
            raise DataError(f"{pts.shape[0]} plaintexts for {samples.shape[0]} traces")
        cts = self.ciphertexts
        if cts is not None:
            cts = np.asarray(cts, dtype=np.uint64).reshape(-1)
            if cts.shape[0] != samples.shape[0]:
                raise DataError(f"{cts.shape[0]} ciphertexts for {samples.shape[0]} traces")
        if not (self.sample_rate_hz > 0 and np.isfinite(self.sample_rate_hz)):
            raise DataError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.key is not None and not 0 <= self.key <= KEY_MASK:
            raise DataError("key must fit in 80 bits")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "plaintexts", pts)
        object.__setattr__(self, "ciphertexts", cts)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __getitem__(self, i: int) -> Trace:
        ct = None if self.ciphertexts is None else int(self.ciphertexts[i])
        return Trace(self.samples[i], int(self.plaintexts[i]), ct)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def n_traces(self) -> int:
        return self.samples.shape[0]

    @property
    def samples_per_trace(self) -> int:
        return self.samples.shape[1]

    @property
    def flags(self) -> int:
        return (FLAG_KEY if self.key is not None else 0) | (
            FLAG_CIPHERTEXT if self.ciphertexts is not None else 0)

    def with_samples(self, samples: np.ndarray) -> TraceSet:
        """Same metadata, new sample matrix (must keep the shape)."""
        samples = np.asarray(samples)
        if samples.shape != self.samples.shape:
            raise DataError(f"shape {samples.shape} differs from {self.samples.shape}")
        return replace(self, samples=samples)

    def subset(self, index) -> TraceSet:
        cts = None if self.ciphertexts is None else self.ciphertexts[index]
        return replace(self, samples=self.samples[index], plaintexts=self.plaintexts[index],
                       ciphertexts=cts)

    def equals(self, other: TraceSet) -> bool:
        """Structural equality, bit-exact on samples."""
        def same(a, b):
            if a is None or b is None:
                return a is b
            return a.shape == b.shape and a.dtype == b.dtype and a.tobytes() == b.tobytes()
        return (same(self.samples, other.samples) and same(self.plaintexts, other.plaintexts)
                and same(self.ciphertexts, other.ciphertexts) and self.key == other.key
                and self.sample_rate_hz == other.sample_rate_hz)


def _encode(ts: TraceSet) -> bytes:
    n, s = ts.samples.shape
    header = HEADER.pack(MAGIC, VERSION, ts.flags, n, s, ts.sample_rate_hz,
                         (ts.key or 0).to_bytes(10, "little"))
    records = np.zeros(n, dtype=record_dtype(s))
    records["plaintext"] = ts.plaintexts
    if ts.ciphertexts is not None:
        records["ciphertext"] = ts.ciphertexts
    samples32 = ts.samples.astype("<f4")
    if not np.isfinite(samples32).all():
        bad = int(np.flatnonzero(~np.isfinite(samples32).all(axis=1))[0])
        raise DataError(f"trace {bad} overflows 32-bit float storage")
    records["samples"] = samples32
    return header + records.tobytes()


def write_trace_set(ts: TraceSet, destination: BinaryIO | str | os.PathLike) -> int:
    """Write ``ts`` as EMTS v1; return the number of bytes written."""
    if not isinstance(ts, TraceSet) or len(ts) < 1:
        raise DataError("refusing to write an empty trace set")
    payload = _encode(ts)
    name = destination if isinstance(destination, (str, os.PathLike)) else getattr(
        destination, "name", repr(destination))
    try:
        if isinstance(destination, (str, os.PathLike)):
            with open(destination, "wb") as fh:
                fh.write(payload)
        else:
            destination.write(payload)
    except OSError as exc:
        raise OSError(exc.errno, f"failed writing EMTS data to {name}: {exc.strerror or exc}") from exc
    return len(payload)


def read_trace_set(source: BinaryIO | str | os.PathLike | bytes) -> TraceSet:
    """Parse EMTS v1 bytes from a path, a binary file object or a bytes buffer."""
    if isinstance(source, (bytes, bytearray, memoryview)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if len(data) < HEADER_SIZE:
        if data[:4] != MAGIC[:len(data[:4])] or len(data) < 4:
            raise FormatError("not an EMTS file (too short for a header)")
        raise CorruptionError(f"truncated header: expected {HEADER_SIZE} bytes, got {len(data)}")
    magic, version, flags, n, s, rate, key_raw = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"EMTS version {version} is not supported (expected {VERSION})")
    if flags & ~(FLAG_KEY | FLAG_CIPHERTEXT):
        raise FormatError(f"reserved flag bits set: {flags:#06x}")
    if n < 1 or s < 1:
        raise FormatError(f"empty trace set declared ({n} traces x {s} samples)")
    if not (rate > 0 and np.isfinite(rate)):
        raise FormatError(f"invalid sample rate {rate}")
    expected = file_size(n, s)
    if len(data) != expected:
        raise CorruptionError(f"payload length mismatch: expected {expected} bytes, got {len(data)}")
    records = np.frombuffer(data, dtype=record_dtype(s), count=n, offset=HEADER_SIZE)
    samples = records["samples"].astype(np.float32)
    finite = np.isfinite(samples).all(axis=1)
    if not finite.all():
        raise DataError(f"non-finite sample in trace {int(np.flatnonzero(~finite)[0])}")
    key = int.from_bytes(key_raw, "little") if flags & FLAG_KEY else None
    cts = records["ciphertext"].astype(np.uint64) if flags & FLAG_CIPHERTEXT else None
    return TraceSet(samples, records["plaintext"].astype(np.uint64), rate, cts, key)


def dumps(ts: TraceSet) -> bytes:
    buf = io.BytesIO()
    write_trace_set(ts, buf)
    return buf.getvalue()


def check_sample_rate(sample_rate_hz) -> float:
    if not (sample_rate_hz and sample_rate_hz > 0):
        raise ConfigurationError(f"sample rate must be positive, got {sample_rate_hz}")
    return float(sample_rate_hz)

"""Hamming-weight leakage model for the round-1 S-box output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError
from .present import SBOX, block_byte

N_CANDIDATES = 256
RECOVERABLE_BYTES = 8

_SBOX8 = np.array([(SBOX[v >> 4] << 4) | SBOX[v & 0xF] for v in range(256)], dtype=np.uint8)
_HW8 = np.array([bin(v).count("1") for v in range(256)], dtype=np.uint8)

# _HW_TABLE[c, p] = HW(S(p ^ c)); row c of every hypothesis matrix is a gather
# from this table.
_HW_TABLE = _HW8[_SBOX8[np.arange(256)[:, None] ^ np.arange(256)[None, :]]]


def hamming_weight(v: int, width: int = 8) -> int:
    if not 1 <= width <= 64:
        raise ConfigurationError(f"width must be in 1..64, got {width}")
    if not 0 <= v < (1 << width):
        raise ConfigurationError(f"value {v:#x} does not fit in {width} bits")
    return bin(v).count("1")


def predict_intermediate(pt_byte: int, candidate: int) -> int:
    """Round-1 S-box output byte for a plaintext byte under a key-byte guess."""
    if not (0 <= pt_byte <= 0xFF and 0 <= candidate <= 0xFF):
        raise ConfigurationError("plaintext byte and candidate must be in 0..255")
    return int(_SBOX8[pt_byte ^ candidate])


def leakage_energy(intermediate: int, gain: float, noise: float) -> float:
    """Emitted energy ``gain * HW(intermediate) + noise``."""
    return gain * hamming_weight(intermediate, 8) + noise


def check_byte_index(byte_index: int) -> int:
    # Key bytes 9 and 10 (k15..k0) are not part of K1 and never meet the
    # plaintext in round 1, so there is nothing to hypothesise about them.
    if not isinstance(byte_index, (int, np.integer)) or not 1 <= byte_index <= RECOVERABLE_BYTES:
        raise ConfigurationError(
            f"byte_index must be in 1..{RECOVERABLE_BYTES}, got {byte_index!r}; "
            "key bytes 9 and 10 do not enter the round-1 S-box layer")
    return int(byte_index)


@dataclass(frozen=True)
class HypothesisMatrix:
    """Predicted Hamming weights, one row per key-byte candidate, one column per trace."""

    byte_index: int
    values: np.ndarray

    def __post_init__(self):
        check_byte_index(self.byte_index)
        v = self.values
        if v.ndim != 2 or v.shape[0] != N_CANDIDATES or v.shape[1] < 1:
            raise ConfigurationError(f"hypothesis matrix must be 256 x N (N >= 1), got {v.shape}")
        if v.size and v.max() > 8:
            raise ConfigurationError("hypothesis entries must lie in 0..8")

    @property
    def n_traces(self) -> int:
        return self.values.shape[1]


def hypothesis_matrix(plaintexts, byte_index: int) -> HypothesisMatrix:
    """Build the 256 x N matrix of ``HW(S(pt_byte XOR candidate))``.

    Parameters
    ----------
    plaintexts : array-like of int
        64-bit plaintext blocks, one per trace.
    byte_index : int
        Key byte position 1..8 (1 = k79..k72).
    """
    byte_index = check_byte_index(byte_index)
    pts = np.atleast_1d(np.asarray(plaintexts, dtype=np.uint64))
    if pts.ndim != 1 or pts.size < 1:
        raise ConfigurationError("at least one plaintext is required")
    column = block_byte(pts, byte_index)
    return HypothesisMatrix(byte_index, _HW_TABLE[:, column])

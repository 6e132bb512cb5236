"""Brute-force completion of the 16 key bits that round 1 does not expose."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError
from .present import BLOCK_MASK, encrypt_many, round_keys_many

SEARCH_SPACE = 1 << 16
CHUNK = 1 << 13


@dataclass(frozen=True)
class PartialKey:
    """Key bytes 1..8 (k79..k16); bytes 9 and 10 unknown."""

    known: int

    def __post_init__(self):
        if not 0 <= self.known <= BLOCK_MASK:
            raise ConfigurationError("known part must be 64 bits (key bytes 1..8)")

    @classmethod
    def from_bytes(cls, data: bytes) -> PartialKey:
        if len(data) != 8:
            raise ConfigurationError(f"need 8 known key bytes, got {len(data)}")
        return cls(int.from_bytes(data, "big"))

    def candidate(self, low16: int) -> int:
        return (self.known << 16) | low16


@dataclass(frozen=True)
class BfaResult:
    key: int | None
    trials: int
    matches: list[int] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.key is not None

    @property
    def ambiguous(self) -> bool:
        return len(self.matches) > 1


def _matches_in(partial: PartialKey, lo: int, hi: int, pairs) -> list[int]:
    low = np.arange(lo, hi, dtype=np.uint64)
    rks = round_keys_many(np.uint64(partial.known), low)
    hit = np.ones(low.size, dtype=bool)
    for pt, ct in pairs:
        hit &= encrypt_many(np.full(low.size, pt, dtype=np.uint64), round_keys=rks) == np.uint64(ct)
    return [int(v) for v in low[hit]]


def complete_key(partial: PartialKey, pt: int, ct: int,
                 verify: tuple[int, int] | None = None, workers: int = 1) -> BfaResult:
    """Search key bytes 9 and 10 so that ``encrypt(pt, key) == ct``.

    All 2**16 candidates are tried in order 0x0000..0xFFFF; ``key`` is the first
    match and ``matches`` lists every match (more than one means the pair does
    not determine the key, pass ``verify`` to break the tie).
    """
    pairs = [(pt, ct)] + ([verify] if verify is not None else [])
    for a, b in pairs:
        if not (0 <= a <= BLOCK_MASK and 0 <= b <= BLOCK_MASK):
            raise ConfigurationError("plaintext/ciphertext must be 64-bit blocks")
    ranges = [(lo, min(lo + CHUNK, SEARCH_SPACE)) for lo in range(0, SEARCH_SPACE, CHUNK)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(lambda r: _matches_in(partial, *r, pairs), ranges))
    else:
        found = [_matches_in(partial, lo, hi, pairs) for lo, hi in ranges]
    lows = sorted(v for chunk in found for v in chunk)
    keys = [partial.candidate(v) for v in lows]
    return BfaResult(keys[0] if keys else None, SEARCH_SPACE, keys)

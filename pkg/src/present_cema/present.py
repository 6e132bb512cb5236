"""PRESENT-80 block cipher.

Blocks are Python ints in ``[0, 2**64)`` with bit 63 leftmost; keys are ints in
``[0, 2**80)`` with k79 leftmost.  Scalar helpers work on ints, the ``*_many``
variants work on ``uint64`` numpy arrays and are what the trace synthesizer and
the brute-force search use.

>>> format_block(encrypt(0, 0))
'5579C1387B228445'
>>> decrypt(0x5579C1387B228445, 0)
0
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError

BLOCK_BITS = 64
KEY_BITS = 80
ROUNDS = 31
BLOCK_MASK = (1 << BLOCK_BITS) - 1
KEY_MASK = (1 << KEY_BITS) - 1

SBOX = (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)
SBOX_INV = tuple(SBOX.index(y) for y in range(16))

# Bit i of the state moves to bit PBOX[i].
PBOX = tuple(63 if i == 63 else (16 * i) % 63 for i in range(64))


def sbox(x: int) -> int:
    return SBOX[x & 0xF]


def sbox_inv(y: int) -> int:
    return SBOX_INV[y & 0xF]


def _permute_bits(state: int, mapping) -> int:
    out = 0
    for i, dst in enumerate(mapping):
        out |= ((state >> i) & 1) << dst
    return out


_PBOX_INV = tuple(PBOX.index(i) for i in range(64))

# Byte-sliced lookup tables.  Entry [b][v] is the layer's output for a state
# holding byte value v at byte position b (b = 0 is the least significant byte)
# and zeros elsewhere; every layer is byte-separable so ORing 8 lookups
# evaluates it on a full state.
_SBOX8 = tuple((SBOX[v >> 4] << 4) | SBOX[v & 0xF] for v in range(256))
_SBOX8_INV = tuple((SBOX_INV[v >> 4] << 4) | SBOX_INV[v & 0xF] for v in range(256))
_P_T = tuple(tuple(_permute_bits(v << (8 * b), PBOX) for v in range(256)) for b in range(8))
_PINV_T = tuple(tuple(_permute_bits(v << (8 * b), _PBOX_INV) for v in range(256)) for b in range(8))
_SP_T = tuple(tuple(_P_T[b][_SBOX8[v]] for v in range(256)) for b in range(8))
_SINV_T = tuple(tuple(_SBOX8_INV[v] << (8 * b) for v in range(256)) for b in range(8))

_SP_NP = np.array(_SP_T, dtype=np.uint64)
_PINV_NP = np.array(_PINV_T, dtype=np.uint64)
_SINV_NP = np.array(_SINV_T, dtype=np.uint64)
_SBOX_NP = np.array(SBOX, dtype=np.uint64)


def _lookup(tables, state: int) -> int:
    out = 0
    for b in range(8):
        out |= tables[b][(state >> (8 * b)) & 0xFF]
    return out


def sbox_layer(state: int) -> int:
    out = 0
    for b in range(8):
        out |= _SBOX8[(state >> (8 * b)) & 0xFF] << (8 * b)
    return out


def sbox_layer_inv(state: int) -> int:
    return _lookup(_SINV_T, state)


def p_layer(state: int) -> int:
    return _lookup(_P_T, state)


def p_layer_inv(state: int) -> int:
    return _lookup(_PINV_T, state)


def _check_key(key: int) -> None:
    if not 0 <= key <= KEY_MASK:
        raise ConfigurationError(f"key must fit in 80 bits, got {key:#x}")


def _check_block(block: int) -> None:
    if not 0 <= block <= BLOCK_MASK:
        raise ConfigurationError(f"block must fit in 64 bits, got {block:#x}")


def key_schedule(key: int) -> list[int]:
    """Return the 32 round keys K1..K32 of an 80-bit key."""
    _check_key(key)
    reg = key
    round_keys = [reg >> 16]
    for counter in range(1, ROUNDS + 1):
        reg = ((reg << 61) | (reg >> 19)) & KEY_MASK
        reg = (SBOX[reg >> 76] << 76) | (reg & ((1 << 76) - 1))
        reg ^= counter << 15
        round_keys.append(reg >> 16)
    return round_keys


def encrypt(pt: int, key: int) -> int:
    _check_block(pt)
    round_keys = key_schedule(key)
    state = pt
    for rk in round_keys[:-1]:
        state = _lookup(_SP_T, state ^ rk)
    return state ^ round_keys[-1]


def decrypt(ct: int, key: int) -> int:
    _check_block(ct)
    round_keys = key_schedule(key)
    state = ct ^ round_keys[-1]
    for rk in reversed(round_keys[:-1]):
        state = _lookup(_SINV_T, _lookup(_PINV_T, state)) ^ rk
    return state


def round1_sbox_state(pt: int, key: int) -> int:
    """S-box layer output of round 1, ``S(pt XOR K1)``: the attacked intermediate."""
    _check_block(pt)
    _check_key(key)
    return sbox_layer(pt ^ (key >> 16))


# -- vectorised paths --------------------------------------------------------

def round_keys_many(key_hi, key_lo) -> np.ndarray:
    """Key schedule for many keys at once.

    ``key_hi`` holds bits k79..k16 and ``key_lo`` bits k15..k0 (broadcastable
    ``uint64`` arrays).  Returns an array of shape ``(32,) + broadcast_shape``.
    """
    hi, lo = np.broadcast_arrays(np.asarray(key_hi, dtype=np.uint64),
                                 np.asarray(key_lo, dtype=np.uint64))
    hi = hi.copy()
    lo = lo.copy()
    out = np.empty((ROUNDS + 1,) + hi.shape, dtype=np.uint64)
    out[0] = hi
    low60 = np.uint64((1 << 60) - 1)
    for counter in range(1, ROUNDS + 1):
        low19 = ((hi & np.uint64(7)) << np.uint64(16)) | lo
        hi, lo = ((low19 << np.uint64(45)) | (hi >> np.uint64(19)),
                  (hi >> np.uint64(3)) & np.uint64(0xFFFF))
        hi = (_SBOX_NP[hi >> np.uint64(60)] << np.uint64(60)) | (hi & low60)
        hi ^= np.uint64(counter >> 1)
        lo ^= np.uint64((counter & 1) << 15)
        out[counter] = hi
    return out


def _sp_many(state: np.ndarray) -> np.ndarray:
    out = _SP_NP[0][state & np.uint64(0xFF)]
    for b in range(1, 8):
        out |= _SP_NP[b][(state >> np.uint64(8 * b)) & np.uint64(0xFF)]
    return out


def encrypt_many(pts, key: int | None = None, *, round_keys: np.ndarray | None = None) -> np.ndarray:
    """Encrypt an array of blocks under one key, or under per-element round keys."""
    if round_keys is None:
        if key is None:
            raise ConfigurationError("either key or round_keys is required")
        round_keys = np.array(key_schedule(key), dtype=np.uint64)
    state = np.asarray(pts, dtype=np.uint64)
    for r in range(ROUNDS):
        state = _sp_many(state ^ round_keys[r])
    return state ^ round_keys[ROUNDS]


def round1_sbox_state_many(pts, key: int) -> np.ndarray:
    _check_key(key)
    x = np.asarray(pts, dtype=np.uint64) ^ np.uint64(key >> 16)
    sb = np.array(_SBOX8, dtype=np.uint64)
    out = np.zeros_like(x)
    for b in range(8):
        shift = np.uint64(8 * b)
        out |= sb[(x >> shift) & np.uint64(0xFF)] << shift
    return out


# -- encodings ---------------------------------------------------------------

def parse_block(text: str) -> int:
    text = text.strip().removeprefix("0x").removeprefix("0X")
    if len(text) != 16:
        raise ConfigurationError(f"block must be 16 hex characters, got {len(text)}")
    try:
        return int(text, 16)
    except ValueError:
        raise ConfigurationError(f"block is not valid hex: {text!r}") from None


def parse_key(text: str) -> int:
    text = text.strip().removeprefix("0x").removeprefix("0X")
    if len(text) != 20:
        raise ConfigurationError(f"key must be 20 hex characters, got {len(text)}")
    try:
        return int(text, 16)
    except ValueError:
        raise ConfigurationError(f"key is not valid hex: {text!r}") from None


def format_block(block: int) -> str:
    return f"{block:016X}"


def format_key(key: int) -> str:
    return f"{key:020X}"


def key_to_bytes(key: int) -> bytes:
    """Big-endian 10 bytes: byte 1 (index 0) holds k79..k72."""
    _check_key(key)
    return key.to_bytes(10, "big")


def key_from_bytes(data: bytes) -> int:
    if len(data) != 10:
        raise ConfigurationError(f"key needs 10 bytes, got {len(data)}")
    return int.from_bytes(data, "big")


def block_byte(block, byte_index: int):
    """Byte ``byte_index`` (1 = most significant) of a block or array of blocks."""
    shift = 8 * (8 - byte_index)
    if isinstance(block, np.ndarray):
        return ((block >> np.uint64(shift)) & np.uint64(0xFF)).astype(np.uint8)
    return (block >> shift) & 0xFF

"""Independent reference computations used as test oracles.

Nothing here imports the package under test.
"""

import math

SBOX = [0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2]


def _to_bits(value, width):
    # bits[i] is bit i (LSB = index 0)
    return [(value >> i) & 1 for i in range(width)]


def _from_bits(bits):
    return sum(b << i for i, b in enumerate(bits))


def _sbox_bits(bits):
    out = list(bits)
    for n in range(len(bits) // 4):
        nib = _from_bits(bits[4 * n:4 * n + 4])
        out[4 * n:4 * n + 4] = _to_bits(SBOX[nib], 4)
    return out


def _player_bits(bits):
    out = [0] * 64
    for i in range(64):
        dst = 63 if i == 63 else (16 * i) % 63
        out[dst] = bits[i]
    return out


def present80_encrypt(pt, key):
    """Straight-line bit-list PRESENT-80."""
    reg = _to_bits(key, 80)
    state = _to_bits(pt, 64)
    for rnd in range(1, 32):
        rk = reg[16:80]
        state = [s ^ k for s, k in zip(state, rk)]
        state = _sbox_bits(state)
        state = _player_bits(state)
        # rotate the register 61 positions to the left
        reg = [reg[(i - 61) % 80] for i in range(80)]
        top = _sbox_bits(reg[76:80])
        reg[76:80] = top
        counter = _to_bits(rnd, 5)
        for j in range(5):
            reg[15 + j] ^= counter[j]
    rk = reg[16:80]
    state = [s ^ k for s, k in zip(state, rk)]
    return _from_bits(state)


def round1_sbox_nibblewise(pt, key):
    k1 = key >> 16
    x = pt ^ k1
    out = 0
    for n in range(16):
        out |= SBOX[(x >> (4 * n)) & 0xF] << (4 * n)
    return out


def popcount(v):
    c = 0
    while v:
        c += v & 1
        v >>= 1
    return c


def naive_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)

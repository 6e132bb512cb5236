import numpy as np
import pytest

from present_cema.bfa import SEARCH_SPACE, PartialKey, complete_key
from present_cema.cema import attack_key
from present_cema.exceptions import ConfigurationError
from present_cema.present import encrypt
from present_cema.synth import SynthConfig, synthesize_set


def test_recovers_random_key(rng):
    key = (int(rng.integers(0, 2**64, dtype=np.uint64)) << 16) | int(rng.integers(0, 2**16))
    pt = int(rng.integers(0, 2**64, dtype=np.uint64))
    res = complete_key(PartialKey(key >> 16), pt, encrypt(pt, key))
    assert res.found and res.key == key
    assert res.trials <= SEARCH_SPACE
    assert not res.ambiguous


def test_wrong_partial_not_found(key):
    pt = 0x0011223344556677
    res = complete_key(PartialKey((key >> 16) ^ (1 << 40)), pt, encrypt(pt, key))
    assert not res.found and res.key is None and res.matches == []
    assert res.trials == SEARCH_SPACE


def test_verification_pair_and_workers_agree(key):
    pts = [0x1, 0xFEDCBA9876543210]
    a = complete_key(PartialKey(key >> 16), pts[0], encrypt(pts[0], key),
                     verify=(pts[1], encrypt(pts[1], key)))
    b = complete_key(PartialKey(key >> 16), pts[0], encrypt(pts[0], key), workers=3)
    assert a.key == b.key == key


def test_partial_key_validation():
    with pytest.raises(ConfigurationError):
        PartialKey(1 << 64)
    with pytest.raises(ConfigurationError):
        PartialKey.from_bytes(b"\x00" * 7)
    assert PartialKey.from_bytes(bytes(range(8))).candidate(0xBEEF) == 0x0001020304050607BEEF


def test_attack_then_complete_gives_master_key(key):
    ts = synthesize_set(256, key, SynthConfig(seed=31))
    rep = attack_key(ts)
    assert rep.all_confident
    res = complete_key(PartialKey.from_bytes(rep.recovered_bytes), ts[0].plaintext, ts[0].ciphertext)
    assert res.key == key

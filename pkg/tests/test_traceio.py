import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from present_cema.exceptions import (CorruptionError, DataError, FormatError,
                                     UnsupportedVersionError)
from present_cema.synth import SynthConfig, synthesize_set
from present_cema.traceio import (HEADER_SIZE, TraceSet, file_size, read_trace_set,
                                  write_trace_set)


def make_set(n, s, key=0x112233445566778899AA, with_ct=True, seed=0):
    rng = np.random.default_rng(seed)
    return TraceSet(rng.standard_normal((n, s)).astype(np.float32),
                    rng.integers(0, 2**64, size=n, dtype=np.uint64), 2.5e9,
                    rng.integers(0, 2**64, size=n, dtype=np.uint64) if with_ct else None, key)


def roundtrip(ts):
    buf = io.BytesIO()
    n = write_trace_set(ts, buf)
    data = buf.getvalue()
    assert n == len(data)
    return read_trace_set(data), data


def test_header_is_34_bytes():
    assert HEADER_SIZE == 34


def test_one_trace_four_samples_is_66_bytes():
    back, data = roundtrip(make_set(1, 4))
    assert len(data) == 66
    assert data[:4] == b"EMTS"
    assert struct.unpack_from("<HH", data, 4) == (1, 3)


def test_roundtrip_256_trace_synthetic_set(tmp_path):
    ts = synthesize_set(256, 0x0123456789ABCDEF1357, SynthConfig(seed=3))
    path = tmp_path / "a.emts"
    assert write_trace_set(ts, path) == file_size(256, 4096)
    back = read_trace_set(path)
    assert back.equals(ts)
    assert back.key == ts.key and back.flags == 3


@pytest.mark.parametrize("key, with_ct, flags", [(None, False, 0), (5, False, 1), (None, True, 2)])
def test_flags_preserved(key, with_ct, flags):
    ts = make_set(3, 5, key=key, with_ct=with_ct)
    back, data = roundtrip(ts)
    assert back.flags == flags and back.equals(ts)
    # absent fields are zero-filled
    if key is None:
        assert data[24:34] == bytes(10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 64), st.booleans(), st.booleans())
def test_size_formula_and_roundtrip(n, s, has_key, has_ct):
    ts = make_set(n, s, key=7 if has_key else None, with_ct=has_ct, seed=n * 100 + s)
    back, data = roundtrip(ts)
    assert len(data) == 34 + n * (16 + 4 * s)
    assert back.equals(ts)
    again = io.BytesIO()
    write_trace_set(back, again)
    assert again.getvalue() == data


def test_zero_traces_rejected():
    with pytest.raises(DataError):
        TraceSet(np.zeros((0, 4), np.float32), np.zeros(0, np.uint64), 1.0)


def test_bad_magic():
    _, data = roundtrip(make_set(2, 4))
    with pytest.raises(FormatError):
        read_trace_set(b"XXXX" + data[4:])


def test_unsupported_version():
    _, data = roundtrip(make_set(2, 4))
    with pytest.raises(UnsupportedVersionError):
        read_trace_set(data[:4] + struct.pack("<H", 2) + data[6:])


def test_truncated_mid_trace_names_lengths():
    _, data = roundtrip(make_set(3, 8))
    with pytest.raises(CorruptionError, match=f"expected {len(data)} bytes, got {len(data) - 10}"):
        read_trace_set(data[:-10])


def test_non_finite_sample_names_trace():
    _, data = roundtrip(make_set(3, 4))
    bad = bytearray(data)
    off = 34 + 2 * (16 + 16) + 16 + 4
    bad[off:off + 4] = struct.pack("<f", float("nan"))
    with pytest.raises(DataError, match="trace 2"):
        read_trace_set(bytes(bad))


def test_sink_failure_is_io_error():
    class Broken(io.RawIOBase):
        name = "broken-sink"

        def writable(self):
            return True

        def write(self, b):
            raise OSError(28, "No space left on device")

    with pytest.raises(OSError, match="broken-sink"):
        write_trace_set(make_set(1, 4), Broken())


def test_trace_access():
    ts = make_set(4, 6)
    tr = ts[2]
    assert tr.plaintext == int(ts.plaintexts[2]) and tr.ciphertext == int(ts.ciphertexts[2])
    assert tr.samples.shape == (6,)
    assert len(list(ts)) == 4

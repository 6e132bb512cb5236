import numpy as np
import pytest

from present_cema.exceptions import ConfigurationError, DataError
from present_cema.sema import compare_sets, rms
from present_cema.synth import SynthConfig, synthesize_idle_set, synthesize_set
from present_cema.traceio import TraceSet


def as_set(x, rate=1e9):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return TraceSet(x, np.zeros(x.shape[0], dtype=np.uint64), rate)


def test_rms_examples():
    assert rms(np.full(10, 2.0), 3, 8) == 2.0
    assert rms(np.array([3.0, -3.0, 3.0, -3.0])) == 3.0


def test_rms_matches_two_pass_oracle(rng):
    x = rng.standard_normal(777)
    total = 0.0
    for v in x[100:600]:
        total += v * v
    assert rms(x, 100, 600) == pytest.approx((total / 500) ** 0.5, rel=1e-12)


def test_rms_scale_equivariance(rng):
    x = rng.standard_normal(100)
    for a in (-3.0, 0.5, 7.0):
        assert rms(a * x) == pytest.approx(abs(a) * rms(x), rel=1e-12)


@pytest.mark.parametrize("s, e", [(5, 5), (6, 5), (-1, 3), (0, 11)])
def test_empty_or_invalid_segment(s, e):
    with pytest.raises(ConfigurationError):
        rms(np.ones(10), s, e)


def test_identical_sets_ratio_one(rng):
    a = as_set(rng.standard_normal((4, 50)))
    assert compare_sets(a, a).ratio_rms == 1.0


def test_swap_inverts_ratio(rng):
    a = as_set(rng.standard_normal((4, 50)) + 2)
    b = as_set(rng.standard_normal((3, 50)))
    r1 = compare_sets(a, b).ratio_rms
    r2 = compare_sets(b, a).ratio_rms
    assert r1 * r2 == pytest.approx(1.0, abs=1e-15)


def test_synthetic_doubling(key):
    cfg = SynthConfig(noise_sigma=0.1, seed=6)
    rep = compare_sets(synthesize_set(64, key, cfg), synthesize_idle_set(64, cfg))
    assert 1.8 <= rep.ratio_rms <= 2.2
    assert rep.peak_active > rep.peak_idle
    assert rep.per_trace_rms_active.shape == (64,)
    assert rep.rms_idle > 0


def test_zero_idle_rejected():
    with pytest.raises(DataError):
        compare_sets(as_set(np.ones((2, 5))), as_set(np.zeros((2, 5))))


def test_mismatched_rates_rejected():
    with pytest.raises(DataError):
        compare_sets(as_set(np.ones((2, 5)), 1e9), as_set(np.ones((2, 5)), 2e9))


def test_report_json_fields(rng):
    rep = compare_sets(as_set(rng.standard_normal((2, 8))), as_set(rng.standard_normal((2, 8))))
    d = rep.to_dict(per_trace=True)
    assert d["ratio_rms"] == rep.rms_active / rep.rms_idle
    assert len(d["per_trace_rms_idle"]) == 2

"""Correlation EM attack on the round-1 S-box output of PRESENT-80.

The engine correlates Hamming-weight hypotheses for each of the 256 values of
a key byte against every sample column and ranks candidates by their peak
absolute Pearson coefficient.

Trace grouping keeps the heavy step small: hypotheses depend on a trace only
through its plaintext byte, so with centred traces ``Tc``

    sum_t H[c, t] * Tc[t, s] = sum_v HW(S(v ^ c)) * G[v, s],
    G[v, s] = sum_{t : p_t = v} Tc[t, s],

which turns an ``256 x N x S`` product into ``256 x 256 x S``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator

from ._validation import check_plaintexts, check_trace_matrix
from .dsp import BandFilter, BandSpec
from .exceptions import ConfigurationError, DataError, UndefinedCorrelationError
from .leakage import _HW_TABLE, N_CANDIDATES, HypothesisMatrix, check_byte_index
from .present import block_byte, key_to_bytes
from .synth import RNG_ALGORITHM, SynthConfig, synthesize_mixed_key_set, synthesize_set, with_seed
from .traceio import TraceSet

DEFAULT_SIGMA_FLOOR = 4.0
DEFAULT_ALPHA = 0.01


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient of two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise DataError(f"vectors must be 1-D with equal lengths, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DataError("correlation needs at least two observations")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    xc = x - x.mean()
    yc = y - y.mean()
    n = x.size
    cov = np.dot(xc, yc) / (n - 1)
    return float(cov / (np.sqrt(np.dot(xc, xc) / (n - 1)) * np.sqrt(np.dot(yc, yc) / (n - 1))))


@dataclass(frozen=True)
class CorrelationSurface:
    """Pearson coefficients, one row per candidate, one column per sample."""

    byte_index: int
    rho: np.ndarray
    constant_samples: np.ndarray
    undefined_candidates: np.ndarray
    peak_values: np.ndarray = field(init=False)
    peak_samples: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.rho.ndim != 2 or self.rho.shape[0] != N_CANDIDATES:
            raise DataError(f"surface must be 256 x S, got {self.rho.shape}")
        mag = np.abs(self.rho)
        object.__setattr__(self, "peak_samples", mag.argmax(axis=1))
        object.__setattr__(self, "peak_values", mag.max(axis=1))

    def to_rows(self):
        """``(candidate, sample, rho)`` triples in row-major order."""
        c, s = np.indices(self.rho.shape)
        return zip(c.ravel().tolist(), s.ravel().tolist(), self.rho.ravel().tolist())


class _CentredTraces:
    """Column-centred traces shared by all byte positions of one attack."""

    def __init__(self, samples: np.ndarray):
        x = np.asarray(samples, dtype=np.float64)
        self.n = x.shape[0]
        self.constant = np.ptp(x, axis=0) == 0
        self.centred = x - x.mean(axis=0)
        self.centred[:, self.constant] = 0.0
        norms = np.sqrt(np.einsum("ts,ts->s", self.centred, self.centred))
        norms[self.constant] = 1.0
        self.norms = norms

    def grouped(self, pt_bytes: np.ndarray) -> np.ndarray:
        order = np.argsort(pt_bytes, kind="stable")
        sorted_bytes = pt_bytes[order]
        starts = np.flatnonzero(np.r_[True, sorted_bytes[1:] != sorted_bytes[:-1]])
        sums = np.add.reduceat(self.centred[order], starts, axis=0)
        g = np.zeros((256, self.centred.shape[1]))
        g[sorted_bytes[starts]] = sums
        return g


def _surface(ct: _CentredTraces, pt_bytes: np.ndarray, byte_index: int) -> CorrelationSurface:
    hyp = _HW_TABLE[:, pt_bytes].astype(np.float64)
    hc = hyp - hyp.mean(axis=1, keepdims=True)
    hnorm = np.sqrt(np.einsum("ct,ct->c", hc, hc))
    undefined = np.ptp(_HW_TABLE[:, pt_bytes], axis=1) == 0
    hnorm[undefined] = 1.0
    num = _HW_TABLE.astype(np.float64) @ ct.grouped(pt_bytes)
    rho = num / hnorm[:, None] / ct.norms[None, :]
    rho[undefined, :] = 0.0
    return CorrelationSurface(byte_index, rho, ct.constant.copy(), undefined)


def correlation_surface(hyp: HypothesisMatrix, traces) -> CorrelationSurface:
    """Correlate every hypothesis row with every sample column.

    ``traces`` is a :class:`TraceSet` or a ``(N, S)`` sample array.  Columns
    that are constant over the traces, and hypothesis rows that are constant,
    get ``rho = 0`` and are flagged in ``constant_samples`` /
    ``undefined_candidates``.
    """
    samples = traces.samples if isinstance(traces, TraceSet) else traces
    samples = check_trace_matrix(samples, min_traces=2)
    if hyp.n_traces != samples.shape[0]:
        raise DataError(
            f"hypothesis covers {hyp.n_traces} traces but the set holds {samples.shape[0]}")
    ct = _CentredTraces(samples)
    h = hyp.values.astype(np.float64)
    hc = h - h.mean(axis=1, keepdims=True)
    undefined = np.ptp(hyp.values, axis=1) == 0
    hnorm = np.sqrt(np.einsum("ct,ct->c", hc, hc))
    hnorm[undefined] = 1.0
    rho = (hc @ ct.centred) / hnorm[:, None] / ct.norms[None, :]
    rho[undefined, :] = 0.0
    return CorrelationSurface(hyp.byte_index, rho, ct.constant.copy(), undefined)


@dataclass(frozen=True)
class RankedCandidate:
    value: int
    peak: float
    sample_index: int


def rank_candidates(surface: CorrelationSurface) -> list[RankedCandidate]:
    """All 256 candidates by peak ``|rho|`` descending, smaller value first on ties."""
    values = np.arange(N_CANDIDATES)
    order = np.lexsort((values, -surface.peak_values))
    return [RankedCandidate(int(c), float(surface.peak_values[c]), int(surface.peak_samples[c]))
            for c in order]


def noise_floor(n_traces: int, n_samples: int, sigma_floor: float = DEFAULT_SIGMA_FLOOR,
                alpha: float = DEFAULT_ALPHA) -> float:
    """Confidence threshold on a byte's peak ``|rho|``.

    At least ``sigma_floor / sqrt(N)``, raised to the level that the maximum
    of ``256 * n_samples`` null correlations exceeds with probability at most
    ``alpha`` (Bonferroni bound, exact t distribution of ``rho``).
    """
    if n_traces < 4:
        return 1.0
    df = n_traces - 2
    t = stats.t.isf(alpha / (2 * N_CANDIDATES * n_samples), df)
    bonferroni = t / np.sqrt(df + t * t)
    return float(min(1.0, max(sigma_floor / np.sqrt(n_traces), bonferroni)))


@dataclass(frozen=True)
class ByteResult:
    byte_index: int
    ranking: list[RankedCandidate]
    threshold: float
    true_value: int | None = None

    @property
    def recovered(self) -> int:
        return self.ranking[0].value

    @property
    def peak(self) -> float:
        return self.ranking[0].peak

    @property
    def sample_index(self) -> int:
        return self.ranking[0].sample_index

    @property
    def margin(self) -> float:
        second = self.ranking[1].peak
        return float("inf") if second == 0 else self.peak / second

    @property
    def confident(self) -> bool:
        return self.peak > self.threshold

    @property
    def correct(self) -> bool | None:
        return None if self.true_value is None else self.recovered == self.true_value

    def to_dict(self, top_k: int = 5) -> dict:
        d = {
            "byte_index": self.byte_index,
            "recovered": f"{self.recovered:02X}",
            "peak_rho": self.peak,
            "sample_index": self.sample_index,
            "margin": None if np.isinf(self.margin) else self.margin,
            "threshold": self.threshold,
            "confident": self.confident,
            "top": [{"candidate": f"{r.value:02X}", "peak_rho": r.peak, "sample_index": r.sample_index}
                    for r in self.ranking[:top_k]],
        }
        if self.true_value is not None:
            d["true_value"] = f"{self.true_value:02X}"
            d["correct"] = self.correct
        return d


@dataclass(frozen=True)
class AttackReport:
    bytes: list[ByteResult]
    traces_used: int
    bands: tuple = ()

    @property
    def recovered_bytes(self) -> bytes:
        return bytes(b.recovered for b in self.bytes)

    @property
    def all_confident(self) -> bool:
        return all(b.confident for b in self.bytes)

    @property
    def n_correct(self) -> int | None:
        flags = [b.correct for b in self.bytes]
        return None if None in flags else sum(flags)

    def byte(self, byte_index: int) -> ByteResult:
        return next(b for b in self.bytes if b.byte_index == byte_index)

    def to_dict(self, top_k: int = 5) -> dict:
        d = {
            "traces_used": self.traces_used,
            "recovered_bytes": self.recovered_bytes.hex().upper(),
            "all_confident": self.all_confident,
            "bands": [{"low_hz": b.low_hz, "high_hz": b.high_hz, "mode": b.mode} for b in self.bands],
            "bytes": [b.to_dict(top_k) for b in self.bytes],
        }
        if self.n_correct is not None:
            d["n_correct"] = self.n_correct
        return d


class CEMAttack(BaseEstimator):
    """Key-byte recovery by correlation against a Hamming-weight model.

    Parameters
    ----------
    bands : BandSpec or sequence of BandSpec
        Optional FFT mask applied to the traces before correlating.
    sample_rate_hz : float, optional
        Needed only when ``bands`` is non-empty.
    byte_indices : sequence of int
        Key bytes to attack, each in 1..8.
    sigma_floor, alpha : float
        Parameters of :func:`noise_floor`.
    keep_surfaces : bool
        Keep the full correlation surfaces in ``surfaces_``.

    Attributes
    ----------
    report_ : AttackReport
    key_bytes_ : bytes
        Rank-1 candidate per attacked byte.
    surfaces_ : dict[int, CorrelationSurface]
    threshold_ : float
    """

    def __init__(self, bands=(), sample_rate_hz=None, byte_indices=tuple(range(1, 9)),
                 sigma_floor=DEFAULT_SIGMA_FLOOR, alpha=DEFAULT_ALPHA, keep_surfaces=False):
        self.bands = bands
        self.sample_rate_hz = sample_rate_hz
        self.byte_indices = byte_indices
        self.sigma_floor = sigma_floor
        self.alpha = alpha
        self.keep_surfaces = keep_surfaces

    def _band_list(self) -> list[BandSpec]:
        return [self.bands] if isinstance(self.bands, BandSpec) else list(self.bands or ())

    def fit(self, X, y, true_key: int | None = None):
        """Attack traces ``X`` (N x S) recorded for plaintexts ``y`` (N,)."""
        X = check_trace_matrix(X, min_traces=2)
        pts = check_plaintexts(y, X.shape[0])
        byte_indices = [check_byte_index(b) for b in self.byte_indices]
        bands = self._band_list()
        if bands:
            if self.sample_rate_hz is None:
                raise ConfigurationError("sample_rate_hz is required when filtering")
            X = BandFilter(bands, self.sample_rate_hz).fit_transform(X)
        centred = _CentredTraces(X)
        self.threshold_ = noise_floor(X.shape[0], X.shape[1], self.sigma_floor, self.alpha)
        truth = key_to_bytes(true_key) if true_key is not None else None
        self.surfaces_ = {}
        results = []
        for b in byte_indices:
            surface = _surface(centred, block_byte(pts, b), b)
            if self.keep_surfaces:
                self.surfaces_[b] = surface
            results.append(ByteResult(b, rank_candidates(surface), self.threshold_,
                                      None if truth is None else truth[b - 1]))
        self.report_ = AttackReport(results, X.shape[0], tuple(bands))
        self.key_bytes_ = self.report_.recovered_bytes
        return self


def attack_key(ts: TraceSet, bands: BandSpec | Sequence[BandSpec] = (), **params) -> AttackReport:
    """Recover the 8 bytes of K1 (key bytes 1..8) from a trace set.

    Key bytes 9 and 10 never meet the plaintext in round 1 and are not
    attacked.  When ``ts`` carries its ground-truth key, per-byte correctness
    is recorded in the report.
    """
    if len(ts) < 2:
        raise DataError("the attack needs at least two traces")
    est = CEMAttack(bands=bands, sample_rate_hz=ts.sample_rate_hz, **params)
    est.fit(ts.samples, ts.plaintexts, true_key=ts.key)
    return est.report_


# -- success-rate harness ----------------------------------------------------

PATTERNS = {0x00: "00000000b", 0x55: "01010101b", 0xAA: "10101010b", 0xFF: "11111111b"}


def parse_pattern(pattern) -> int:
    """Accept ``0x55``, ``"55"``, ``"0x55"`` or ``"01010101b"``."""
    if isinstance(pattern, (int, np.integer)):
        value = int(pattern)
    else:
        text = str(pattern).strip().lower()
        try:
            if text.endswith("b") and len(text) == 9:
                value = int(text[:-1], 2)
            else:
                value = int(text.removeprefix("0x"), 16)
        except ValueError:
            raise ConfigurationError(f"unrecognised key pattern {pattern!r}") from None
    if value not in PATTERNS:
        raise ConfigurationError(
            f"key pattern must be one of {', '.join(PATTERNS.values())}, got {pattern!r}")
    return value


def pattern_key(pattern) -> int:
    return int.from_bytes(bytes([parse_pattern(pattern)]) * 10, "big")


@dataclass(frozen=True)
class SrReport:
    pattern: str
    runs: int
    traces_per_run: int
    successes: np.ndarray
    seed: int

    @property
    def success_rate(self) -> np.ndarray:
        return self.successes / self.runs

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "runs": self.runs,
            "traces_per_run": self.traces_per_run,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "successes": self.successes.tolist(),
            "success_rate": self.success_rate.tolist(),
        }


def run_seeds(master_seed: int, runs: int) -> list[int]:
    ss = np.random.SeedSequence(master_seed, spawn_key=(2,))
    return [int(s) for s in ss.generate_state(runs, dtype=np.uint64)]


def success_rate(pattern, runs: int, traces_per_run: int, cfg: SynthConfig | None = None,
                 bands: BandSpec | Sequence[BandSpec] = ()) -> SrReport:
    """Per-byte fraction of ``runs`` fresh synthetic attacks that rank the true byte first.

    Run r uses a seed derived from ``cfg.seed``, so the report is a pure
    function of the arguments.
    """
    if runs < 1:
        raise ConfigurationError("runs must be >= 1")
    cfg = cfg or SynthConfig()
    value = parse_pattern(pattern)
    key = pattern_key(value)
    successes = np.zeros(8, dtype=np.int64)
    for seed in run_seeds(cfg.seed, runs):
        report = attack_key(synthesize_set(traces_per_run, key, with_seed(cfg, seed)), bands)
        successes += np.array([b.recovered == value for b in report.bytes], dtype=np.int64)
    return SrReport(PATTERNS[value], runs, traces_per_run, successes, cfg.seed)


# -- key bytes 9 and 10 ------------------------------------------------------

def residual_byte_leakage(n_traces: int, cfg: SynthConfig | None = None,
                          k1: int | None = None) -> dict[int, float]:
    """Peak ``|rho|`` of hypotheses keyed on key bytes 9 and 10 over round-1 leakage.

    Traces share the top 64 key bits ``k1`` while bytes 9 and 10 vary per
    trace.  The hypothesis for key byte ``b`` is ``HW(S(p_{b-8} ^ k_b))`` with
    the true per-trace value of ``k_b``, correlated against every sample of
    the eight leakage windows.  Round 1 never touches ``k_b``, so these peaks
    stay at the null level.
    """
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(3,)))
    if k1 is None:
        k1 = int(rng.integers(0, 2**64, dtype=np.uint64))
    low = rng.integers(0, 2**16, size=n_traces, dtype=np.uint64)
    ts = synthesize_mixed_key_set([(k1 << 16) | int(v) for v in low], cfg)
    cols = np.concatenate([np.arange(a, b) for a, b in cfg.leak_windows()])
    ct = _CentredTraces(ts.samples[:, cols])
    out = {}
    for b, key_byte in ((9, low >> np.uint64(8)), (10, low & np.uint64(0xFF))):
        p = block_byte(ts.plaintexts, b - 8)
        h = _HW_TABLE[0, p ^ key_byte.astype(np.uint8)].astype(np.float64)
        hc = h - h.mean()
        rho = (hc @ ct.centred) / np.sqrt(hc @ hc) / ct.norms
        out[b] = float(np.abs(rho).max())
    return out

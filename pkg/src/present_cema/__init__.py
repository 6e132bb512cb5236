"""Correlation EM analysis of PRESENT-80 on synthetic Hamming-weight traces."""

from .bfa import BfaResult, PartialKey, complete_key
from .cema import (AttackReport, CEMAttack, CorrelationSurface, SrReport, attack_key,
                   correlation_surface, pearson, rank_candidates, success_rate)
from .dsp import BandFilter, BandSpec, Spectrum, band_filter, fft_magnitude, spectrogram
from .exceptions import (CemaError, ConfigurationError, CorruptionError, DataError,
                         FormatError, UndefinedCorrelationError, UnsupportedVersionError)
from .leakage import (HypothesisMatrix, hamming_weight, hypothesis_matrix, leakage_energy,
                      predict_intermediate)
from .present import decrypt, encrypt, key_schedule, round1_sbox_state
from .sema import SemaReport, compare_sets, rms
from .synth import SynthConfig, synthesize_idle_set, synthesize_set, synthesize_trace
from .traceio import Trace, TraceSet, read_trace_set, write_trace_set

__version__ = "0.1.0"

"""Input validation helpers built on scikit-learn's ``check_array``."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import DataError


def check_trace_matrix(X, min_traces: int = 1, min_samples: int = 1) -> np.ndarray:
    """Return ``X`` as a finite float64 ``(n_traces, n_samples)`` array."""
    try:
        return check_array(X, dtype=np.float64, ensure_all_finite=True,
                           ensure_min_samples=min_traces, ensure_min_features=min_samples)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def check_finite_1d(x, min_len: int = 1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError(f"expected a 1-D signal, got shape {x.shape}")
    if x.size < min_len:
        raise DataError(f"signal needs at least {min_len} samples, got {x.size}")
    if not np.isfinite(x).all():
        raise DataError(f"non-finite value at sample {int(np.flatnonzero(~np.isfinite(x))[0])}")
    return x


def check_plaintexts(y, n_traces: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_traces:
        raise DataError(f"expected {n_traces} plaintexts, got shape {y.shape}")
    if not (np.issubdtype(y.dtype, np.integer) or y.dtype == object):
        raise DataError(f"plaintexts must be integers, got dtype {y.dtype}")
    return y.astype(np.uint64)

"""Input checks for the array-based estimator interface."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_samples(X) -> np.ndarray:
    """Training rows: (n_samples, n_streams) dBm values, NaN marks a dropped sample."""
    X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
    finite = X[np.isfinite(X)]
    if np.isinf(X).any():
        raise ValueError("RSSI values must be finite or NaN")
    if not np.array_equal(finite, np.round(finite)):
        raise ValueError("RSSI values must be whole dBm")
    return X


def check_windows(X, m: int, n_streams: int) -> np.ndarray:
    """Validate flattened windows and reshape them to (n_windows, n_streams, m).

    Each row holds ``m`` consecutive time steps of ``n_streams`` values,
    time-major: ``[t0 s0, t0 s1, ..., t1 s0, ...]``.
    """
    X = check_array(X, dtype=float)
    if X.shape[1] != m * n_streams:
        raise ValueError(
            f"expected {m * n_streams} columns (m={m} x {n_streams} streams), got {X.shape[1]}"
        )
    if not np.array_equal(X, np.round(X)):
        raise ValueError("RSSI values must be whole dBm")
    return X.astype(np.int64).reshape(len(X), m, n_streams).transpose(0, 2, 1)


def make_windows(X, m: int, mode: str = "block") -> np.ndarray:
    """Cut a (T, n_streams) time series into flattened windows of ``m`` steps.

    ``block`` windows do not overlap; ``moving`` windows advance one step.
    """
    X = check_array(X, dtype=float)
    if m < 1:
        raise ValueError("m must be >= 1")
    T, q = X.shape
    if T < m:
        raise ValueError(f"time series of length {T} cannot fill a window of m={m}")
    if mode == "block":
        n = T // m
        return X[: n * m].reshape(n, m * q)
    if mode == "moving":
        view = np.lib.stride_tricks.sliding_window_view(X, m, axis=0)  # (T-m+1, q, m)
        return np.ascontiguousarray(view.transpose(0, 2, 1)).reshape(-1, m * q)
    raise ValueError("mode must be 'block' or 'moving'")

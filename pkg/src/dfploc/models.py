"""
scikit-learn compatible wrappers.

``fit`` takes training rows ``X`` of shape (n_samples, n_streams), one row
per time step, with ``y`` naming the calibration location of each row.
Prediction takes flattened windows of ``m`` time steps (see
:func:`dfploc.validation.make_windows`).
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import Location, RssiSample, SmoothingConfig, StreamId
from .estimators import (
    batch_log_likelihood,
    best_index,
    normalize_log_scores,
    signal_space_distances,
)
from .postprocess import center_of_mass, running_time_average, top_k_order
from .radiomap import TrainingTrace, _check_in_range, build_radio_map
from .validation import check_samples, check_windows


def _default_streams(q):
    return tuple(StreamId(f"AP{i + 1}", "MP1") for i in range(q))


class _RadioMapEstimator(BaseEstimator):
    """Shared fitting: one radio map from labelled training rows."""

    def _fit_map(self, X, y, coords=None):
        X = check_samples(X)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one label per training row")
        q = X.shape[1]
        streams = tuple(self.streams) if self.streams is not None else _default_streams(q)
        if len(streams) != q:
            raise ValueError(f"{len(streams)} stream names given for {q} columns")
        self.classes_ = np.unique(y)
        positions = self._positions(y, coords)

        traces = []
        for label in self.classes_:
            rows = X[y == label]
            samples = [
                RssiSample(streams[si], int(v), float(t))
                for t, row in enumerate(rows)
                for si, v in enumerate(row)
                if np.isfinite(v)
            ]
            x, yy = positions.get(label, (0.0, 0.0))
            traces.append(TrainingTrace(Location(str(label), x, yy), samples))
        self.radio_map_ = build_radio_map(
            traces,
            streams,
            tuple(self.rssi_range),
            SmoothingConfig(self.smoothing_floor, self.smoothing),
        )
        self.streams_ = streams
        self.n_features_in_ = q
        self.has_coords_ = coords is not None
        return self

    def _positions(self, y, coords):
        if coords is None:
            return {}
        if isinstance(coords, dict):
            return {label: tuple(map(float, coords[label])) for label in self.classes_}
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (len(y), 2):
            raise ValueError("coords must be a label->(x, y) mapping or an (n_samples, 2) array")
        seen = defaultdict(set)
        for label, c in zip(y, coords):
            seen[label].add(tuple(c))
        out = {}
        for label, pts in seen.items():
            if len(pts) != 1:
                raise ValueError(f"location {label!r} has inconsistent coordinates")
            out[label] = pts.pop()
        return out

    def _windows(self, X):
        check_is_fitted(self, "radio_map_")
        W = check_windows(X, self.m, self.n_features_in_)
        _check_in_range(W, self.radio_map_.rssi_range)
        return W

    def _require_coords(self):
        if not self.has_coords_:
            raise ValueError("fit was called without coords; coordinates are unavailable")


class HistogramBayesLocalizer(ClassifierMixin, _RadioMapEstimator):
    """Maximum-likelihood calibration location from per-stream RSS histograms.

    ``predict_coords`` refines the estimate to the posterior-weighted center
    of mass of the ``k`` most probable locations.
    """

    def __init__(
        self,
        m=26,
        k=2,
        rssi_range=(-100, 0),
        smoothing_floor=1e-3,
        smoothing="additive",
        streams=None,
    ):
        self.m = m
        self.k = k
        self.rssi_range = rssi_range
        self.smoothing_floor = smoothing_floor
        self.smoothing = smoothing
        self.streams = streams

    def fit(self, X, y, coords=None):
        return self._fit_map(X, y, coords)

    def predict_log_likelihood(self, X):
        W = self._windows(X)
        return batch_log_likelihood(self.radio_map_, W, range(self.n_features_in_))

    def predict_proba(self, X):
        return normalize_log_scores(self.predict_log_likelihood(X))

    def predict(self, X):
        ll = self.predict_log_likelihood(X)
        order = np.arange(len(self.classes_))
        return self.classes_[[best_index(row, order) for row in ll]]

    def predict_coords(self, X):
        self._require_coords()
        post = self.predict_proba(X)
        coords = self.radio_map_.coords
        order = np.arange(len(self.classes_))
        k = min(self.k, len(self.classes_))
        out = np.empty((len(post), 2))
        for i, p in enumerate(post):
            idx = top_k_order(p, order, k)
            out[i] = center_of_mass(coords[idx], p[idx])
        return out


class SignalSpaceNNLocalizer(ClassifierMixin, _RadioMapEstimator):
    """Nearest calibration location in mean-RSS space.

    ``predict_coords`` returns the unweighted centroid of the ``k`` nearest.
    """

    def __init__(self, m=26, k=1, rssi_range=(-100, 0), streams=None):
        self.m = m
        self.k = k
        self.rssi_range = rssi_range
        self.streams = streams

    # histogram smoothing is irrelevant to mean matching
    smoothing_floor = 1e-3
    smoothing = "additive"

    def fit(self, X, y, coords=None):
        return self._fit_map(X, y, coords)

    def _distances(self, X):
        W = self._windows(X)
        return signal_space_distances(self.radio_map_, W.mean(axis=2), range(self.n_features_in_))

    def predict(self, X):
        d2 = self._distances(X)
        order = np.arange(len(self.classes_))
        return self.classes_[[best_index(row, order, maximize=False) for row in d2]]

    def predict_coords(self, X):
        self._require_coords()
        d2 = self._distances(X)
        coords = self.radio_map_.coords
        order = np.arange(len(self.classes_))
        k = min(self.k, len(self.classes_))
        return np.array([coords[np.lexsort((order, row))[:k]].mean(axis=0) for row in d2])


class TimeAverager(TransformerMixin, BaseEstimator):
    """Replace each row of an (n, 2) estimate sequence by the mean of the last ``w`` rows."""

    def __init__(self, w=5):
        self.w = w

    def fit(self, X, y=None):
        if self.w < 1:
            raise ValueError("w must be >= 1")
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return running_time_average(np.asarray(X, dtype=float), self.w)

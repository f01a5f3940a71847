"""
Discrete-space location estimators.

The probabilistic estimator scores every calibrated location by the
log-likelihood of a window of samples under that location's per-stream
histograms (streams and samples treated as independent) and returns the
maximum a-posteriori location under a uniform prior. Two baselines are
provided: nearest neighbour on per-stream mean RSS, and a uniform draw
over the bounding box of the calibrated area.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .core import Location, PassiveRadioMap, SignalWindow, StreamId
from .errors import EmptyRadioMap, InsufficientSamples, OutOfRangeValue, UnknownStream

TIE_BREAKS = ("lowest-id", "map-order")

SeedLike = Union[None, int, np.random.Generator, np.random.SeedSequence]


@dataclass(frozen=True)
class EstimatorConfig:
    """``m`` samples per stream per estimate over ``active_streams`` (None = all)."""

    m: int = 26
    active_streams: Optional[Tuple[StreamId, ...]] = None
    tie_break: str = "lowest-id"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.active_streams is not None:
            streams = tuple(self.active_streams)
            if not streams:
                raise ValueError("active_streams must be non-empty")
            object.__setattr__(self, "active_streams", streams)
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")

    @property
    def n(self) -> Optional[int]:
        return None if self.active_streams is None else len(self.active_streams)

    def streams_for(self, radio_map: PassiveRadioMap) -> Tuple[StreamId, ...]:
        streams = radio_map.streams if self.active_streams is None else self.active_streams
        for s in streams:
            radio_map.stream_index(s)
        return streams


@dataclass(frozen=True, eq=False)
class PosteriorVector:
    """Per-location log-likelihood and normalized posterior, in radio-map order."""

    location_ids: Tuple[str, ...]
    log_likelihood: np.ndarray
    probabilities: np.ndarray

    @property
    def scores(self) -> Dict[str, float]:
        return dict(zip(self.location_ids, map(float, self.log_likelihood)))

    @property
    def normalized(self) -> Dict[str, float]:
        return dict(zip(self.location_ids, map(float, self.probabilities)))


def normalize_log_scores(scores: np.ndarray) -> np.ndarray:
    """Softmax along the last axis, shifted by the max for stability."""
    shifted = scores - scores.max(axis=-1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=-1, keepdims=True)


def best_index(values: np.ndarray, rank: np.ndarray, maximize: bool = True) -> int:
    """Index of the best value; exact ties go to the smallest ``rank``."""
    target = values.max() if maximize else values.min()
    tied = np.flatnonzero(values == target)
    return int(tied[np.argmin(rank[tied])])


def _tie_rank(radio_map: PassiveRadioMap, config: Optional[EstimatorConfig]) -> np.ndarray:
    if config is not None and config.tie_break == "map-order":
        return np.arange(len(radio_map.locations))
    return radio_map.id_rank


def window_array(
    radio_map: PassiveRadioMap, window: SignalWindow, streams: Sequence[StreamId]
) -> np.ndarray:
    """(n_streams, m) integer array for ``streams``, range-checked."""
    missing = [s for s in streams if s not in window.values]
    if missing:
        raise UnknownStream(f"window has no samples for stream {missing[0]}")
    arr = np.array([window.values[s] for s in streams], dtype=np.int64)
    lo, hi = radio_map.rssi_range
    if arr.min() < lo or arr.max() > hi:
        bad = int(arr[(arr < lo) | (arr > hi)][0])
        raise OutOfRangeValue(f"{bad} dBm outside [{lo}, {hi}]")
    return arr


def batch_log_likelihood(
    radio_map: PassiveRadioMap, windows: np.ndarray, stream_idx: Sequence[int]
) -> np.ndarray:
    """Log-likelihood of many windows at every location.

    ``windows`` has shape (n_windows, len(stream_idx), m) and holds integer
    dBm values already checked against the map's range. Works from bin
    counts, so the result does not depend on sample order within a stream.
    Returns (n_windows, n_locations).
    """
    windows = np.asarray(windows, dtype=np.int64)
    n_win = windows.shape[0]
    lo = radio_map.rssi_range[0]
    n_bins = radio_map.n_bins
    log_p = radio_map.log_probs
    out = np.zeros((n_win, len(radio_map.locations)))
    rows = np.repeat(np.arange(n_win), windows.shape[2])
    for col, si in enumerate(stream_idx):
        counts = np.zeros((n_win, n_bins))
        np.add.at(counts, (rows, (windows[:, col, :] - lo).ravel()), 1.0)
        out += counts @ log_p[:, si, :].T
    return out


def _prepare(radio_map, window, config):
    config = config or EstimatorConfig(m=window.m)
    streams = config.streams_for(radio_map) if config.active_streams is not None else window.streams
    if window.m < config.m:
        raise InsufficientSamples(f"window carries {window.m} samples per stream, need m={config.m}")
    if window.m > config.m:
        window = window.tail(config.m)
    stream_idx = [radio_map.stream_index(s) for s in streams]
    arr = window_array(radio_map, window, streams)
    return config, streams, stream_idx, arr


def log_likelihood(radio_map: PassiveRadioMap, window: SignalWindow, location) -> float:
    """Sum over streams and samples of ln P(sample | location)."""
    li = radio_map.location_index(location)
    stream_idx = [radio_map.stream_index(s) for s in window.streams]
    arr = window_array(radio_map, window, window.streams)
    return float(batch_log_likelihood(radio_map, arr[None], stream_idx)[0, li])


def discrete_estimate(
    radio_map: PassiveRadioMap,
    window: SignalWindow,
    config: Optional[EstimatorConfig] = None,
    prior: Optional[Sequence[float]] = None,
) -> Tuple[Location, PosteriorVector]:
    """Most probable calibrated location for ``window``.

    ``prior`` optionally gives P(location) in radio-map order; uniform when
    omitted.
    """
    config, _, stream_idx, arr = _prepare(radio_map, window, config)
    ll = batch_log_likelihood(radio_map, arr[None], stream_idx)[0]
    scores = ll + _log_prior(radio_map, prior)
    post = normalize_log_scores(scores)
    best = best_index(scores, _tie_rank(radio_map, config))
    posterior = PosteriorVector(radio_map.location_ids, ll, post)
    return radio_map.locations[best], posterior


def _log_prior(radio_map: PassiveRadioMap, prior) -> np.ndarray:
    if prior is None:
        return np.zeros(len(radio_map.locations))
    p = np.asarray(prior, dtype=float)
    if p.shape != (len(radio_map.locations),) or (p < 0).any() or p.sum() <= 0:
        raise ValueError("prior must be a non-negative vector with one entry per location")
    with np.errstate(divide="ignore"):
        return np.log(p / p.sum())


def signal_space_distances(
    radio_map: PassiveRadioMap, window_means: np.ndarray, stream_idx: Sequence[int]
) -> np.ndarray:
    """Squared distances from window mean vectors (n, n_streams) to every location."""
    stored = radio_map.means[:, stream_idx]
    diff = window_means[:, None, :] - stored[None, :, :]
    return (diff**2).sum(axis=-1)


def deterministic_estimate(
    radio_map: PassiveRadioMap, window: SignalWindow, config: Optional[EstimatorConfig] = None
) -> Location:
    """Calibrated location whose mean training RSS vector is nearest the window's means."""
    config, _, stream_idx, arr = _prepare(radio_map, window, config)
    d2 = signal_space_distances(radio_map, arr.mean(axis=1)[None], stream_idx)[0]
    return radio_map.locations[best_index(d2, _tie_rank(radio_map, config), maximize=False)]


def random_estimate(radio_map: PassiveRadioMap, rng_seed: SeedLike = None) -> Location:
    """Uniform draw from the bounding box of the calibrated locations.

    Pass a ``numpy.random.Generator`` to draw a reproducible sequence.
    """
    if radio_map is None or len(radio_map.locations) == 0:
        raise EmptyRadioMap("random estimate needs at least one calibrated location")
    rng = np.random.default_rng(rng_seed)
    x0, y0, x1, y1 = radio_map.bounding_box()
    return Location("random", float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))

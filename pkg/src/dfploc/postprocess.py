"""Continuous-space refinement: top-k center of mass and moving-average smoothing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import Location, PassiveRadioMap, SignalWindow
from .errors import EmptyHistory, InvalidK
from .estimators import EstimatorConfig, PosteriorVector, discrete_estimate


@dataclass(frozen=True)
class ContinuousConfig:
    k: int = 2
    w: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise InvalidK(f"k must be >= 1, got {self.k}")
        if self.w < 1:
            raise ValueError(f"w must be >= 1, got {self.w}")


@dataclass(frozen=True)
class EstimatePoint:
    x: float
    y: float
    t: int = 0

    @property
    def coords(self) -> Tuple[float, float]:
        return (self.x, self.y)


def top_k_order(probabilities: np.ndarray, id_rank: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest probabilities, descending, ties by lowest id rank."""
    order = np.lexsort((id_rank, -probabilities))
    return order[:k]


def center_of_mass(coords: np.ndarray, weights: np.ndarray) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    return (w[:, None] * coords).sum(axis=0) / w.sum()


def spatial_average(
    posterior: PosteriorVector, locations: Sequence[Location], k: int, t: int = 0
) -> EstimatePoint:
    """Posterior-weighted center of mass of the k most probable locations."""
    if not 1 <= k <= len(posterior.location_ids):
        raise InvalidK(f"k={k} outside [1, {len(posterior.location_ids)}]")
    by_id = {loc.id: loc for loc in locations}
    coords = np.array([by_id[i].coords for i in posterior.location_ids], dtype=float)
    id_rank = np.argsort(np.argsort(np.array(posterior.location_ids, dtype=object)))
    idx = top_k_order(posterior.probabilities, id_rank.astype(np.int64), k)
    if k == 1:
        x, y = coords[idx[0]]
    else:
        x, y = center_of_mass(coords[idx], posterior.probabilities[idx])
    return EstimatePoint(float(x), float(y), t)


def time_average(history: Sequence[EstimatePoint], w: int) -> EstimatePoint:
    """Mean of the last min(w, t) estimates; carries the latest estimate's index."""
    if not history:
        raise EmptyHistory("time averaging needs at least one estimate")
    if w < 1:
        raise ValueError("w must be >= 1")
    recent = history[-min(w, len(history)):]
    if len(recent) == 1:
        return EstimatePoint(recent[0].x, recent[0].y, recent[0].t)
    xs = np.array([p.coords for p in recent], dtype=float)
    x, y = xs.mean(axis=0)
    return EstimatePoint(float(x), float(y), history[-1].t)


def running_time_average(points: np.ndarray, w: int) -> np.ndarray:
    """Time-average every prefix of an (n, 2) estimate sequence."""
    points = np.asarray(points, dtype=float)
    if w < 1:
        raise ValueError("w must be >= 1")
    if w == 1:
        return points.copy()
    out = np.empty_like(points)
    for t in range(len(points)):
        out[t] = points[max(0, t + 1 - w): t + 1].mean(axis=0)
    return out


def continuous_estimate(
    radio_map: PassiveRadioMap,
    window: SignalWindow,
    est_config: Optional[EstimatorConfig] = None,
    cont_config: Optional[ContinuousConfig] = None,
    history: Optional[List[EstimatePoint]] = None,
) -> Tuple[EstimatePoint, List[EstimatePoint]]:
    """Discrete estimate, then spatial averaging, then time averaging.

    ``history`` holds the spatially averaged points of one tracked trace
    and is extended in place; pass the returned list back on the next call.
    """
    cont_config = cont_config or ContinuousConfig()
    history = [] if history is None else history
    _, posterior = discrete_estimate(radio_map, window, est_config)
    t = history[-1].t + 1 if history else 0
    point = spatial_average(posterior, radio_map.locations, cont_config.k, t)
    history.append(point)
    return time_average(history, cont_config.w), history

"""
Shared domain types: locations, streams, samples, histograms and the
passive radio map.

All containers are frozen; array fields are flagged read-only on
construction so instances can be shared between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import OutOfRangeValue, UnknownLocation, UnknownStream

DEFAULT_RSSI_RANGE: Tuple[int, int] = (-100, 0)

SMOOTHING_MODES = ("additive", "floor-and-renormalize")


def _frozen_array(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, order=True)
class Location:
    """A point in the planar coordinate frame, in meters."""

    id: str
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates for location {self.id!r}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    @property
    def coords(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, order=True)
class StreamId:
    """One (access point, monitoring point) pair."""

    ap: str
    mp: str

    def __str__(self) -> str:
        return f"{self.ap}:{self.mp}"

    @classmethod
    def parse(cls, text: str) -> "StreamId":
        ap, sep, mp = text.partition(":")
        if not sep or not ap or not mp:
            raise ValueError(f"stream must look like AP:MP, got {text!r}")
        return cls(ap, mp)


@dataclass(frozen=True)
class RssiSample:
    stream: StreamId
    value: int  # dBm
    timestamp: float  # seconds


@dataclass(frozen=True)
class SmoothingConfig:
    """How empty histogram bins receive probability mass.

    ``additive`` adds ``floor`` to every bin's relative frequency and
    renormalizes. ``floor-and-renormalize`` raises every bin below
    ``floor`` to exactly ``floor`` and rescales the remaining bins.
    """

    floor: float = 1e-3
    mode: str = "additive"

    def __post_init__(self):
        if self.mode not in SMOOTHING_MODES:
            raise ValueError(f"unknown smoothing mode {self.mode!r}")
        if not (0.0 < self.floor):
            raise ValueError("smoothing floor must be positive")

    def validate_for(self, n_bins: int) -> None:
        if not self.floor < 1.0 / n_bins:
            raise ValueError(
                f"smoothing floor {self.floor} must be below 1/{n_bins} for this RSSI range"
            )

    def min_probability(self, n_bins: int) -> float:
        """Smallest probability any bin can carry after smoothing."""
        if self.mode == "additive":
            return self.floor / (1.0 + n_bins * self.floor)
        return self.floor


@dataclass(frozen=True, eq=False)
class RssiHistogram:
    """Smoothed distribution over integer dBm values ``rssi_min..rssi_max``.

    ``mean`` is the raw (pre-smoothing) mean of the training samples; the
    signal-space nearest-neighbour baseline works from it.
    """

    probs: np.ndarray
    rssi_min: int
    sample_count: int
    mean: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen_array(self.probs))
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise ValueError("histogram probabilities must be a non-empty vector")

    @property
    def rssi_max(self) -> int:
        return self.rssi_min + self.probs.size - 1

    @property
    def bins(self) -> Dict[int, float]:
        return {self.rssi_min + i: float(p) for i, p in enumerate(self.probs)}

    def probability(self, value: int) -> float:
        if not (self.rssi_min <= value <= self.rssi_max):
            raise OutOfRangeValue(
                f"{value} dBm outside [{self.rssi_min}, {self.rssi_max}]"
            )
        return float(self.probs[int(value) - self.rssi_min])

    def __eq__(self, other):
        if not isinstance(other, RssiHistogram):
            return NotImplemented
        return (
            self.rssi_min == other.rssi_min
            and self.sample_count == other.sample_count
            and np.array_equal(self.probs, other.probs)
            and (self.mean == other.mean or (math.isnan(self.mean) and math.isnan(other.mean)))
        )


@dataclass(frozen=True, eq=False)
class PassiveRadioMap:
    """Calibrated locations with one smoothed histogram per stream.

    Histograms are held as dense arrays: ``probs[l, i, v - rssi_min]`` is
    P(v | location l) for stream i.
    """

    locations: Tuple[Location, ...]
    streams: Tuple[StreamId, ...]
    probs: np.ndarray
    sample_counts: np.ndarray
    means: np.ndarray
    rssi_range: Tuple[int, int] = DEFAULT_RSSI_RANGE
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "streams", tuple(self.streams))
        object.__setattr__(self, "rssi_range", (int(self.rssi_range[0]), int(self.rssi_range[1])))
        object.__setattr__(self, "probs", _frozen_array(self.probs))
        object.__setattr__(self, "sample_counts", _frozen_array(self.sample_counts, dtype=np.int64))
        object.__setattr__(self, "means", _frozen_array(self.means))

        n_loc, n_str = len(self.locations), len(self.streams)
        if n_loc == 0 or n_str == 0:
            raise ValueError("a radio map needs at least one location and one stream")
        ids = [loc.id for loc in self.locations]
        if len(set(ids)) != n_loc:
            raise ValueError("location ids must be unique within a radio map")
        if len(set(self.streams)) != n_str:
            raise ValueError("streams must be unique within a radio map")
        lo, hi = self.rssi_range
        if self.probs.shape != (n_loc, n_str, hi - lo + 1):
            raise ValueError(
                f"probs shape {self.probs.shape} does not match "
                f"{n_loc} locations x {n_str} streams x {hi - lo + 1} bins"
            )
        if self.sample_counts.shape != (n_loc, n_str) or self.means.shape != (n_loc, n_str):
            raise ValueError("sample_counts and means must have shape (locations, streams)")

    @classmethod
    def from_histograms(
        cls,
        locations: Sequence[Location],
        streams: Sequence[StreamId],
        histograms: Mapping[Tuple[str, StreamId], RssiHistogram],
        rssi_range: Tuple[int, int] = DEFAULT_RSSI_RANGE,
        smoothing: Optional[SmoothingConfig] = None,
    ) -> "PassiveRadioMap":
        """Assemble a map from per-(location id, stream) histograms."""
        lo, hi = rssi_range
        n_bins = hi - lo + 1
        probs = np.empty((len(locations), len(streams), n_bins))
        counts = np.empty((len(locations), len(streams)), dtype=np.int64)
        means = np.empty((len(locations), len(streams)))
        for li, loc in enumerate(locations):
            for si, stream in enumerate(streams):
                try:
                    h = histograms[(loc.id, stream)]
                except KeyError:
                    raise ValueError(f"no histogram for ({loc.id!r}, {stream})") from None
                if h.rssi_min != lo or h.probs.size != n_bins:
                    raise ValueError("histogram range does not match the radio map range")
                probs[li, si] = h.probs
                counts[li, si] = h.sample_count
                means[li, si] = h.mean
        return cls(
            locations, streams, probs, counts, means, rssi_range, smoothing or SmoothingConfig()
        )

    @property
    def n_bins(self) -> int:
        return self.probs.shape[2]

    @cached_property
    def log_probs(self) -> np.ndarray:
        out = np.log(self.probs)
        out.setflags(write=False)
        return out

    @cached_property
    def location_ids(self) -> Tuple[str, ...]:
        return tuple(loc.id for loc in self.locations)

    @cached_property
    def coords(self) -> np.ndarray:
        out = np.array([loc.coords for loc in self.locations], dtype=float)
        out.setflags(write=False)
        return out

    @cached_property
    def _loc_index(self) -> Dict[str, int]:
        return {loc.id: i for i, loc in enumerate(self.locations)}

    @cached_property
    def _stream_index(self) -> Dict[StreamId, int]:
        return {s: i for i, s in enumerate(self.streams)}

    @cached_property
    def id_rank(self) -> np.ndarray:
        """Rank of each location id in sorted order; used for tie-breaking."""
        order = sorted(range(len(self.locations)), key=lambda i: self.locations[i].id)
        rank = np.empty(len(order), dtype=np.int64)
        rank[order] = np.arange(len(order))
        rank.setflags(write=False)
        return rank

    def location_index(self, location) -> int:
        key = location.id if isinstance(location, Location) else location
        try:
            return self._loc_index[key]
        except KeyError:
            raise UnknownLocation(key) from None

    def stream_index(self, stream: StreamId) -> int:
        try:
            return self._stream_index[stream]
        except KeyError:
            raise UnknownStream(str(stream)) from None

    def location(self, location_id: str) -> Location:
        return self.locations[self.location_index(location_id)]

    def histogram(self, location, stream: StreamId) -> RssiHistogram:
        li, si = self.location_index(location), self.stream_index(stream)
        return RssiHistogram(
            self.probs[li, si],
            self.rssi_range[0],
            int(self.sample_counts[li, si]),
            float(self.means[li, si]),
        )

    @property
    def histograms(self) -> Dict[Tuple[str, StreamId], RssiHistogram]:
        return {
            (loc.id, s): self.histogram(loc, s) for loc in self.locations for s in self.streams
        }

    def bounding_box(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the calibrated locations."""
        c = self.coords
        return (float(c[:, 0].min()), float(c[:, 1].min()), float(c[:, 0].max()), float(c[:, 1].max()))

    def __eq__(self, other):
        if not isinstance(other, PassiveRadioMap):
            return NotImplemented
        return (
            self.locations == other.locations
            and self.streams == other.streams
            and self.rssi_range == other.rssi_range
            and self.smoothing == other.smoothing
            and np.array_equal(self.probs, other.probs)
            and np.array_equal(self.sample_counts, other.sample_counts)
            and np.array_equal(self.means, other.means, equal_nan=True)
        )

    __hash__ = None


@dataclass(frozen=True)
class SignalWindow:
    """``m`` consecutive integer dBm values for each included stream."""

    values: Mapping[StreamId, Tuple[int, ...]]

    def __post_init__(self):
        frozen = {s: tuple(int(v) for v in vals) for s, vals in dict(self.values).items()}
        if not frozen:
            raise ValueError("a signal window needs at least one stream")
        lengths = {len(v) for v in frozen.values()}
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError("every stream in a window must carry the same m >= 1 samples")
        object.__setattr__(self, "values", frozen)

    @property
    def m(self) -> int:
        return len(next(iter(self.values.values())))

    @property
    def streams(self) -> Tuple[StreamId, ...]:
        return tuple(self.values)

    def restrict(self, streams: Iterable[StreamId]) -> "SignalWindow":
        try:
            return SignalWindow({s: self.values[s] for s in streams})
        except KeyError as exc:
            raise UnknownStream(str(exc.args[0])) from None

    def tail(self, m: int) -> "SignalWindow":
        """Keep only the most recent ``m`` samples of every stream."""
        return SignalWindow({s: v[-m:] for s, v in self.values.items()})

    def __hash__(self):
        return hash(tuple(sorted(self.values.items())))


def euclidean_distance(a: Location, b: Location) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)

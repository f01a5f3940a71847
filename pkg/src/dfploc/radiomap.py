"""Offline phase: turn training traces into a passive radio map."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    DEFAULT_RSSI_RANGE,
    Location,
    PassiveRadioMap,
    RssiHistogram,
    RssiSample,
    SmoothingConfig,
    StreamId,
)
from .errors import (
    EmptyTraces,
    InsufficientSamples,
    MissingStream,
    OutOfRangeSample,
    OutOfRangeValue,
    UnknownStream,
)

__all__ = [
    "TrainingTrace",
    "SmoothingConfig",
    "smooth_counts",
    "build_histogram",
    "build_radio_map",
    "histogram_probability",
]


@dataclass(frozen=True)
class TrainingTrace:
    """Samples recorded while a person stands at ``location``.

    Test traces use the same shape; the location is then the ground truth.
    """

    location: Location
    samples: Tuple[RssiSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def stream_values(self, stream: StreamId) -> np.ndarray:
        """Values of one stream in arrival order. Dropped samples are simply absent."""
        return np.array([s.value for s in self.samples if s.stream == stream], dtype=np.int64)

    def by_stream(self) -> dict:
        out: dict = {}
        for s in self.samples:
            out.setdefault(s.stream, []).append(s.value)
        return {k: np.asarray(v, dtype=np.int64) for k, v in out.items()}

    @property
    def streams(self) -> Tuple[StreamId, ...]:
        seen = dict.fromkeys(s.stream for s in self.samples)
        return tuple(seen)


def smooth_counts(counts: np.ndarray, smoothing: SmoothingConfig) -> np.ndarray:
    """Smoothed probability vector from raw per-bin counts."""
    counts = np.asarray(counts, dtype=float)
    n_bins = counts.size
    smoothing.validate_for(n_bins)
    total = counts.sum()
    if total <= 0:
        raise ValueError("cannot smooth an empty histogram")
    floor = smoothing.floor

    if smoothing.mode == "additive":
        pseudo = floor * total
        return (counts + pseudo) / (total + n_bins * pseudo)

    # floor-and-renormalize: pin low bins to the floor, rescale the rest,
    # repeat until no rescaled bin drops under the floor.
    freq = counts / total
    pinned = freq < floor
    while True:
        free_mass = 1.0 - pinned.sum() * floor
        scale = free_mass / freq[~pinned].sum()
        probs = np.where(pinned, floor, freq * scale)
        newly = (~pinned) & (probs < floor)
        if not newly.any():
            return probs
        pinned |= newly


def build_histogram(
    values: Sequence[int],
    rssi_range: Tuple[int, int] = DEFAULT_RSSI_RANGE,
    smoothing: Optional[SmoothingConfig] = None,
) -> RssiHistogram:
    smoothing = smoothing or SmoothingConfig()
    lo, hi = rssi_range
    v = np.asarray(values, dtype=np.int64)
    if v.size == 0:
        raise ValueError("no samples")
    if v.min() < lo or v.max() > hi:
        bad = int(v[(v < lo) | (v > hi)][0])
        raise OutOfRangeSample(f"sample {bad} dBm outside [{lo}, {hi}]")
    counts = np.bincount(v - lo, minlength=hi - lo + 1)
    return RssiHistogram(smooth_counts(counts, smoothing), lo, int(v.size), float(v.mean()))


def build_radio_map(
    traces: Iterable[TrainingTrace],
    streams: Optional[Sequence[StreamId]] = None,
    rssi_range: Tuple[int, int] = DEFAULT_RSSI_RANGE,
    smoothing: Optional[SmoothingConfig] = None,
    min_samples_per_stream: int = 1,
) -> PassiveRadioMap:
    """Estimate one smoothed histogram per (location, stream).

    ``streams`` defaults to the streams seen in the first trace, in order
    of first appearance. Locations keep the order of ``traces``.
    """
    traces = list(traces)
    if not traces:
        raise EmptyTraces("no training traces given")
    smoothing = smoothing or SmoothingConfig()
    lo, hi = rssi_range
    if hi < lo:
        raise ValueError("rssi_range must satisfy min <= max")
    smoothing.validate_for(hi - lo + 1)
    if streams is None:
        streams = traces[0].streams
    streams = tuple(streams)
    declared = set(streams)

    ids = [t.location.id for t in traces]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ValueError(f"duplicate training location id {dup!r}")

    n_bins = hi - lo + 1
    probs = np.empty((len(traces), len(streams), n_bins))
    counts = np.empty((len(traces), len(streams)), dtype=np.int64)
    means = np.empty((len(traces), len(streams)))
    for li, trace in enumerate(traces):
        per_stream = trace.by_stream()
        extra = set(per_stream) - declared
        if extra:
            raise UnknownStream(
                f"trace at {trace.location.id!r} carries undeclared stream {sorted(extra)[0]}"
            )
        for si, stream in enumerate(streams):
            vals = per_stream.get(stream)
            if vals is None or vals.size == 0:
                raise MissingStream(trace.location.id, stream)
            if vals.size < min_samples_per_stream:
                raise InsufficientSamples(
                    f"{trace.location.id!r}/{stream}: {vals.size} samples, "
                    f"need {min_samples_per_stream}"
                )
            try:
                h = build_histogram(vals, rssi_range, smoothing)
            except OutOfRangeSample as exc:
                raise OutOfRangeSample(f"{trace.location.id!r}/{stream}: {exc}") from None
            probs[li, si] = h.probs
            counts[li, si] = h.sample_count
            means[li, si] = h.mean

    return PassiveRadioMap(
        tuple(t.location for t in traces), streams, probs, counts, means, (lo, hi), smoothing
    )


def histogram_probability(h: RssiHistogram, value: int) -> float:
    """Smoothed P(value) from a histogram; raises OutOfRangeValue off-range."""
    return h.probability(value)


def _check_in_range(values: np.ndarray, rssi_range: Tuple[int, int]) -> None:
    lo, hi = rssi_range
    if values.size and (values.min() < lo or values.max() > hi):
        bad = int(values[(values < lo) | (values > hi)][0])
        raise OutOfRangeValue(f"{bad} dBm outside [{lo}, {hi}]")


def traces_streams(traces: Sequence[TrainingTrace]) -> List[StreamId]:
    """Union of streams over all traces, first-seen order."""
    seen: dict = {}
    for t in traces:
        for s in t.streams:
            seen.setdefault(s, None)
    return list(seen)

"""
Distance-error evaluation: windowing of test traces, error CDFs,
nearest-rank percentiles and one-parameter sweeps.
"""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import Location, PassiveRadioMap, SignalWindow, StreamId
from .errors import EmptyErrors, InsufficientSamples, InvalidK
from .estimators import (
    EstimatorConfig,
    batch_log_likelihood,
    best_index,
    normalize_log_scores,
    signal_space_distances,
)
from .postprocess import ContinuousConfig, EstimatePoint, center_of_mass, running_time_average, top_k_order
from .radiomap import TrainingTrace, _check_in_range

ESTIMATORS = ("probabilistic", "deterministic", "random")
WINDOW_MODES = ("block", "moving")

EstimatorFn = Callable[[PassiveRadioMap, SignalWindow, EstimatorConfig], object]


def percentile(errors: Sequence[float], p: float) -> float:
    """Nearest-rank percentile of an ascending list: the ceil(p*N)-th element."""
    if len(errors) == 0:
        raise EmptyErrors("percentile of an empty error list")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    n = len(errors)
    rank = max(1, math.ceil(p * n - 1e-9))
    return float(errors[rank - 1])


@dataclass(frozen=True)
class ErrorSummary:
    errors: Tuple[float, ...]
    cdf_points: Tuple[Tuple[float, float], ...]
    p25: float
    p50: float
    p75: float
    skipped: int = 0

    @classmethod
    def from_errors(cls, errors: Sequence[float], skipped: int = 0) -> "ErrorSummary":
        errs = tuple(sorted(float(e) for e in errors))
        if not errs:
            nan = float("nan")
            return cls((), (), nan, nan, nan, skipped)
        n = len(errs)
        cdf = ((0.0, 0.0),) + tuple((e, (i + 1) / n) for i, e in enumerate(errs))
        return cls(
            errs, cdf, percentile(errs, 0.25), percentile(errs, 0.5), percentile(errs, 0.75), skipped
        )

    @property
    def n(self) -> int:
        return len(self.errors)

    def cdf_at(self, distance: float) -> float:
        """Fraction of errors at or below ``distance``."""
        if not self.errors:
            return float("nan")
        return float(np.searchsorted(self.errors, distance, side="right")) / self.n


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: Tuple
    summaries: Tuple[ErrorSummary, ...]
    best_subsets: Optional[Tuple[Tuple[StreamId, ...], ...]] = None
    subsets_evaluated: Optional[Tuple[int, ...]] = None

    @property
    def p50s(self) -> List[float]:
        return [s.p50 for s in self.summaries]


def trace_windows(
    trace: TrainingTrace, streams: Sequence[StreamId], m: int, mode: str = "block"
) -> np.ndarray:
    """Cut a trace into (n_windows, n_streams, m) integer windows.

    ``block`` windows do not overlap; ``moving`` windows advance by one
    sample. Streams are truncated to the shortest one.
    """
    if mode not in WINDOW_MODES:
        raise ValueError(f"window mode must be one of {WINDOW_MODES}")
    per_stream = trace.by_stream()
    try:
        cols = [per_stream[s] for s in streams]
    except KeyError as exc:
        raise InsufficientSamples(
            f"trace {trace.location.id!r} has no samples for stream {exc.args[0]}"
        ) from None
    length = min(len(c) for c in cols)
    if length < m:
        raise InsufficientSamples(
            f"trace {trace.location.id!r} has {length} samples per stream, window needs m={m}"
        )
    data = np.stack([c[:length] for c in cols])
    if mode == "block":
        n_win = length // m
        return data[:, : n_win * m].reshape(len(cols), n_win, m).transpose(1, 0, 2)
    view = np.lib.stride_tricks.sliding_window_view(data, m, axis=1)
    return np.ascontiguousarray(view.transpose(1, 0, 2))


def _as_xy(result) -> Tuple[float, float]:
    if isinstance(result, (Location, EstimatePoint)):
        return result.coords
    x, y = result
    return float(x), float(y)


def estimate_windows(
    radio_map: PassiveRadioMap,
    windows: np.ndarray,
    streams: Sequence[StreamId],
    estimator: Union[str, EstimatorFn] = "probabilistic",
    config: Optional[EstimatorConfig] = None,
    continuous: Optional[ContinuousConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """(n_windows, 2) location estimates for the time-ordered windows of one trace.

    With ``continuous`` set, the probabilistic estimator uses posterior
    weighted top-k averaging, the deterministic estimator the unweighted
    centroid of its k nearest signal-space neighbours, and both are then
    time-averaged over ``w`` estimates. Random estimates are never smoothed.
    """
    config = config or EstimatorConfig(m=windows.shape[2])
    tie_rank = (
        np.arange(len(radio_map.locations)) if config.tie_break == "map-order" else radio_map.id_rank
    )
    coords = radio_map.coords
    n_win = windows.shape[0]
    _check_in_range(windows, radio_map.rssi_range)
    stream_idx = [radio_map.stream_index(s) for s in streams]

    if callable(estimator):
        pts = np.array(
            [
                _as_xy(estimator(radio_map, SignalWindow(dict(zip(streams, map(tuple, w)))), config))
                for w in windows
            ],
            dtype=float,
        ).reshape(n_win, 2)
    elif estimator == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        x0, y0, x1, y1 = radio_map.bounding_box()
        pts = np.empty((n_win, 2))
        for i in range(n_win):
            pts[i] = (rng.uniform(x0, x1), rng.uniform(y0, y1))
        return pts
    elif estimator == "probabilistic":
        ll = batch_log_likelihood(radio_map, windows, stream_idx)
        pts = np.empty((n_win, 2))
        if continuous is None or continuous.k == 1:
            for i in range(n_win):
                pts[i] = coords[best_index(ll[i], tie_rank)]
        else:
            post = normalize_log_scores(ll)
            for i in range(n_win):
                idx = top_k_order(post[i], tie_rank, continuous.k)
                pts[i] = center_of_mass(coords[idx], post[i, idx])
    elif estimator == "deterministic":
        d2 = signal_space_distances(radio_map, windows.mean(axis=2), stream_idx)
        pts = np.empty((n_win, 2))
        k = 1 if continuous is None else continuous.k
        for i in range(n_win):
            if k == 1:
                pts[i] = coords[best_index(d2[i], tie_rank, maximize=False)]
            else:
                idx = np.lexsort((tie_rank, d2[i]))[:k]
                pts[i] = coords[idx].mean(axis=0)
    else:
        raise ValueError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")

    if continuous is not None:
        pts = running_time_average(pts, continuous.w)
    return pts


def evaluate(
    radio_map: PassiveRadioMap,
    traces: Sequence[TrainingTrace],
    estimator: Union[str, EstimatorFn] = "probabilistic",
    config: Optional[EstimatorConfig] = None,
    continuous: Optional[ContinuousConfig] = None,
    *,
    window_mode: str = "block",
    seed: int = 0,
    on_insufficient: str = "raise",
) -> ErrorSummary:
    """Distance errors of an estimator over ground-truth test traces.

    Each trace is cut into windows of ``config.m`` samples per stream; with
    ``continuous`` set, every trace keeps its own time-averaging history.
    ``on_insufficient="skip"`` drops traces too short for one window and
    counts them in ``ErrorSummary.skipped`` instead of raising.
    """
    config = config or EstimatorConfig()
    if continuous is not None and continuous.k > len(radio_map.locations):
        raise InvalidK(f"k={continuous.k} exceeds {len(radio_map.locations)} calibrated locations")
    streams = config.streams_for(radio_map)
    rng = np.random.default_rng(seed)
    errors: List[float] = []
    skipped = 0
    for trace in traces:
        try:
            windows = trace_windows(trace, streams, config.m, window_mode)
        except InsufficientSamples:
            if on_insufficient == "raise":
                raise
            skipped += 1
            continue
        pts = estimate_windows(radio_map, windows, streams, estimator, config, continuous, rng)
        truth = np.array(trace.location.coords)
        errors.extend(np.hypot(pts[:, 0] - truth[0], pts[:, 1] - truth[1]).tolist())
    if skipped:
        warnings.warn(f"{skipped} trace(s) too short for m={config.m}; excluded", RuntimeWarning)
    return ErrorSummary.from_errors(errors, skipped)


def sweep_m(
    radio_map: PassiveRadioMap,
    traces: Sequence[TrainingTrace],
    m_grid: Sequence[int],
    estimator: Union[str, EstimatorFn] = "probabilistic",
    config: Optional[EstimatorConfig] = None,
    continuous: Optional[ContinuousConfig] = None,
    **kwargs,
) -> SweepResult:
    config = config or EstimatorConfig()
    kwargs.setdefault("on_insufficient", "skip")
    summaries = []
    for m in m_grid:
        if m < 1:
            raise ValueError("every m must be >= 1")
        summaries.append(
            evaluate(radio_map, traces, estimator, replace(config, m=m), continuous, **kwargs)
        )
    return SweepResult("m", tuple(m_grid), tuple(summaries))


def sweep_streams(
    radio_map: PassiveRadioMap,
    traces: Sequence[TrainingTrace],
    estimator: Union[str, EstimatorFn] = "probabilistic",
    config: Optional[EstimatorConfig] = None,
    continuous: Optional[ContinuousConfig] = None,
    n_grid: Optional[Sequence[int]] = None,
    **kwargs,
) -> SweepResult:
    """Best-median stream subset for every subset size n.

    Every n-subset of the map's streams is evaluated; the subset with the
    lowest median error wins, ties going to the lower 75th percentile and
    then to the earlier subset in lexicographic order.
    """
    config = config or EstimatorConfig()
    q = len(radio_map.streams)
    n_grid = tuple(range(1, q + 1)) if n_grid is None else tuple(n_grid)
    summaries, winners, counts = [], [], []
    for n in n_grid:
        if not 1 <= n <= q:
            raise ValueError(f"subset size {n} outside [1, {q}]")
        best = None
        evaluated = 0
        for subset in itertools.combinations(radio_map.streams, n):
            s = evaluate(
                radio_map,
                traces,
                estimator,
                replace(config, active_streams=subset),
                continuous,
                **kwargs,
            )
            evaluated += 1
            if best is None or (s.p50, s.p75) < (best[0].p50, best[0].p75):
                best = (s, subset)
        summaries.append(best[0])
        winners.append(best[1])
        counts.append(evaluated)
    return SweepResult("n", n_grid, tuple(summaries), tuple(winners), tuple(counts))


def sweep_k(
    radio_map: PassiveRadioMap,
    traces: Sequence[TrainingTrace],
    k_grid: Sequence[int],
    estimator: Union[str, EstimatorFn] = "probabilistic",
    config: Optional[EstimatorConfig] = None,
    continuous: Optional[ContinuousConfig] = None,
    **kwargs,
) -> SweepResult:
    continuous = continuous or ContinuousConfig()
    summaries = [
        evaluate(radio_map, traces, estimator, config, replace(continuous, k=k), **kwargs)
        for k in k_grid
    ]
    return SweepResult("k", tuple(k_grid), tuple(summaries))


def sweep_w(
    radio_map: PassiveRadioMap,
    traces: Sequence[TrainingTrace],
    w_grid: Sequence[int],
    estimator: Union[str, EstimatorFn] = "probabilistic",
    config: Optional[EstimatorConfig] = None,
    continuous: Optional[ContinuousConfig] = None,
    **kwargs,
) -> SweepResult:
    continuous = continuous or ContinuousConfig()
    summaries = [
        evaluate(radio_map, traces, estimator, config, replace(continuous, w=w), **kwargs)
        for w in w_grid
    ]
    return SweepResult("w", tuple(w_grid), tuple(summaries))


def write_summary_csv(summary: ErrorSummary, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["error_m", "cdf"])
        for e, c in summary.cdf_points:
            writer.writerow([repr(e), repr(c)])


def write_sweep_csv(result: SweepResult, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param_value", "p25", "p50", "p75", "best_subset"])
        for i, (v, s) in enumerate(zip(result.values, result.summaries)):
            subset = "" if result.best_subsets is None else "|".join(map(str, result.best_subsets[i]))
            writer.writerow([v, repr(s.p25), repr(s.p50), repr(s.p75), subset])


def format_table(summaries: Dict[str, ErrorSummary], reference: Optional[str] = None) -> str:
    """Percentile table; rows other than ``reference`` show their ratio to it."""
    ref = summaries.get(reference) if reference else None
    lines = [f"{'Technique':<15}{'25th perc.':>18}{'50th perc.':>18}{'75th perc.':>18}"]
    for name, s in summaries.items():
        cells = []
        for attr in ("p25", "p50", "p75"):
            v = getattr(s, attr)
            cell = f"{v:.2f}m"
            if ref is not None and name != reference:
                r = getattr(ref, attr)
                cell += f" ({v / r:.1f}x)" if r > 0 else " (inf)"
            cells.append(cell)
        lines.append(f"{name:<15}" + "".join(f"{c:>18}" for c in cells))
    return "\n".join(lines)

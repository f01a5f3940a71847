"""
Text file formats for traces and radio maps.

Trace files are CSV with a ``# key: value`` header block::

    # dfploc-trace
    # format_version: 1
    # rssi_range: -100,0
    # streams: AP1:MP1,AP2:MP1
    # frame: planar meters, arbitrary origin
    timestamp_s,ap,mp,rssi_dbm,ground_truth_id,gt_x,gt_y
    0.0,AP1,MP1,-63,L00,0.0,0.0

The ground-truth columns may be left empty. Radio-map files are
``key=value`` lines; each ``histogram=`` line is followed by a ``bins=``
line listing every dBm value in range with its probability. Floats are
written with ``repr`` so a save/load cycle is bit-exact.
"""

from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import Location, PassiveRadioMap, RssiSample, SmoothingConfig, StreamId
from .errors import FormatError
from .radiomap import TrainingTrace

TRACE_MAGIC = "dfploc-trace"
RADIOMAP_MAGIC = "dfploc-radiomap"
FORMAT_VERSION = 1

TRACE_COLUMNS = ["timestamp_s", "ap", "mp", "rssi_dbm", "ground_truth_id", "gt_x", "gt_y"]

PathLike = Union[str, Path]


@dataclass(frozen=True)
class TraceFile:
    streams: Tuple[StreamId, ...]
    rssi_range: Tuple[int, int]
    samples: Tuple[RssiSample, ...]
    location: Optional[Location] = None

    def to_trace(self) -> TrainingTrace:
        if self.location is None:
            raise FormatError("trace file carries no ground-truth location")
        return TrainingTrace(self.location, self.samples)


def _check_label(label: str) -> None:
    if not label or any(ch in label for ch in ":,=| \t\n"):
        raise ValueError(f"label {label!r} must be non-empty without ':', ',', '=', '|' or whitespace")


def format_trace(
    samples: Sequence[RssiSample],
    streams: Sequence[StreamId],
    rssi_range: Tuple[int, int],
    location: Optional[Location] = None,
) -> str:
    for s in streams:
        _check_label(s.ap)
        _check_label(s.mp)
    if location is not None:
        _check_label(location.id)
    buf = _io.StringIO()
    buf.write(f"# {TRACE_MAGIC}\n")
    buf.write(f"# format_version: {FORMAT_VERSION}\n")
    buf.write(f"# rssi_range: {rssi_range[0]},{rssi_range[1]}\n")
    buf.write(f"# streams: {','.join(map(str, streams))}\n")
    buf.write("# frame: planar meters, arbitrary origin\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    gt = ("", "", "") if location is None else (location.id, repr(location.x), repr(location.y))
    for s in sorted(samples, key=lambda r: r.timestamp):
        writer.writerow([repr(float(s.timestamp)), s.stream.ap, s.stream.mp, int(s.value), *gt])
    return buf.getvalue()


def write_trace(
    path: PathLike,
    samples: Sequence[RssiSample],
    streams: Sequence[StreamId],
    rssi_range: Tuple[int, int],
    location: Optional[Location] = None,
) -> None:
    Path(path).write_text(format_trace(samples, streams, rssi_range, location))


def _header(lines: List[str], magic: str, source: str) -> Tuple[dict, int]:
    meta = {}
    i = 0
    if not lines or lines[0].strip() != f"# {magic}":
        raise FormatError(f"{source}: not a {magic} file")
    while i < len(lines) and lines[i].startswith("#"):
        key, sep, value = lines[i][1:].partition(":")
        if sep:
            meta[key.strip()] = value.strip()
        i += 1
    version = meta.get("format_version")
    if version != str(FORMAT_VERSION):
        raise FormatError(f"{source}: unsupported format version {version!r}")
    return meta, i


def parse_trace(text: str, source: str = "<trace>") -> TraceFile:
    lines = text.splitlines()
    meta, start = _header(lines, TRACE_MAGIC, source)
    try:
        lo, hi = (int(v) for v in meta["rssi_range"].split(","))
        streams = tuple(StreamId.parse(s) for s in meta["streams"].split(","))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{source}: bad header ({exc})") from None
    declared = set(streams)
    reader = csv.reader(lines[start:])
    columns = next(reader, None)
    if columns != TRACE_COLUMNS:
        raise FormatError(f"{source}: expected columns {','.join(TRACE_COLUMNS)}")
    samples = []
    location = None
    last_t = -math.inf
    for lineno, row in enumerate(reader, start=start + 2):
        if not row:
            continue
        try:
            t, ap, mp, value, gid, gx, gy = row
            t = float(t)
            value = int(value)
        except ValueError:
            raise FormatError(f"{source}:{lineno}: malformed record {row!r}") from None
        stream = StreamId(ap, mp)
        if stream not in declared:
            raise FormatError(f"{source}:{lineno}: stream {stream} not declared in header")
        if t < last_t:
            raise FormatError(f"{source}:{lineno}: records not sorted by timestamp")
        last_t = t
        if gid:
            here = Location(gid, float(gx), float(gy))
            if location is None:
                location = here
            elif here != location:
                raise FormatError(f"{source}:{lineno}: ground truth changes within a trace")
        samples.append(RssiSample(stream, value, t))
    return TraceFile(streams, (lo, hi), tuple(samples), location)


def read_trace(path: PathLike) -> TraceFile:
    return parse_trace(Path(path).read_text(), str(path))


def trace_paths(paths: Iterable[PathLike]) -> List[Path]:
    """Expand directories to their sorted ``*.csv`` files."""
    out: List[Path] = []
    for p in map(Path, paths):
        out.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    return out


def format_radio_map(radio_map: PassiveRadioMap) -> str:
    lo, hi = radio_map.rssi_range
    lines = [
        f"# {RADIOMAP_MAGIC}",
        f"format_version={FORMAT_VERSION}",
        f"rssi_min={lo}",
        f"rssi_max={hi}",
        f"smoothing_mode={radio_map.smoothing.mode}",
        f"smoothing_floor={radio_map.smoothing.floor!r}",
    ]
    for s in radio_map.streams:
        _check_label(s.ap)
        _check_label(s.mp)
        lines.append(f"stream={s}")
    for loc in radio_map.locations:
        _check_label(loc.id)
        lines.append(f"location={loc.id},{loc.x!r},{loc.y!r}")
    values = range(lo, hi + 1)
    for li, loc in enumerate(radio_map.locations):
        for si, s in enumerate(radio_map.streams):
            lines.append(
                f"histogram={loc.id},{s},{int(radio_map.sample_counts[li, si])},"
                f"{float(radio_map.means[li, si])!r}"
            )
            probs = radio_map.probs[li, si]
            lines.append("bins=" + " ".join(f"{v}:{float(p)!r}" for v, p in zip(values, probs)))
    return "\n".join(lines) + "\n"


def save_radio_map(radio_map: PassiveRadioMap, path: PathLike) -> None:
    Path(path).write_text(format_radio_map(radio_map))


def parse_radio_map(text: str, source: str = "<radiomap>") -> PassiveRadioMap:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != f"# {RADIOMAP_MAGIC}":
        raise FormatError(f"{source}: not a {RADIOMAP_MAGIC} file")
    meta = {}
    streams: List[StreamId] = []
    locations: List[Location] = []
    hist_rows = []
    pending = None
    try:
        for lineno, line in enumerate(lines[1:], start=2):
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError(f"{source}:{lineno}: expected key=value")
            if key == "stream":
                streams.append(StreamId.parse(value))
            elif key == "location":
                lid, x, y = value.split(",")
                locations.append(Location(lid, float(x), float(y)))
            elif key == "histogram":
                if pending is not None:
                    raise FormatError(f"{source}:{lineno}: histogram without bins")
                lid, stream, count, mean = value.split(",")
                pending = (lid, StreamId.parse(stream), int(count), float(mean))
            elif key == "bins":
                if pending is None:
                    raise FormatError(f"{source}:{lineno}: bins without histogram")
                pairs = [tok.split(":") for tok in value.split()]
                hist_rows.append((pending, [(int(v), float(p)) for v, p in pairs], lineno))
                pending = None
            else:
                if not hist_rows and not locations and not streams:
                    meta[key] = value
                else:
                    raise FormatError(f"{source}:{lineno}: unexpected key {key!r}")
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{source}: {exc}") from None
    if meta.get("format_version") != str(FORMAT_VERSION):
        raise FormatError(f"{source}: unsupported format version {meta.get('format_version')!r}")
    try:
        lo, hi = int(meta["rssi_min"]), int(meta["rssi_max"])
        smoothing = SmoothingConfig(float(meta["smoothing_floor"]), meta["smoothing_mode"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{source}: bad header ({exc})") from None

    loc_index = {loc.id: i for i, loc in enumerate(locations)}
    stream_index = {s: i for i, s in enumerate(streams)}
    n_bins = hi - lo + 1
    probs = np.full((len(locations), len(streams), n_bins), np.nan)
    counts = np.zeros((len(locations), len(streams)), dtype=np.int64)
    means = np.full((len(locations), len(streams)), np.nan)
    seen = set()
    for (lid, stream, count, mean), bins, lineno in hist_rows:
        if lid not in loc_index or stream not in stream_index:
            raise FormatError(f"{source}:{lineno}: histogram for undeclared ({lid}, {stream})")
        if [v for v, _ in bins] != list(range(lo, hi + 1)):
            raise FormatError(f"{source}:{lineno}: bins must list every value {lo}..{hi} in order")
        li, si = loc_index[lid], stream_index[stream]
        probs[li, si] = [p for _, p in bins]
        counts[li, si] = count
        means[li, si] = mean
        seen.add((li, si))
    if len(seen) != len(locations) * len(streams):
        raise FormatError(f"{source}: radio map grid is incomplete")
    try:
        return PassiveRadioMap(tuple(locations), tuple(streams), probs, counts, means, (lo, hi), smoothing)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None


def load_radio_map(path: PathLike) -> PassiveRadioMap:
    return parse_radio_map(Path(path).read_text(), str(path))

"""
Seeded synthetic RSS environment.

Each stream is a link from a virtual access point to a virtual monitoring
point. A person standing at ``p`` shifts the link's mean RSS through two
smooth spatial terms: a shadowing dip that is deepest when ``p`` sits on
the line of sight, and a multipath ripple made of random plane waves. The
per-(location, stream) spread follows a second smooth field that grows near
the link. Samples are Gaussian draws rounded to integer dBm and clamped to
the RSSI range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import DEFAULT_RSSI_RANGE, Location, RssiSample, StreamId
from .errors import InvalidGrid, UnknownLocation
from .radiomap import TrainingTrace

DEFAULT_DURATION_S = 60.0
DEFAULT_RATE_HZ = 5.0

# separation factor applied when overlap is zero
SEPARATION_SIGMAS = 6.0


@dataclass(frozen=True)
class GridSpec:
    """Calibration grid over a ``width`` x ``height`` meter area.

    ``test_mode`` is ``"offgrid"`` (midpoints between adjacent calibration
    points) or ``"ongrid"`` (a subset of the calibration points).
    """

    width: float = 50.0
    height: float = 30.0
    n_locations: int = 53
    n_test: int = 32
    test_mode: str = "offgrid"

    def __post_init__(self):
        if self.n_locations < 1:
            raise InvalidGrid("grid must contain at least one calibration location")
        if self.n_test < 0:
            raise InvalidGrid("n_test must be >= 0")
        if not (self.width >= 0 and self.height >= 0):
            raise InvalidGrid("area dimensions must be non-negative")
        if self.test_mode not in ("offgrid", "ongrid"):
            raise InvalidGrid(f"unknown test_mode {self.test_mode!r}")


@dataclass(frozen=True)
class FieldParams:
    base_dbm: float = -35.0
    path_loss_exponent: float = 2.5
    shadow_db: float = 8.0
    shadow_width_m: float = 4.0
    ripple_db: float = 4.0
    ripple_waves: int = 8
    wavelength_m: Tuple[float, float] = (8.0, 30.0)
    sigma_db: Tuple[float, float] = (1.0, 8.0)
    max_separable_sigma: float = 0.5


PRESETS: Dict[str, dict] = {
    "separable": {"overlap": 0.0, "field": FieldParams(ripple_db=6.0)},
    "realistic": {
        "overlap": 1.0,
        "field": FieldParams(
            shadow_db=3.0, ripple_db=1.0, wavelength_m=(60.0, 200.0), sigma_db=(1.0, 16.0)
        ),
    },
}


def _round_dbm(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x) + 0.5)


class _PlaneWaves:
    """Sum of random cosines with roughly unit variance."""

    def __init__(self, rng: np.random.Generator, n_waves: int, wavelength: Tuple[float, float]):
        lam = rng.uniform(wavelength[0], wavelength[1], n_waves)
        theta = rng.uniform(0.0, 2 * np.pi, n_waves)
        self.kx = 2 * np.pi / lam * np.cos(theta)
        self.ky = 2 * np.pi / lam * np.sin(theta)
        self.phase = rng.uniform(0.0, 2 * np.pi, n_waves)
        self.scale = math.sqrt(2.0 / n_waves)

    def __call__(self, xy: np.ndarray) -> np.ndarray:
        arg = np.outer(xy[:, 0], self.kx) + np.outer(xy[:, 1], self.ky) + self.phase
        return self.scale * np.cos(arg).sum(axis=1)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(p - a, axis=1)
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * ab), axis=1)


@dataclass(frozen=True, eq=False)
class SyntheticEnvironment:
    """Ground-truth RSS distributions for calibration and test locations.

    ``means`` and ``sigmas`` have one row per location, calibration
    locations first, then test locations, and one column per stream.
    """

    locations: Tuple[Location, ...]
    test_locations: Tuple[Location, ...]
    streams: Tuple[StreamId, ...]
    means: np.ndarray
    sigmas: np.ndarray
    noise_overlap: float
    seed: int
    rssi_range: Tuple[int, int] = DEFAULT_RSSI_RANGE
    ap_positions: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    mp_positions: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        for name in ("means", "sigmas"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        index = {loc.id: i for i, loc in enumerate(self.locations + self.test_locations)}
        if len(index) != len(self.locations) + len(self.test_locations):
            raise ValueError("location ids must be unique across calibration and test sets")
        object.__setattr__(self, "_index", index)

    def index_of(self, location: Union[Location, str]) -> int:
        key = location.id if isinstance(location, Location) else location
        try:
            return self._index[key]
        except KeyError:
            raise UnknownLocation(key) from None

    def location(self, location_id: str) -> Location:
        return (self.locations + self.test_locations)[self.index_of(location_id)]

    def distribution(self, location: Union[Location, str]) -> Tuple[np.ndarray, np.ndarray]:
        """Per-stream (mean, sigma) in dBm at a location."""
        i = self.index_of(location)
        return self.means[i], self.sigmas[i]

    def min_separation(self) -> float:
        """Smallest Chebyshev distance between calibration mean vectors."""
        m = self.means[: len(self.locations)]
        if len(m) < 2:
            return math.inf
        diff = np.abs(m[:, None, :] - m[None, :, :]).max(axis=-1)
        iu = np.triu_indices(len(m), 1)
        return float(diff[iu].min())


def _lattice_shape(grid: GridSpec) -> Tuple[int, int]:
    n = grid.n_locations
    aspect = grid.width / grid.height if grid.height > 0 else float(n)
    cols = max(1, min(n, int(math.ceil(math.sqrt(n * aspect)))))
    return int(math.ceil(n / cols)), cols


def calibration_grid(grid: GridSpec) -> List[Location]:
    """Row-major lattice over the area, truncated to ``n_locations`` points."""
    n = grid.n_locations
    rows, cols = _lattice_shape(grid)
    xs = np.linspace(0.0, grid.width, cols) if cols > 1 else np.array([grid.width / 2])
    ys = np.linspace(0.0, grid.height, rows) if rows > 1 else np.array([grid.height / 2])
    width = len(str(n - 1))
    out = []
    for idx in range(n):
        r, c = divmod(idx, cols)
        out.append(Location(f"L{idx:0{width}d}", float(xs[c]), float(ys[r])))
    return out


def adjacent_pairs(grid: GridSpec) -> List[Tuple[int, int]]:
    """Index pairs of horizontally or vertically adjacent lattice points."""
    n = grid.n_locations
    _, cols = _lattice_shape(grid)
    pairs = []
    for i in range(n):
        if (i + 1) % cols and i + 1 < n:
            pairs.append((i, i + 1))
        if i + cols < n:
            pairs.append((i, i + cols))
    return pairs


def make_test_locations(
    grid: GridSpec, calibration: Sequence[Location], rng: np.random.Generator
) -> List[Location]:
    if grid.n_test == 0:
        return []
    width = len(str(grid.n_test - 1))
    if grid.test_mode == "ongrid":
        if grid.n_test > len(calibration):
            raise InvalidGrid("more on-grid test points than calibration points")
        pick = np.sort(rng.choice(len(calibration), grid.n_test, replace=False))
        return [
            Location(f"T{k:0{width}d}", calibration[i].x, calibration[i].y)
            for k, i in enumerate(pick)
        ]
    pairs = adjacent_pairs(grid)
    if grid.n_test > len(pairs):
        raise InvalidGrid(
            f"{grid.n_test} off-grid test points requested but only {len(pairs)} adjacent pairs exist"
        )
    pick = np.sort(rng.choice(len(pairs), grid.n_test, replace=False))
    out = []
    for k, pi in enumerate(pick):
        a, b = calibration[pairs[pi][0]], calibration[pairs[pi][1]]
        out.append(Location(f"T{k:0{width}d}", (a.x + b.x) / 2, (a.y + b.y) / 2))
    return out


def _transceivers(grid: GridSpec, n: int, prefix: str, rng: np.random.Generator) -> Dict[str, Tuple[float, float]]:
    return {
        f"{prefix}{i + 1}": (float(rng.uniform(0, grid.width)), float(rng.uniform(0, grid.height)))
        for i in range(n)
    }


def generate_environment(
    grid: Optional[GridSpec] = None,
    n_aps: int = 3,
    n_mps: int = 2,
    overlap: Optional[float] = None,
    seed: int = 0,
    preset: str = "realistic",
    rssi_range: Tuple[int, int] = DEFAULT_RSSI_RANGE,
    field_params: Optional[FieldParams] = None,
) -> SyntheticEnvironment:
    """Build a reproducible synthetic deployment.

    ``overlap`` scales the per-location spread; 0 shrinks every sigma so
    calibration mean vectors sit at least six sigmas apart. Unset arguments
    take their value from ``preset``.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    grid = grid or GridSpec()
    if n_aps < 1 or n_mps < 1:
        raise InvalidGrid("need at least one access point and one monitoring point")
    params = field_params or PRESETS[preset]["field"]
    overlap = PRESETS[preset]["overlap"] if overlap is None else float(overlap)
    if overlap < 0:
        raise ValueError("overlap must be >= 0")
    lo, hi = rssi_range

    ss = np.random.SeedSequence(seed)
    layout_rng, field_rng, test_rng = (np.random.default_rng(s) for s in ss.spawn(3))

    calibration = calibration_grid(grid)
    tests = make_test_locations(grid, calibration, test_rng)
    aps = _transceivers(grid, n_aps, "AP", layout_rng)
    mps = _transceivers(grid, n_mps, "MP", layout_rng)
    streams = tuple(StreamId(ap, mp) for mp in mps for ap in aps)

    xy = np.array([loc.coords for loc in calibration + tests], dtype=float)
    means = np.empty((len(xy), len(streams)))
    shape = np.empty_like(means)
    s_lo, s_hi = params.sigma_db
    for si, s in enumerate(streams):
        a, b = np.array(aps[s.ap]), np.array(mps[s.mp])
        link = np.exp(-_segment_distance(xy, a, b) ** 2 / (2 * params.shadow_width_m**2))
        ripple = _PlaneWaves(field_rng, params.ripple_waves, params.wavelength_m)
        spread = _PlaneWaves(field_rng, params.ripple_waves, params.wavelength_m)
        base = params.base_dbm - 10 * params.path_loss_exponent * math.log10(
            max(1.0, float(np.linalg.norm(b - a)))
        )
        means[:, si] = base - params.shadow_db * link + params.ripple_db * ripple(xy)
        u = np.clip(0.5 + 0.3 * spread(xy) + 0.4 * link - 0.2, 0.0, 1.0)
        shape[:, si] = s_lo * (s_hi / s_lo) ** u
    means = np.clip(means, lo, hi)

    n_cal = len(calibration)
    if n_cal > 1:
        diff = np.abs(means[:n_cal, None, :] - means[None, :n_cal, :]).max(axis=-1)
        sep = float(diff[np.triu_indices(n_cal, 1)].min())
    else:
        sep = math.inf
    floor_sigma = min(params.max_separable_sigma, sep / SEPARATION_SIGMAS)
    if not floor_sigma > 0:
        raise InvalidGrid("two calibration locations share identical signal distributions")
    sigmas = floor_sigma + overlap * shape

    return SyntheticEnvironment(
        tuple(calibration),
        tuple(tests),
        streams,
        means,
        sigmas,
        overlap,
        int(seed),
        (lo, hi),
        aps,
        mps,
        grid,
    )


def n_samples(duration_s: float, rate_hz: float) -> int:
    if not (duration_s > 0 and rate_hz > 0):
        raise ValueError("duration and rate must be positive")
    return int(math.ceil(round(duration_s * rate_hz, 9)))


def sample_trace(
    env: SyntheticEnvironment,
    location: Union[Location, str],
    duration_s: float = DEFAULT_DURATION_S,
    rate_hz: float = DEFAULT_RATE_HZ,
    seed=0,
) -> Tuple[RssiSample, ...]:
    """Independent draws for every stream at 1/rate spacing, time-ordered."""
    means, sigmas = env.distribution(location)
    count = n_samples(duration_s, rate_hz)
    rng = np.random.default_rng(seed)
    lo, hi = env.rssi_range
    draws = rng.normal(means[None, :], sigmas[None, :], size=(count, len(env.streams)))
    values = np.clip(_round_dbm(draws), lo, hi).astype(np.int64)
    out = []
    for k in range(count):
        ts = k / rate_hz
        for si, stream in enumerate(env.streams):
            out.append(RssiSample(stream, int(values[k, si]), ts))
    return tuple(out)


def simulate_traces(
    env: SyntheticEnvironment,
    which: str = "train",
    duration_s: float = DEFAULT_DURATION_S,
    rate_hz: float = DEFAULT_RATE_HZ,
    seed: int = 0,
    locations: Optional[Sequence[Location]] = None,
) -> List[TrainingTrace]:
    """One trace per calibration (``train``) or test (``test``) location.

    Each trace draws from its own child seed so traces are independent of
    how many locations are simulated before them.
    """
    if locations is None:
        if which == "train":
            locations = env.locations
        elif which == "test":
            locations = env.test_locations
        else:
            raise ValueError("which must be 'train' or 'test'")
    stream_key = {"train": 0, "test": 1}.get(which, 2)
    traces = []
    for loc in locations:
        child = np.random.SeedSequence([int(seed), stream_key, env.index_of(loc)])
        traces.append(TrainingTrace(loc, sample_trace(env, loc, duration_s, rate_hz, child)))
    return traces

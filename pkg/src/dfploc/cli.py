"""Command-line entry point: ``dfploc {simulate,build-radiomap,estimate,evaluate,sweep}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import io as fileio
from .core import SMOOTHING_MODES, Location, SmoothingConfig, StreamId
from .errors import DfpError, InvalidParams
from .estimators import EstimatorConfig
from .evaluation import (
    ESTIMATORS,
    WINDOW_MODES,
    estimate_windows,
    evaluate,
    format_table,
    sweep_k,
    sweep_m,
    sweep_streams,
    sweep_w,
    trace_windows,
    write_summary_csv,
    write_sweep_csv,
)
from .postprocess import ContinuousConfig
from .radiomap import TrainingTrace, build_radio_map
from .simulator import (
    DEFAULT_DURATION_S,
    DEFAULT_RATE_HZ,
    PRESETS,
    GridSpec,
    generate_environment,
    n_samples,
    simulate_traces,
)

DEFAULT_M = 26
DEFAULT_K = 2
DEFAULT_W = 5

SWEEP_GRIDS = {"m": [1, 5, 10, 26], "k": [1, 2, 3, 4, 5], "w": [1, 2, 3, 4, 5, 6, 7, 8]}


def _echo(config: dict) -> None:
    print("config: " + json.dumps(config, sort_keys=True))


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_simulate(args) -> int:
    try:
        grid = GridSpec(args.width, args.height, args.n_locations, args.n_test, args.test_mode)
        if args.duration <= 0 or args.rate <= 0:
            raise InvalidParams("duration and rate must be positive")
        env = generate_environment(
            grid, args.aps, args.mps, args.overlap, args.seed, args.preset
        )
    except (DfpError, ValueError) as exc:
        raise InvalidParams(str(exc)) from None
    _echo(
        {
            "command": "simulate",
            "preset": args.preset,
            "seed": args.seed,
            "n_locations": len(env.locations),
            "n_test": len(env.test_locations),
            "n_streams": len(env.streams),
            "rate_hz": args.rate,
            "duration_s": args.duration,
            "samples_per_stream": n_samples(args.duration, args.rate),
            "area_m2": args.width * args.height,
            "test_mode": args.test_mode,
        }
    )
    out = Path(args.out)
    for which, locs in (("train", env.locations), ("test", env.test_locations)):
        folder = out / which
        folder.mkdir(parents=True, exist_ok=True)
        for trace in simulate_traces(env, which, args.duration, args.rate, args.seed, locs):
            fileio.write_trace(
                folder / f"{trace.location.id}.csv",
                trace.samples,
                env.streams,
                env.rssi_range,
                trace.location,
            )
    print(f"wrote {len(env.locations)} training and {len(env.test_locations)} test traces to {out}")
    return 0


def _load_traces(paths) -> list:
    files = fileio.trace_paths(paths)
    if not files:
        raise InvalidParams("no trace files found")
    out = []
    for f in files:
        tf = fileio.read_trace(f)
        out.append((f, tf))
    return out


def cmd_build_radiomap(args) -> int:
    loaded = _load_traces(args.traces)
    streams = loaded[0][1].streams
    rssi_range = loaded[0][1].rssi_range
    traces = []
    for path, tf in loaded:
        if tf.location is None:
            raise InvalidParams(f"{path}: training traces need ground-truth location columns")
        traces.append(tf.to_trace())
    smoothing = SmoothingConfig(args.floor, args.smoothing)
    _echo(
        {
            "command": "build-radiomap",
            "smoothing_mode": smoothing.mode,
            "smoothing_floor": smoothing.floor,
            "rssi_range": list(rssi_range),
        }
    )
    try:
        rm = build_radio_map(traces, streams, rssi_range, smoothing, args.min_samples)
    except DfpError as exc:
        origin = {tf.location.id: p for p, tf in loaded}
        loc_id = getattr(exc, "location", None)
        path = origin.get(loc_id) or next((p for i, p in origin.items() if repr(i) in str(exc)), None)
        if path is not None:
            exc.args = (f"{path}: {exc}",)
        raise
    fileio.save_radio_map(rm, args.out)
    counts = rm.sample_counts
    print(
        f"radio map: {len(rm.locations)} locations, {len(rm.streams)} streams, "
        f"samples per histogram min={counts.min()} max={counts.max()} -> {args.out}"
    )
    return 0


def _estimator_config(args, radio_map) -> EstimatorConfig:
    streams = None
    if args.streams:
        streams = tuple(StreamId.parse(s) for s in args.streams.split(","))
    elif args.n is not None:
        if not 1 <= args.n <= len(radio_map.streams):
            raise InvalidParams(f"--n must lie in [1, {len(radio_map.streams)}]")
        streams = radio_map.streams[: args.n]
    if args.m < 1:
        raise InvalidParams("--m must be >= 1")
    return EstimatorConfig(m=args.m, active_streams=streams)


def _continuous_config(args) -> Optional[ContinuousConfig]:
    if args.mode == "discrete":
        return None
    if args.k < 1 or args.w < 1:
        raise InvalidParams("--k and --w must be >= 1")
    return ContinuousConfig(args.k, args.w)


def _run_echo(args, command, config, continuous, radio_map, extra=None) -> None:
    echo = {
        "command": command,
        "estimator": args.estimator,
        "mode": args.mode,
        "n": len(config.active_streams or radio_map.streams),
        "m": config.m,
        "k": args.k,
        "w": args.w,
        "window_mode": args.window_mode,
        "seed": args.seed,
    }
    echo.update(extra or {})
    _echo(echo)


def cmd_estimate(args) -> int:
    rm = fileio.load_radio_map(args.radiomap)
    config = _estimator_config(args, rm)
    continuous = _continuous_config(args)
    if args.estimator == "all":
        raise InvalidParams("estimate needs a single --estimator")
    _run_echo(args, "estimate", config, continuous, rm)
    tf = fileio.read_trace(args.trace)
    streams = config.streams_for(rm)
    trace = TrainingTrace(tf.location or Location("unknown", 0.0, 0.0), tf.samples)
    windows = trace_windows(trace, streams, config.m, args.window_mode)
    pts = estimate_windows(
        rm, windows, streams, args.estimator, config, continuous, np.random.default_rng(args.seed)
    )
    lines = ["window,x,y"] + [f"{i},{float(x)!r},{float(y)!r}" for i, (x, y) in enumerate(pts)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _test_traces(paths):
    traces = []
    for path, tf in _load_traces(paths):
        if tf.location is None:
            raise InvalidParams(f"{path}: test traces need ground-truth location columns")
        traces.append(tf.to_trace())
    return traces


def cmd_evaluate(args) -> int:
    rm = fileio.load_radio_map(args.radiomap)
    config = _estimator_config(args, rm)
    continuous = _continuous_config(args)
    _run_echo(args, "evaluate", config, continuous, rm)
    traces = _test_traces(args.traces)
    names = list(ESTIMATORS) if args.estimator == "all" else [args.estimator]
    summaries = {}
    for name in names:
        summaries[name] = evaluate(
            rm, traces, name, config, continuous, window_mode=args.window_mode, seed=args.seed
        )
    print(format_table(summaries, reference="probabilistic" if "probabilistic" in names else None))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, s in summaries.items():
            write_summary_csv(s, out / f"summary_{name}.csv")
    return 0


def cmd_sweep(args) -> int:
    rm = fileio.load_radio_map(args.radiomap)
    config = _estimator_config(args, rm)
    if args.estimator == "all":
        raise InvalidParams("sweep needs a single --estimator")
    mode = args.mode or ("continuous" if args.param in ("k", "w") else "discrete")
    args.mode = mode
    continuous = _continuous_config(args)
    if args.param in ("k", "w") and continuous is None:
        raise InvalidParams(f"sweeping {args.param} needs --mode continuous")
    grid = args.grid or SWEEP_GRIDS.get(args.param)
    _run_echo(args, "sweep", config, continuous, rm, {"param": args.param, "grid": grid})
    traces = _test_traces(args.traces)
    kw = dict(window_mode=args.window_mode, seed=args.seed)
    if args.param == "m":
        result = sweep_m(rm, traces, grid, args.estimator, config, continuous, **kw)
    elif args.param == "streams":
        result = sweep_streams(rm, traces, args.estimator, config, continuous, grid, **kw)
    elif args.param == "k":
        result = sweep_k(rm, traces, grid, args.estimator, config, continuous, **kw)
    else:
        result = sweep_w(rm, traces, grid, args.estimator, config, continuous, **kw)
    label = "n" if args.param == "streams" else args.param
    print(f"{label:>4}{'p25':>10}{'p50':>10}{'p75':>10}  best_subset")
    for i, (v, s) in enumerate(zip(result.values, result.summaries)):
        subset = "" if result.best_subsets is None else "|".join(map(str, result.best_subsets[i]))
        print(f"{v:>4}{s.p25:>9.2f}m{s.p50:>9.2f}m{s.p75:>9.2f}m  {subset}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(result, out / f"sweep_{args.param}.csv")
    return 0


def _add_estimation_flags(p, default_estimator, mode_default="continuous"):
    p.add_argument("--radiomap", required=True)
    p.add_argument("--estimator", choices=list(ESTIMATORS) + ["all"], default=default_estimator)
    p.add_argument("--m", type=int, default=DEFAULT_M, help="samples per stream per estimate")
    p.add_argument("--n", type=int, default=None, help="use the first n streams of the map")
    p.add_argument("--streams", default=None, help="explicit AP:MP list, comma separated")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="locations in spatial averaging")
    p.add_argument("--w", type=int, default=DEFAULT_W, help="time averaging window")
    p.add_argument("--mode", choices=["continuous", "discrete"], default=mode_default)
    p.add_argument("--window-mode", choices=WINDOW_MODES, default="block")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfploc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write synthetic training and test traces")
    p.add_argument("--preset", choices=sorted(PRESETS), default="realistic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-locations", type=int, default=53)
    p.add_argument("--n-test", type=int, default=32)
    p.add_argument("--aps", type=int, default=3)
    p.add_argument("--mps", type=int, default=2)
    p.add_argument("--width", type=float, default=50.0)
    p.add_argument("--height", type=float, default=30.0)
    p.add_argument("--duration", type=float, default=DEFAULT_DURATION_S)
    p.add_argument("--rate", type=float, default=DEFAULT_RATE_HZ)
    p.add_argument("--overlap", type=float, default=None)
    p.add_argument("--test-mode", choices=["offgrid", "ongrid"], default="offgrid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-radiomap", help="build a radio map from training traces")
    p.add_argument("--traces", nargs="+", required=True, help="trace files or directories")
    p.add_argument("--floor", type=float, default=1e-3)
    p.add_argument("--smoothing", choices=SMOOTHING_MODES, default="additive")
    p.add_argument("--min-samples", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_radiomap)

    p = sub.add_parser("estimate", help="location estimates for one trace")
    _add_estimation_flags(p, "probabilistic")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="distance-error percentiles over test traces")
    _add_estimation_flags(p, "all")
    p.add_argument("--traces", nargs="+", required=True)
    p.add_argument("--out", default=None, help="directory for summary CSVs")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="median error across one parameter")
    _add_estimation_flags(p, "probabilistic", mode_default=None)
    p.add_argument("--param", choices=["m", "streams", "k", "w"], required=True)
    p.add_argument("--grid", type=_int_list, default=None)
    p.add_argument("--traces", nargs="+", required=True)
    p.add_argument("--out", default=None, help="directory for the sweep CSV")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DfpError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

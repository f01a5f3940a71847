import json
import subprocess
import sys

import numpy as np
import pytest

from dfploc.cli import main
from dfploc.io import load_radio_map, read_trace
from dfploc.radiomap import build_radio_map
from dfploc.simulator import generate_environment, simulate_traces


def _config(out: str) -> dict:
    line = next(l for l in out.splitlines() if l.startswith("config: "))
    return json.loads(line[len("config: "):])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["simulate", "--seed", "0", "--out", str(root / "sim")]) == 0
    assert main(["build-radiomap", "--traces", str(root / "sim" / "train"), "--out", str(root / "map.txt")]) == 0
    return root


class TestSimulate:
    def test_defaults(self, workspace, capsys, tmp_path):
        assert main(["simulate", "--out", str(tmp_path)]) == 0
        cfg = _config(capsys.readouterr().out)
        assert cfg["n_locations"] == 53 and cfg["n_test"] == 32 and cfg["n_streams"] == 6
        assert cfg["rate_hz"] == 5.0 and cfg["duration_s"] == 60.0 and cfg["samples_per_stream"] == 300
        assert cfg["area_m2"] == 1500.0
        assert len(list((tmp_path / "train").glob("*.csv"))) == 53
        assert len(list((tmp_path / "test").glob("*.csv"))) == 32
        tf = read_trace(tmp_path / "train" / "L00.csv")
        assert len(tf.samples) == 1800 and tf.location.id == "L00"

    def test_same_seed_identical_bytes(self, workspace, tmp_path):
        assert main(["simulate", "--seed", "0", "--out", str(tmp_path)]) == 0
        for which in ("train", "test"):
            for f in (workspace / "sim" / which).glob("*.csv"):
                assert (tmp_path / which / f.name).read_bytes() == f.read_bytes()

    def test_zero_locations(self, tmp_path, capsys):
        assert main(["simulate", "--n-locations", "0", "--out", str(tmp_path)]) == 1
        assert "InvalidParams" in capsys.readouterr().err

    def test_negative_rate(self, tmp_path, capsys):
        assert main(["simulate", "--rate", "-1", "--out", str(tmp_path)]) == 1


class TestBuildRadioMap:
    def test_map_contents(self, workspace):
        rm = load_radio_map(workspace / "map.txt")
        assert len(rm.locations) == 53 and len(rm.streams) == 6
        assert np.all(rm.sample_counts == 300)

    def test_matches_in_memory_build(self, workspace):
        env = generate_environment(seed=0)
        rm = build_radio_map(simulate_traces(env, "train", seed=0), env.streams)
        assert load_radio_map(workspace / "map.txt") == rm

    def test_missing_stream_names_location_and_stream(self, workspace, tmp_path, capsys):
        src = workspace / "sim" / "train" / "L03.csv"
        lines = [l for l in src.read_text().splitlines() if ",AP2,MP2," not in l]
        bad = tmp_path / "L03.csv"
        bad.write_text("\n".join(lines) + "\n")
        code = main(["build-radiomap", "--traces", str(bad), str(workspace / "sim" / "train" / "L04.csv"), "--out", str(tmp_path / "m.txt")])
        err = capsys.readouterr().err
        assert code == 1
        assert "L03" in err and "AP2:MP2" in err

    def test_no_files(self, tmp_path):
        assert main(["build-radiomap", "--traces", str(tmp_path), "--out", str(tmp_path / "m.txt")]) == 1


class TestEvaluateAndSweep:
    def test_evaluate_defaults(self, workspace, capsys, tmp_path):
        code = main(["evaluate", "--radiomap", str(workspace / "map.txt"), "--traces", str(workspace / "sim" / "test"), "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        cfg = _config(out)
        assert (cfg["n"], cfg["m"], cfg["k"], cfg["w"]) == (6, 26, 2, 5)
        assert cfg["mode"] == "continuous" and cfg["estimator"] == "all"
        for name in ("probabilistic", "deterministic", "random"):
            assert name in out
            assert (tmp_path / f"summary_{name}.csv").exists()

    def test_random_seed_repeats(self, workspace, capsys):
        args = ["evaluate", "--radiomap", str(workspace / "map.txt"), "--traces", str(workspace / "sim" / "test"), "--estimator", "random", "--seed", "7"]
        main(args)
        first = capsys.readouterr().out
        main(args)
        assert capsys.readouterr().out == first

    def test_streams_sweep(self, workspace, tmp_path, capsys):
        code = main(["sweep", "--param", "streams", "--m", "10", "--radiomap", str(workspace / "map.txt"), "--traces", str(workspace / "sim" / "test"), "--out", str(tmp_path)])
        assert code == 0
        assert _config(capsys.readouterr().out)["mode"] == "discrete"
        rows = (tmp_path / "sweep_streams.csv").read_text().splitlines()
        assert [r.split(",")[0] for r in rows[1:]] == ["1", "2", "3", "4", "5", "6"]

    def test_w_sweep_grid(self, workspace, tmp_path, capsys):
        code = main(["sweep", "--param", "w", "--grid", "1,5", "--radiomap", str(workspace / "map.txt"), "--traces", str(workspace / "sim" / "test"), "--out", str(tmp_path)])
        cfg = _config(capsys.readouterr().out)
        assert code == 0 and cfg["mode"] == "continuous" and cfg["grid"] == [1, 5]
        assert len((tmp_path / "sweep_w.csv").read_text().splitlines()) == 3

    def test_invalid_n(self, workspace, capsys):
        code = main(["evaluate", "--n", "9", "--radiomap", str(workspace / "map.txt"), "--traces", str(workspace / "sim" / "test")])
        assert code == 1 and "--n" in capsys.readouterr().err


class TestEstimate:
    def test_window_output(self, workspace, capsys):
        trace = workspace / "sim" / "test" / "T00.csv"
        code = main(["estimate", "--radiomap", str(workspace / "map.txt"), "--trace", str(trace), "--mode", "discrete"])
        lines = capsys.readouterr().out.splitlines()
        assert code == 0
        body = lines[lines.index("window,x,y") + 1:]
        assert len(body) == 300 // 26
        rm = load_radio_map(workspace / "map.txt")
        coords = {loc.coords for loc in rm.locations}
        assert all((float(r.split(",")[1]), float(r.split(",")[2])) in coords for r in body)

    def test_all_rejected(self, workspace):
        trace = workspace / "sim" / "test" / "T00.csv"
        assert main(["estimate", "--estimator", "all", "--radiomap", str(workspace / "map.txt"), "--trace", str(trace)]) == 1


def test_module_entry_point_usage_error():
    proc = subprocess.run([sys.executable, "-m", "dfploc.cli", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dfploc.core import Location
from dfploc.errors import EmptyErrors, InsufficientSamples, InvalidK
from dfploc.estimators import EstimatorConfig
from dfploc.evaluation import (
    ErrorSummary,
    evaluate,
    format_table,
    percentile,
    sweep_k,
    sweep_m,
    sweep_streams,
    sweep_w,
    trace_windows,
    write_summary_csv,
    write_sweep_csv,
)
from dfploc.postprocess import ContinuousConfig
from dfploc.radiomap import build_radio_map
from dfploc.simulator import generate_environment, simulate_traces

from conftest import S1, S2, trace_from_values


class TestPercentile:
    def test_median_of_four(self):
        assert percentile([1, 2, 3, 4], 0.5) == 2

    def test_single(self):
        for p in (0.0, 0.25, 0.5, 1.0):
            assert percentile([5], p) == 5

    def test_upper_quartile_of_eight(self):
        assert percentile(list(range(1, 9)), 0.75) == 6

    def test_extremes(self):
        assert percentile([1, 2, 3], 0.0) == 1
        assert percentile([1, 2, 3], 1.0) == 3

    def test_empty(self):
        with pytest.raises(EmptyErrors):
            percentile([], 0.5)

    @given(st.lists(st.floats(0, 1e4), min_size=1, max_size=60), st.floats(0, 1))
    def test_is_an_element_with_enough_mass_below(self, xs, p):
        xs = sorted(xs)
        v = percentile(xs, p)
        assert v in xs
        assert sum(x <= v for x in xs) >= p * len(xs) - 1e-9


class TestErrorSummary:
    def test_cdf_points(self):
        s = ErrorSummary.from_errors([3.0, 1.0, 2.0])
        assert s.cdf_points == ((0.0, 0.0), (1.0, 1 / 3), (2.0, 2 / 3), (3.0, 1.0))
        assert s.cdf_at(2.0) == pytest.approx(2 / 3)
        assert s.cdf_at(0.5) == 0.0

    def test_empty_summary(self):
        s = ErrorSummary.from_errors([], skipped=2)
        assert s.n == 0 and math.isnan(s.p50) and s.skipped == 2

    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=50))
    def test_monotone_and_ordered(self, errs):
        s = ErrorSummary.from_errors(errs)
        xs = [x for x, _ in s.cdf_points]
        ys = [y for _, y in s.cdf_points]
        assert xs == sorted(xs) and ys == sorted(ys)
        assert ys[-1] == 1.0
        assert s.p25 <= s.p50 <= s.p75


def _two_location_setup(n=30):
    a, b = Location("A", 0, 0), Location("B", 3, 4)
    train = [
        trace_from_values(a, {S1: [-40] * n, S2: [-70] * n}),
        trace_from_values(b, {S1: [-60] * n, S2: [-50] * n}),
    ]
    return build_radio_map(train), train


class TestEvaluate:
    def test_perfectly_separable_is_exact(self):
        rm, traces = _two_location_setup()
        s = evaluate(rm, traces, config=EstimatorConfig(m=5))
        assert s.n == 12 and s.errors == (0.0,) * 12

    def test_oracle_callable(self):
        rm, traces = _two_location_setup()
        def oracle(radio_map, window, config):
            return radio_map.location("A" if window.values[S1][0] == -40 else "B")
        s = evaluate(rm, traces, oracle, EstimatorConfig(m=3))
        assert s.p75 == 0.0

    def test_wrong_callable_gives_distance(self):
        rm, traces = _two_location_setup()
        s = evaluate(rm, traces, lambda r, w, c: (0.0, 0.0), EstimatorConfig(m=10))
        assert sorted(set(s.errors)) == [0.0, 5.0]

    def test_trace_too_short_raises(self):
        rm, traces = _two_location_setup(n=4)
        with pytest.raises(InsufficientSamples):
            evaluate(rm, traces, config=EstimatorConfig(m=5))

    def test_trace_too_short_skipped_with_warning(self):
        rm, traces = _two_location_setup(n=4)
        with pytest.warns(RuntimeWarning, match="too short"):
            s = evaluate(rm, traces, config=EstimatorConfig(m=5), on_insufficient="skip")
        assert s.skipped == 2 and s.n == 0

    def test_k_equal_to_map_size(self):
        rm, traces = _two_location_setup()
        s = evaluate(rm, traces, config=EstimatorConfig(m=5), continuous=ContinuousConfig(k=2, w=1))
        assert all(math.isfinite(e) and e <= 5.0 for e in s.errors)

    def test_k_beyond_map_size(self):
        rm, traces = _two_location_setup()
        with pytest.raises(InvalidK):
            evaluate(rm, traces, continuous=ContinuousConfig(k=3))

    def test_random_is_seeded(self):
        rm, traces = _two_location_setup()
        a = evaluate(rm, traces, "random", EstimatorConfig(m=5), seed=7)
        b = evaluate(rm, traces, "random", EstimatorConfig(m=5), seed=7)
        c = evaluate(rm, traces, "random", EstimatorConfig(m=5), seed=8)
        assert a == b and a != c

    def test_moving_windows(self):
        rm, traces = _two_location_setup(n=10)
        w = trace_windows(traces[0], rm.streams, 4, "moving")
        assert w.shape == (7, 2, 4)
        np.testing.assert_array_equal(w[0, 0], [-40] * 4)
        s = evaluate(rm, traces, config=EstimatorConfig(m=4), window_mode="moving")
        assert s.n == 14

    def test_block_windows_drop_remainder(self):
        rm, traces = _two_location_setup(n=10)
        assert trace_windows(traces[0], rm.streams, 4).shape == (2, 2, 4)

    def test_unknown_estimator(self):
        rm, traces = _two_location_setup()
        with pytest.raises(ValueError):
            evaluate(rm, traces, "magic", EstimatorConfig(m=5))


@pytest.fixture(scope="module")
def small_sim():
    env = generate_environment(seed=0)
    rm = build_radio_map(simulate_traces(env, "train", duration_s=20, seed=0), env.streams)
    test = simulate_traces(env, "test", duration_s=20, seed=0)[:8]
    return rm, test


class TestSweeps:
    def test_single_m(self, small_sim):
        rm, test = small_sim
        r = sweep_m(rm, test, [10])
        assert r.values == (10,) and len(r.summaries) == 1

    def test_m_longer_than_trace_is_skipped(self, small_sim):
        rm, test = small_sim
        with pytest.warns(RuntimeWarning):
            r = sweep_m(rm, test, [5, 500])
        assert r.summaries[1].skipped == len(test) and math.isnan(r.summaries[1].p50)

    def test_subset_counts(self, small_sim):
        rm, test = small_sim
        r = sweep_streams(rm, test, config=EstimatorConfig(m=10), n_grid=[3, 6])
        assert r.subsets_evaluated == (20, 1)
        assert r.best_subsets[1] == rm.streams
        assert len(r.best_subsets[0]) == 3

    def test_best_subset_is_minimal(self, small_sim):
        rm, test = small_sim
        r = sweep_streams(rm, test, config=EstimatorConfig(m=10), n_grid=[1])
        single = [evaluate(rm, test, config=EstimatorConfig(m=10, active_streams=(s,))).p50 for s in rm.streams]
        assert r.p50s[0] == min(single)

    def test_k_and_w(self, small_sim):
        rm, test = small_sim
        assert sweep_k(rm, test, [1, 2], config=EstimatorConfig(m=10)).values == (1, 2)
        assert len(sweep_w(rm, test, [1, 3], config=EstimatorConfig(m=10)).summaries) == 2

    def test_csv_and_table(self, small_sim, tmp_path):
        rm, test = small_sim
        s = evaluate(rm, test, config=EstimatorConfig(m=10))
        write_summary_csv(s, tmp_path / "s.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "error_m,cdf" and len(lines) == s.n + 2
        r = sweep_streams(rm, test, config=EstimatorConfig(m=10), n_grid=[1])
        write_sweep_csv(r, tmp_path / "w.csv")
        row = (tmp_path / "w.csv").read_text().splitlines()[1].split(",")
        assert row[0] == "1" and ":" in row[4]
        table = format_table({"probabilistic": s, "random": ErrorSummary.from_errors([20.0])}, "probabilistic")
        assert "x)" in table.splitlines()[2] and "x)" not in table.splitlines()[1]

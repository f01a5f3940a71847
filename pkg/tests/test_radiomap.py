from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfploc.core import Location, RssiSample, SmoothingConfig
from dfploc.errors import EmptyTraces, MissingStream, OutOfRangeSample, OutOfRangeValue
from dfploc.radiomap import (
    TrainingTrace,
    build_histogram,
    build_radio_map,
    histogram_probability,
    smooth_counts,
)
from dfploc.simulator import generate_environment, simulate_traces

from conftest import S1, S2, trace_from_values

N_BINS = 101
FLOOR = Fraction(1, 1000)


def additive_oracle(values, query, floor=FLOOR, n_bins=N_BINS):
    """Hand formula: (count + floor*N) / (N + n_bins*floor*N), exact rationals."""
    n = len(values)
    return (values.count(query) + floor * n) / (n + n_bins * floor * n)


class TestBuildRadioMapExamples:
    def test_two_value_histogram_additive(self):
        samples = [-40, -40, -40, -50]
        rm = build_radio_map([trace_from_values(Location("A", 0, 0), {S1: samples})])
        h = rm.histogram("A", S1)
        # frozen: 3.004 / 4.404 and 1.004 / 4.404
        assert h.probability(-40) == pytest.approx(0.6821071752951862, rel=1e-15)
        assert h.probability(-50) == pytest.approx(0.22797456857402362, rel=1e-15)
        assert h.probability(-40) == pytest.approx(float(additive_oracle(samples, -40)), rel=1e-15)
        assert h.sample_count == 4

    def test_single_value_histogram(self):
        rm = build_radio_map([trace_from_values(Location("A", 0, 0), {S1: [-60] * 30})])
        probs = rm.histogram("A", S1).probs
        assert np.argmax(probs) == -60 - (-100)
        others = np.delete(probs, 40)
        assert np.all(others == others[0])
        assert others[0] == pytest.approx(float(additive_oracle([-60] * 30, -59)), rel=1e-15)

    def test_full_scale_grid(self):
        env = generate_environment(seed=3)
        rm = build_radio_map(simulate_traces(env, "train", seed=3))
        assert len(rm.locations) == 53 and len(rm.streams) == 6
        assert len(rm.histograms) == 318
        assert np.all(rm.sample_counts == 300)


class TestHistogramProbability:
    def test_observed_value(self):
        h = build_histogram([-40] * 4 + [-50])
        # frozen: (0.8 + 1e-3) / (1 + 101e-3)
        assert histogram_probability(h, -40) == pytest.approx(0.7275204359673024, rel=1e-15)

    def test_unseen_value_additive(self):
        h = build_histogram([-40] * 4 + [-50])
        assert histogram_probability(h, -77) == pytest.approx(1e-3 / (1 + 101e-3), rel=1e-15)
        assert histogram_probability(h, -77) == pytest.approx(
            SmoothingConfig().min_probability(N_BINS), rel=1e-15
        )

    def test_unseen_value_floor_mode(self):
        h = build_histogram([-40] * 4 + [-50], smoothing=SmoothingConfig(1e-3, "floor-and-renormalize"))
        assert histogram_probability(h, -77) == 1e-3
        assert h.probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_sums_to_one(self):
        h = build_histogram([-40] * 4 + [-50])
        assert sum(histogram_probability(h, v) for v in range(-100, 1)) == pytest.approx(1.0, abs=1e-9)

    def test_out_of_range(self):
        h = build_histogram([-40])
        with pytest.raises(OutOfRangeValue):
            histogram_probability(h, 5)
        with pytest.raises(OutOfRangeValue):
            histogram_probability(h, -101)


class TestErrors:
    def test_empty_traces(self):
        with pytest.raises(EmptyTraces):
            build_radio_map([])

    def test_missing_stream_names_location_and_stream(self):
        t = trace_from_values(Location("A", 0, 0), {S1: [-40, -41]})
        with pytest.raises(MissingStream) as info:
            build_radio_map([t], streams=[S1, S2])
        assert info.value.location == "A" and info.value.stream == S2
        assert "A" in str(info.value) and str(S2) in str(info.value)

    def test_out_of_range_sample(self):
        t = TrainingTrace(Location("A", 0, 0), [RssiSample(S1, 3, 0.0)])
        with pytest.raises(OutOfRangeSample):
            build_radio_map([t])

    def test_duplicate_location(self):
        t = trace_from_values(Location("A", 0, 0), {S1: [-40]})
        with pytest.raises(ValueError):
            build_radio_map([t, t])

    def test_floor_too_large(self):
        with pytest.raises(ValueError):
            smooth_counts(np.ones(101), SmoothingConfig(0.01))


sample_lists = st.lists(st.integers(-100, 0), min_size=1, max_size=400)
modes = st.sampled_from(["additive", "floor-and-renormalize"])
floors = st.floats(1e-6, 9e-3)


class TestSmoothingProperties:
    @given(sample_lists, modes, floors)
    def test_normalized_and_floored(self, values, mode, floor):
        cfg = SmoothingConfig(floor, mode)
        h = build_histogram(values, smoothing=cfg)
        assert abs(h.probs.sum() - 1.0) <= 1e-9
        assert np.all(h.probs > 0) and np.all(h.probs <= 1)
        assert h.probs.min() >= cfg.min_probability(N_BINS) * (1 - 1e-12)

    @given(sample_lists, modes, floors)
    def test_ranking_preserved(self, values, mode, floor):
        h = build_histogram(values, smoothing=SmoothingConfig(floor, mode))
        counts = {v: values.count(v) for v in set(values)}
        for a in counts:
            for b in counts:
                if counts[a] > counts[b]:
                    assert h.probability(a) >= h.probability(b)

    @settings(max_examples=25)
    @given(sample_lists, modes)
    def test_deterministic_rebuild(self, values, mode):
        cfg = SmoothingConfig(1e-3, mode)
        t = trace_from_values(Location("A", 0, 0), {S1: values, S2: values[::-1]})
        assert build_radio_map([t], smoothing=cfg) == build_radio_map([t], smoothing=cfg)


def test_raw_means_recorded():
    t = trace_from_values(Location("A", 0, 0), {S1: [-40, -50], S2: [-70, -71, -72]})
    rm = build_radio_map([t])
    assert rm.means[0, 0] == -45.0
    assert rm.means[0, 1] == -71.0
    assert rm.sample_counts.tolist() == [[2, 3]]

import numpy as np
import pytest

from dfploc.core import Location, PassiveRadioMap, RssiSample, SmoothingConfig, StreamId
from dfploc.radiomap import TrainingTrace

S1 = StreamId("AP1", "MP1")
S2 = StreamId("AP2", "MP1")
S3 = StreamId("AP1", "MP2")


def explicit_map(table, coords=None, rssi_range=(-100, 0), means=None):
    """Radio map from {loc_id: {stream: {dBm: prob}}}.

    Mass not assigned explicitly is spread evenly over the other bins.
    """
    lo, hi = rssi_range
    n_bins = hi - lo + 1
    loc_ids = list(table)
    streams = list(next(iter(table.values())))
    probs = np.empty((len(loc_ids), len(streams), n_bins))
    for li, lid in enumerate(loc_ids):
        for si, s in enumerate(streams):
            given = table[lid][s]
            rest = (1.0 - sum(given.values())) / (n_bins - len(given))
            row = np.full(n_bins, rest)
            for v, p in given.items():
                row[v - lo] = p
            probs[li, si] = row
    coords = coords or {lid: (float(i), 0.0) for i, lid in enumerate(loc_ids)}
    locations = [Location(lid, *coords[lid]) for lid in loc_ids]
    counts = np.full((len(loc_ids), len(streams)), 100)
    if means is None:
        means = np.zeros((len(loc_ids), len(streams)))
    return PassiveRadioMap(locations, streams, probs, counts, means, rssi_range, SmoothingConfig())


def trace_from_values(location, per_stream, rate_hz=5.0):
    """TrainingTrace with the given per-stream value lists, interleaved by time."""
    samples = []
    length = max(len(v) for v in per_stream.values())
    for k in range(length):
        for s, vals in per_stream.items():
            if k < len(vals):
                samples.append(RssiSample(s, int(vals[k]), k / rate_hz))
    return TrainingTrace(location, samples)


@pytest.fixture
def streams():
    return (S1, S2, S3)


# acceptance verdicts, filled in by test_acceptance and echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from trajcurate.core import Kind, Scene, Trajectory, make_track
from trajcurate.lanes import Lane, LaneGraph

coord = st.floats(-200.0, 200.0, allow_nan=False, allow_infinity=False, width=64)


def xy_arrays(min_len=1, max_len=50):
    return st.integers(min_len, max_len).flatmap(lambda n: arrays(np.float64, (n, 2), elements=coord))


def straight(v, n, start=1, heading=0.0, origin=(0.0, 0.0), agent_id="a"):
    """Constant-velocity future of ``n`` samples beginning at ``start``."""
    t = np.arange(start, start + n) * 0.1
    d = np.array([np.cos(heading), np.sin(heading)])
    return Trajectory(agent_id, np.asarray(origin) + v * t[:, None] * d, Kind.FUTURE, start)


def straight_track(agent_id, v, heading=0.0, origin=(0.0, 0.0), n_past=20, n_future=30):
    d = np.array([np.cos(heading), np.sin(heading)])
    t = np.arange(-(n_past - 1), n_future + 1) * 0.1
    xy = np.asarray(origin) + v * t[:, None] * d
    return make_track(agent_id, xy[:n_past], xy[n_past:])


def two_lane_road():
    xs = np.linspace(-150.0, 150.0, 31)
    e1 = Lane("E1", np.c_[xs, np.full_like(xs, -1.75)], right_neighbor="E2")
    e2 = Lane("E2", np.c_[xs, np.full_like(xs, -5.25)], left_neighbor="E1")
    w1 = Lane("W1", np.c_[xs[::-1], np.full_like(xs, 1.75)])
    return LaneGraph([e1, e2, w1])


def scene_of(tracks, target="000", lanes=None, scene_id="s"):
    return Scene(scene_id, target, {t.agent_id: t for t in tracks}, lanes or LaneGraph([]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

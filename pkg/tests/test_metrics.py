import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajcurate.core import Trajectory
from trajcurate.errors import EmptyCorpus, InvalidTrajectory, LengthMismatch
from trajcurate.labeling import IntentClass, InteractionPair, PairReason
from trajcurate.metrics import (
    CamMode,
    MetricsConfig,
    PredictionSet,
    aggregate,
    cam,
    cam_count,
    evaluate_scene,
    i_min_fde,
    interacting_fdes,
    min_fde,
    miss_rate,
    ni_min_fde,
)

import oracles


def random_set(rng, aid="a", k=6, t=30):
    gt = Trajectory(aid, rng.normal(0, 10, (t, 2)))
    modes = gt.xy[None] + rng.normal(0, 3, (k, t, 2))
    return PredictionSet(aid, modes, rng.dirichlet(np.ones(k))), gt


def pair(other, retained=True):
    return InteractionPair("000", other, 1.0, False, retained, PairReason.DISTANCE_PASS, IntentClass.STRAIGHT)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_min_fde_matches_scan_and_is_monotone(seed, k):
    rng = np.random.default_rng(seed)
    p, gt = random_set(rng, k=k)
    assert min_fde(p, gt) == oracles.min_fde(p.modes, gt.xy)
    prev = np.inf
    for j in range(1, k + 1):
        v = min_fde(PredictionSet("a", p.modes[:j], p.confidences[:j]), gt)
        assert v <= prev
        prev = v


def test_min_fde_length_mismatch():
    p = PredictionSet("a", np.zeros((2, 30, 2)), [0.5, 0.5])
    with pytest.raises(LengthMismatch):
        min_fde(p, Trajectory("a", np.zeros((29, 2))))


def test_prediction_set_validation():
    with pytest.raises(InvalidTrajectory):
        PredictionSet("a", np.zeros((2, 3, 2)), [1.0])
    with pytest.raises(InvalidTrajectory):
        PredictionSet("a", np.full((1, 3, 2), np.nan), [1.0])
    with pytest.raises(InvalidTrajectory):
        PredictionSet("a", np.zeros((1, 3, 2)), [-1.0])
    assert PredictionSet("a", np.zeros((3, 2)), [1.0]).k == 1


def test_miss_rate_threshold_is_strict():
    assert miss_rate([2.0, 2.0000001, 0.0, 5.0]) == 0.5
    with pytest.raises(EmptyCorpus):
        miss_rate([])


def test_interacting_metrics_all_and_strong():
    rng = np.random.default_rng(0)
    preds, gts = {}, {}
    for aid in ("000", "001", "002", "003", "004"):
        preds[aid], gts[aid] = random_set(rng, aid)
    del preds["004"]
    pairs = [pair("001"), pair("002"), pair("003", retained=False), pair("004")]
    weak = {"001": False, "002": True}
    vals, missing = interacting_fdes(preds, gts, pairs)
    assert missing == 1
    assert vals == [oracles.min_fde(preds[a].modes, gts[a].xy) for a in ("001", "002")]
    strong = i_min_fde(preds, gts, pairs, weak, strong_filter=True)
    assert strong == oracles.min_fde(preds["001"].modes, gts["001"].xy)
    with pytest.raises(EmptyCorpus):
        i_min_fde(preds, gts, [pair("003", retained=False)])


def test_ni_min_fde():
    assert ni_min_fde([(1.0, False), (5.0, True), (3.0, False)]) == 2.0
    with pytest.raises(EmptyCorpus):
        ni_min_fde([(1.0, True)])


def line(aid, y, t=10, x0=0.0, v=1.0):
    return Trajectory(aid, np.c_[x0 + v * np.arange(t), np.full(t, y)])


def test_cam_counts_false_near_collisions():
    gts = {"a": line("a", 0.0), "b": line("b", 5.0)}
    # predicted b drifts to within 1 m of a from t index 5 on
    pb = gts["b"].xy.copy()
    pb[5:, 1] = 1.0
    preds = {
        "a": PredictionSet("a", [gts["a"].xy, gts["a"].xy + 50], [0.9, 0.1]),
        "b": PredictionSet("b", [pb, gts["b"].xy], [0.6, 0.4]),
    }
    assert cam_count(preds, gts) == 5
    # true near collision is not a false one
    close = {"a": line("a", 0.0), "b": line("b", 1.0)}
    same = {k: PredictionSet(k, [v.xy], [1.0]) for k, v in close.items()}
    assert cam_count(same, close) == 0
    # best-of-k: mode 1 of b does not come close to mode 1 of a, so nothing fires for all k
    assert cam_count(preds, gts, MetricsConfig(cam_mode=CamMode.BEST_OF_K)) == 0
    both = {k: PredictionSet(k, [p.modes[0], p.modes[0]], [0.5, 0.5]) for k, p in preds.items()}
    assert cam_count(both, gts, MetricsConfig(cam_mode="best-of-k")) == 5


def test_cam_handles_unequal_horizons_and_threshold():
    gts = {"a": line("a", 0.0, t=10), "b": Trajectory("b", np.c_[np.arange(4.0), np.full(4, 3.0)], start=1)}
    preds = {"a": PredictionSet("a", [gts["a"].xy], [1.0]), "b": PredictionSet("b", [gts["b"].xy - [0, 2.5]], [1.0])}
    assert cam_count(preds, gts) == 4
    assert cam_count(preds, gts, MetricsConfig(d_cam=0.4)) == 0


def test_cam_normalises_by_scene_count():
    gts = {"a": line("a", 0.0), "b": line("b", 5.0)}
    preds = {k: PredictionSet(k, [v.xy * [1, 0]], [1.0]) for k, v in gts.items()}
    n = cam_count(preds, gts)
    assert n == 10
    assert cam([(preds, gts)]) == 10.0
    empty = ({}, {})
    assert cam([(preds, gts), empty]) == 5.0
    with pytest.raises(EmptyCorpus):
        cam([])


def test_evaluate_and_aggregate():
    rng = np.random.default_rng(3)
    evals = []
    targets = []
    for s in range(4):
        preds, gts = {}, {}
        for aid in ("000", "001"):
            preds[aid], gts[aid] = random_set(rng, aid)
        pairs = [pair("001")] if s % 2 else []
        ev = evaluate_scene(f"s{s}", "000", preds, gts, pairs, {"001": False})
        evals.append(ev)
        targets.append((oracles.min_fde(preds["000"].modes, gts["000"].xy), bool(pairs)))
    rep = aggregate(evals)
    assert rep.min_fde == pytest.approx(oracles.mean([t for t, _ in targets]), rel=1e-15)
    assert rep.ni_min_fde == pytest.approx(oracles.mean([t for t, i in targets if not i]), rel=1e-15)
    assert rep.n_interacting == rep.n_strong == 2
    assert rep.i_min_fde == rep.i_min_fde_strong
    assert rep.mr == oracles.miss_rate([t for t, _ in targets], 2.0)
    # order independence
    assert aggregate(evals[::-1]) == rep
    assert "min_fde=" in rep.to_text()
    with pytest.raises(EmptyCorpus):
        aggregate([])

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trajcurate.errors import EmptyPairSet, LabelOutOfRange, LengthMismatch
from trajcurate.losses import (
    LossWeights,
    cross_entropy,
    log_softmax,
    main_trajectory_loss,
    pretext_loss,
    scene_pretext_losses,
    select_mode,
    smooth_l1,
    softmax,
    total_loss,
)

import oracles

finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(finite, finite)
def test_smooth_l1_scalar_matches_oracle(p, t):
    assert smooth_l1(p, t).value == pytest.approx(oracles.smooth_l1_scalar(p - t), rel=1e-12, abs=1e-12)


def test_smooth_l1_transition_is_continuous():
    below, above = smooth_l1(1.0 - 1e-12, 0.0), smooth_l1(1.0, 0.0)
    assert above.value == 0.5 and below.value == pytest.approx(0.5, abs=1e-11)
    assert above.grad[0] == 1.0 and below.grad[0] == pytest.approx(1.0, abs=1e-11)
    assert smooth_l1(0.0, 0.0).grad[0] == 0.0


@given(st.lists(st.floats(-20, 20), min_size=2, max_size=8), st.data())
def test_cross_entropy_matches_oracle(z, data):
    y = data.draw(st.integers(0, len(z) - 1))
    r = cross_entropy(z, y)
    assert r.value == pytest.approx(oracles.cross_entropy_scalar(z, y), rel=1e-9, abs=1e-12)
    assert r.value >= 0
    assert r.grad.sum() == pytest.approx(0.0, abs=1e-12)


def test_cross_entropy_is_stable_for_large_logits():
    r = cross_entropy([1000.0, 0.0, -1000.0], 0)
    assert r.value == 0.0 and np.all(np.isfinite(r.grad))
    r = cross_entropy([1000.0, 0.0], 1)
    assert r.value == pytest.approx(1000.0)
    np.testing.assert_allclose(softmax([1e4, 1e4]), [0.5, 0.5])
    assert np.isfinite(log_softmax([-1e308, 0.0])).all()


@pytest.mark.parametrize("label", [-1, 3, 1.5])
def test_cross_entropy_label_range(label):
    with pytest.raises(LabelOutOfRange):
        cross_entropy([0.0, 1.0, 2.0], label)


def test_pretext_loss_mean_and_errors():
    assert pretext_loss([1.0, 2.0, 6.0]) == 3.0
    assert pretext_loss([4.0], k_target=1) == 4.0
    with pytest.raises(EmptyPairSet):
        pretext_loss([])
    with pytest.raises(LengthMismatch):
        pretext_loss([1.0, 2.0], k_target=3)


@given(finite, finite, st.sampled_from([0.0, 0.5, 1.0, 2.0]))
def test_total_loss_linear_in_pretext(main, p, lam):
    w = LossWeights(lam)
    assert total_loss(main, p, w) == main + lam * p
    if lam == 0:
        assert total_loss(main, math.inf, w) == main


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12))
def test_select_mode_is_first_argmin(v):
    assert select_mode(v) == oracles.argmin_first(v)


def test_select_mode_ties():
    assert select_mode([3.0, 1.0, 1.0, 2.0]) == 1
    with pytest.raises(ValueError):
        select_mode([])


def test_main_loss_and_scene_pretext():
    gt = np.zeros((30, 2))
    modes = np.stack([np.full((30, 2), 0.5), np.zeros((30, 2)), np.full((30, 2), 3.0)])
    per = main_trajectory_loss(modes, gt)
    np.testing.assert_allclose(per, [0.25, 0.0, 5.0])
    k = select_mode(per)
    out = scene_pretext_losses(
        k,
        range_gap_preds=[[0.0, 10.0, 0.0], [0.0, 12.0, 0.0]],
        range_gap_targets=[10.0, 10.0],
        logits={"closest": [[[0, 0, 0, 0], [10, 0, 0, 0], [0, 0, 0, 0]]] * 2},
        labels={"closest": [0, 0]},
    )
    assert out["range_gap"] == pytest.approx((0.0 + 1.5) / 2)
    assert out["closest"] == pytest.approx(oracles.cross_entropy_scalar([10, 0, 0, 0], 0))
    assert scene_pretext_losses(k) == {}
    with pytest.raises(LengthMismatch):
        main_trajectory_loss(modes, np.zeros((29, 2)))

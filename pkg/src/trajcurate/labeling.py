"""Interaction labeling: distance screening, target intent, oncoming filter.

For each scene only (target, other) pairs are considered. A pair is a
candidate when the closest approach of the two ground-truth futures, taken
over *all* pairs of sample times, is below ``d_th``. Candidates that are
oncoming are dropped unless the target is turning left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .core import DT, AgentTrack, Scene, Trajectory, heading_at, join, wrap_angle
from .errors import AllStationary, EmptyTrajectory, TrajectoryTooShort
from .lanes import LaneGraph


class IntentClass(str, Enum):
    STRAIGHT = "Straight"
    LANE_CHANGE = "LaneChange"
    RIGHT_TURN = "RightTurn"
    LEFT_TURN = "LeftTurn"
    RIGHT_TURN_WAITING = "RightTurnWaiting"
    LEFT_TURN_WAITING = "LeftTurnWaiting"
    OTHER = "Other"

    @property
    def is_left(self) -> bool:
        return self in (IntentClass.LEFT_TURN, IntentClass.LEFT_TURN_WAITING)

    @property
    def is_right(self) -> bool:
        return self in (IntentClass.RIGHT_TURN, IntentClass.RIGHT_TURN_WAITING)


class PairReason(str, Enum):
    DISTANCE_PASS = "DistancePass"
    FILTERED_ONCOMING = "FilteredOncoming"
    RETAINED_ONCOMING_LEFT_TURN = "RetainedOncomingLeftTurn"


@dataclass(frozen=True)
class LabelConfig:
    d_th: float = 5.0
    min_traj_len: int = 10
    oncoming_angle: float = 2.0 * math.pi / 3.0
    turn_heading_delta: float = math.pi / 6.0
    waiting_speed: float = 0.5
    lane_change_lateral: float = 1.5
    uturn_heading_delta: float = 3.0 * math.pi / 4.0

    def __post_init__(self) -> None:
        for name in ("d_th", "oncoming_angle", "turn_heading_delta", "waiting_speed",
                     "lane_change_lateral", "uturn_heading_delta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"LabelConfig.{name} must be > 0")
        if self.min_traj_len < 2:
            raise ValueError("LabelConfig.min_traj_len must be >= 2")
        if not (math.pi / 2 < self.oncoming_angle <= math.pi):
            raise ValueError("LabelConfig.oncoming_angle must lie in (pi/2, pi]")


@dataclass(frozen=True)
class InteractionPair:
    target_id: str
    other_id: str
    d_min: float
    oncoming: bool
    retained: bool
    reason: PairReason
    intent: IntentClass


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def min_pairwise_distance(a: Trajectory, b: Trajectory) -> float:
    """Closest approach over every (t1, t2) combination of the two tracks."""
    if len(a) == 0 or len(b) == 0:
        raise EmptyTrajectory("min_pairwise_distance needs two non-empty trajectories")
    return float(_pairwise(a.xy, b.xy).min())


def closest_cross_time(a: Trajectory, b: Trajectory) -> tuple[float, int, int]:
    """Cross-time closest approach and the sample indices at which it occurs.

    Ties resolve to the smallest ``t1`` and then the smallest ``t2``.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptyTrajectory("closest_cross_time needs two non-empty trajectories")
    d = _pairwise(a.xy, b.xy)
    i, j = np.unravel_index(int(np.argmin(d)), d.shape)
    return float(d[i, j]), a.start + int(i), b.start + int(j)


# --- intent -----------------------------------------------------------------

def _window(n: int) -> int:
    return max(1, min(10, (n - 1) // 4))


def _chord_heading(xy: np.ndarray, i: int, j: int) -> Optional[float]:
    v = xy[j] - xy[i]
    if math.hypot(v[0], v[1]) < 1e-6:
        return None
    return math.atan2(v[1], v[0])


def _lane_heading(lanes: LaneGraph, point: np.ndarray, approx: float) -> Optional[float]:
    """Direction of the lane segment nearest ``point`` if it agrees with ``approx``."""
    lane_id = lanes.assign(point)
    if lane_id is None:
        return None
    lane = lanes[lane_id]
    a = lane.centerline[:-1]
    d = np.linalg.norm((a + lane.centerline[1:]) / 2 - point, axis=1)
    u = lane.direction[int(np.argmin(d))]
    h = math.atan2(u[1], u[0])
    return h if abs(wrap_angle(h - approx)) < math.pi / 4 else None


def track_geometry(track: Trajectory, lanes: Optional[LaneGraph] = None) -> tuple[float, float, float]:
    """(heading change, lateral offset, mean speed) of a track.

    Headings are chord directions over a short window at each end, which
    keeps them stable under per-sample position noise. The lateral offset is
    the end point's signed distance from the line through the start point
    along the initial heading. Mean speed averages the same windowed chords.
    """
    xy = track.xy
    n = len(xy)
    w = _window(n)
    spans = np.linalg.norm(xy[w:] - xy[:-w], axis=1)
    speed = float(spans.mean() / (w * DT))
    h0 = _chord_heading(xy, 0, w)
    h1 = _chord_heading(xy, n - 1 - w, n - 1)
    if h0 is None or h1 is None:
        moving = np.flatnonzero(np.linalg.norm(np.diff(xy, axis=0), axis=1) >= 1e-6)
        if len(moving) == 0:
            raise AllStationary(f"agent {track.agent_id!r}: no moving step")
        h0 = h0 if h0 is not None else _chord_heading(xy, moving[0], moving[0] + 1)
        h1 = h1 if h1 is not None else _chord_heading(xy, moving[-1], moving[-1] + 1)
    if lanes is not None and len(lanes):
        lane_h = _lane_heading(lanes, xy[0], h0)
        if lane_h is not None:
            h0 = lane_h
    dtheta = wrap_angle(h1 - h0)
    rel = xy[-1] - xy[0]
    lateral = -math.sin(h0) * rel[0] + math.cos(h0) * rel[1]
    return dtheta, lateral, speed


def classify_intent(
    target_past: Trajectory,
    target_future: Trajectory,
    lanes: Optional[LaneGraph] = None,
    cfg: LabelConfig = LabelConfig(),
) -> IntentClass:
    """Threshold classifier over heading change, lateral offset and speed."""
    track = join(target_past, target_future)
    if len(track) < cfg.min_traj_len:
        raise TrajectoryTooShort(
            f"agent {track.agent_id!r}: {len(track)} samples < {cfg.min_traj_len}"
        )
    try:
        dtheta, lateral, speed = track_geometry(track, lanes)
    except AllStationary:
        return IntentClass.OTHER
    slow = speed < cfg.waiting_speed
    if abs(dtheta) >= cfg.uturn_heading_delta:
        return IntentClass.OTHER
    if dtheta >= cfg.turn_heading_delta:
        return IntentClass.LEFT_TURN_WAITING if slow else IntentClass.LEFT_TURN
    if dtheta <= -cfg.turn_heading_delta:
        return IntentClass.RIGHT_TURN_WAITING if slow else IntentClass.RIGHT_TURN
    if slow:
        # barely moving and not turning: nothing to say about intent
        return IntentClass.OTHER
    if abs(lateral) > cfg.lane_change_lateral:
        return IntentClass.LANE_CHANGE
    return IntentClass.STRAIGHT


# --- oncoming ---------------------------------------------------------------

def _heading_near_present(traj: Trajectory) -> float:
    if len(traj) < 2:
        raise AllStationary(f"agent {traj.agent_id!r}: fewer than two samples")
    t = min(max(0, traj.start + 1), traj.end)
    return heading_at(traj, t)


def is_oncoming(target: Trajectory, other: Trajectory, cfg: LabelConfig = LabelConfig()) -> bool:
    """True when the headings at t=0 differ by more than ``cfg.oncoming_angle``.

    Tracks that do not cover t=0 use the step closest to it.
    """
    dh = wrap_angle(_heading_near_present(target) - _heading_near_present(other))
    return abs(dh) > cfg.oncoming_angle


# --- pair selection ----------------------------------------------------------

def label_pair(
    target: AgentTrack, other: AgentTrack, intent: IntentClass, cfg: LabelConfig
) -> Optional[InteractionPair]:
    if len(other.future) < cfg.min_traj_len:
        return None
    d_min = min_pairwise_distance(target.future, other.future)
    if not d_min < cfg.d_th:
        return None
    try:
        oncoming = is_oncoming(target.full, other.full, cfg)
    except AllStationary:
        oncoming = False  # a parked vehicle has no direction to oppose
    if not oncoming:
        reason, retained = PairReason.DISTANCE_PASS, True
    elif intent.is_left:
        reason, retained = PairReason.RETAINED_ONCOMING_LEFT_TURN, True
    else:
        reason, retained = PairReason.FILTERED_ONCOMING, False
    return InteractionPair(target.agent_id, other.agent_id, d_min, oncoming, retained, reason, intent)


def target_intent(scene: Scene, cfg: LabelConfig = LabelConfig()) -> Optional[IntentClass]:
    """Intent of the scene's target, or None if its track is too short to label."""
    target = scene.target
    if len(target.future) < cfg.min_traj_len:
        return None
    try:
        return classify_intent(target.past, target.future, scene.lanes, cfg)
    except TrajectoryTooShort:
        return None


def label_interactions(scene: Scene, cfg: LabelConfig = LabelConfig()) -> list[InteractionPair]:
    """Candidate pairs for ``scene`` sorted by other agent id.

    Filtered oncoming pairs stay in the output with ``retained=False`` so the
    filter can be audited.
    """
    intent = target_intent(scene, cfg)
    if intent is None:
        return []
    pairs = []
    for other in scene.others():
        pair = label_pair(scene.target, other, intent, cfg)
        if pair is not None:
            pairs.append(pair)
    return sorted(pairs, key=lambda p: p.other_id)


def retained(pairs: list[InteractionPair]) -> list[InteractionPair]:
    return [p for p in pairs if p.retained]

"""Pseudo-labels for the four pair-wise pretext tasks.

All labels are computed from ground-truth futures of a retained
(target, other) pair:

* range gap: distance between the two agents at t = 2 s (sample 20);
* closest distance: minimum distance over *aligned* timesteps, binned at
  5 / 10 / 15 m (upper edges inclusive);
* direction of movement: final minus initial distance, split at +-2 m;
* type of interaction: weak / lead / follow from lane context and the
  arrival order at the cross-time closest-approach point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .core import AgentTrack, Scene, Trajectory
from .errors import EmptyOverlap, HorizonTooShort, TrajCurateError
from .labeling import InteractionPair, IntentClass, closest_cross_time

log = logging.getLogger(__name__)

RANGE_GAP_T = 20
CD_EDGES = (5.0, 10.0, 15.0)
DIR_THRESHOLD = 2.0
DEFAULT_EPS_D = 5.0
LANE_RADIUS = 2.0


@dataclass(frozen=True)
class RangeGapLabel:
    gap: float


@dataclass(frozen=True)
class ClosestDistClass:
    class_id: int
    d_gt: float


@dataclass(frozen=True)
class DirMoveClass:
    class_id: int
    dir_gt: float


class InteractionType(str, Enum):
    CLOSE_LEAD = "CloseLead"
    CLOSE_FOLLOW = "CloseFollow"
    LEFT_TURN_LEAD = "LeftTurnLead"
    LEFT_TURN_FOLLOW = "LeftTurnFollow"
    WEAK = "Weak"

    @property
    def class_id(self) -> int:
        return list(InteractionType).index(self)


@dataclass(frozen=True)
class InteractionTypeClass:
    kind: InteractionType
    t1: Optional[int]
    t2: Optional[int]
    d_I: float
    lane_rule: bool = False
    lane_fallback: bool = False

    @property
    def class_id(self) -> int:
        return self.kind.class_id

    @property
    def is_weak(self) -> bool:
        return self.kind is InteractionType.WEAK


@dataclass(frozen=True)
class PretextLabelSet:
    target_id: str
    other_id: str
    range_gap: RangeGapLabel
    closest: ClosestDistClass
    direction: DirMoveClass
    itype: InteractionTypeClass
    truncated: int = 0  # samples dropped to align the two futures


def _aligned(a: Trajectory, b: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = max(a.start, b.start), min(a.end, b.end)
    if hi < lo:
        raise EmptyOverlap(f"{a.agent_id!r}/{b.agent_id!r}: futures share no timestep")
    return a.xy[lo - a.start : hi - a.start + 1], b.xy[lo - b.start : hi - b.start + 1]


def range_gap_gt(target_future: Trajectory, other_future: Trajectory, t: int = RANGE_GAP_T) -> RangeGapLabel:
    if not (target_future.has(t) and other_future.has(t)):
        raise HorizonTooShort(
            f"{target_future.agent_id!r}/{other_future.agent_id!r}: no sample at t_index {t}"
        )
    d = target_future.at(t) - other_future.at(t)
    return RangeGapLabel(float(np.hypot(d[0], d[1])))


def closest_bin(d: float) -> int:
    for k, edge in enumerate(CD_EDGES):
        if d <= edge:
            return k
    return len(CD_EDGES)


def closest_distance_class(target_future: Trajectory, other_future: Trajectory) -> ClosestDistClass:
    a, b = _aligned(target_future, other_future)
    d = float(np.hypot(*(a - b).T).min())
    return ClosestDistClass(closest_bin(d), d)


def direction_bin(dir_gt: float) -> int:
    if dir_gt >= DIR_THRESHOLD:
        return 0
    if dir_gt <= -DIR_THRESHOLD:
        return 1
    return 2


def direction_class(target_future: Trajectory, other_future: Trajectory) -> DirMoveClass:
    """Receding (0), closing (1) or neither (2) between first and last common sample."""
    a, b = _aligned(target_future, other_future)
    if len(a) < 2:
        raise HorizonTooShort(
            f"{target_future.agent_id!r}/{other_future.agent_id!r}: need two common samples"
        )
    d_init = float(np.hypot(*(a[0] - b[0])))
    d_final = float(np.hypot(*(a[-1] - b[-1])))
    dir_gt = d_final - d_init
    return DirMoveClass(direction_bin(dir_gt), dir_gt)


def position_near_present(track: AgentTrack) -> np.ndarray:
    """Position at t=0, or the sample closest to it when t=0 is not observed."""
    full = track.full
    t = min(max(0, full.start), full.end)
    return full.at(t)


def lane_weak_rule(scene: Scene, other_id: str, intent: IntentClass) -> Optional[bool]:
    """Whether lane context alone makes the pair weak; None if the target has no lane."""
    lanes = scene.lanes
    target_lane = lanes.assign(position_near_present(scene.target), LANE_RADIUS) if len(lanes) else None
    if target_lane is None:
        return None
    other_lane = lanes.assign(position_near_present(scene.agents[other_id]), LANE_RADIUS)
    lane = lanes[target_lane]
    if intent is IntentClass.STRAIGHT:
        return other_lane != target_lane
    if intent.is_left:
        return other_lane is not None and other_lane == lane.right_neighbor
    if intent.is_right:
        return other_lane is not None and other_lane == lane.left_neighbor
    return False


def interaction_type_label(
    pair: InteractionPair,
    scene: Scene,
    intent: IntentClass,
    eps_d: float = DEFAULT_EPS_D,
) -> InteractionTypeClass:
    """Weak / lead / follow relation of ``pair.other_id`` with respect to the target.

    ``t1`` is the target's sample and ``t2`` the other's at the cross-time
    closest approach. ``t1 > t2`` means the other agent reaches the
    conflict point first and therefore leads; equal times count as lead.
    """
    target = scene.target.future
    other = scene.agents[pair.other_id].future
    d_I, t1, t2 = closest_cross_time(target, other)
    weak_by_lane = lane_weak_rule(scene, pair.other_id, intent)
    fallback = weak_by_lane is None
    if fallback:
        log.warning("scene %s: target has no lane assignment, using distance rule only", scene.scene_id)
    if weak_by_lane:
        return InteractionTypeClass(InteractionType.WEAK, None, None, d_I, lane_rule=True)
    if d_I > eps_d:
        return InteractionTypeClass(InteractionType.WEAK, None, None, d_I, lane_fallback=fallback)
    left = intent.is_left
    if t1 >= t2:
        kind = InteractionType.LEFT_TURN_LEAD if left else InteractionType.CLOSE_LEAD
    else:
        kind = InteractionType.LEFT_TURN_FOLLOW if left else InteractionType.CLOSE_FOLLOW
    return InteractionTypeClass(kind, t1, t2, d_I, lane_fallback=fallback)


def label_pair(
    scene: Scene, pair: InteractionPair, eps_d: float = DEFAULT_EPS_D
) -> PretextLabelSet:
    target = scene.target.future
    other = scene.agents[pair.other_id].future
    lo, hi = max(target.start, other.start), min(target.end, other.end)
    truncated = max(0, len(target) + len(other) - 2 * (hi - lo + 1))
    return PretextLabelSet(
        pair.target_id,
        pair.other_id,
        range_gap_gt(target, other),
        closest_distance_class(target, other),
        direction_class(target, other),
        interaction_type_label(pair, scene, pair.intent, eps_d),
        truncated,
    )


def label_scene(
    scene: Scene, pairs: list[InteractionPair], eps_d: float = DEFAULT_EPS_D
) -> tuple[list[PretextLabelSet], list[tuple[str, str]]]:
    """Label every retained pair.

    Returns the complete label sets and a list of ``(other_id, reason)`` for
    retained pairs whose futures cannot support all four labels; such pairs
    get no record at all rather than a partial one.
    """
    out, skipped = [], []
    for pair in pairs:
        if not pair.retained:
            continue
        try:
            out.append(label_pair(scene, pair, eps_d))
        except TrajCurateError as exc:
            skipped.append((pair.other_id, f"{type(exc).__name__}: {exc}"))
    return out, skipped

"""Trajectory and scene model, displacement preprocessing and scene-centric normalization.

Time indices follow the forecasting convention: the present sample is
``t_index == 0``, past samples are ``<= 0`` and future samples are ``>= 1``,
all at 10 Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

import numpy as np

from .errors import AllStationary, InvalidTrajectory, TrajectoryTooShort
from .lanes import LaneGraph

SAMPLE_HZ = 10
DT = 1.0 / SAMPLE_HZ
T_PAST = 20
T_FUTURE = 30
STATIONARY_EPS = 1e-6


class Kind(str, Enum):
    PAST = "past"
    FUTURE = "future"
    FULL = "full"  # past and future joined, used by intent/heading helpers


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Positions of one agent at consecutive 10 Hz sample indices.

    ``xy`` is an ``(N, 2)`` float64 array in meters; the sample index of row
    ``k`` is ``start + k``. Arrays are stored read-only.
    """

    agent_id: str
    xy: np.ndarray
    kind: Kind = Kind.FUTURE
    start: int = 1

    def __post_init__(self) -> None:
        xy = np.array(self.xy, dtype=np.float64)
        if xy.size == 0:
            xy = xy.reshape(0, 2)
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise InvalidTrajectory(f"agent {self.agent_id!r}: xy must be (N, 2), got {xy.shape}")
        if not np.all(np.isfinite(xy)):
            raise InvalidTrajectory(f"agent {self.agent_id!r}: non-finite coordinates")
        xy.setflags(write=False)
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "start", int(self.start))
        n = len(xy)
        if n and self.kind is Kind.PAST and self.start + n - 1 > 0:
            raise InvalidTrajectory(f"agent {self.agent_id!r}: past samples must have t_index <= 0")
        if n and self.kind is Kind.FUTURE and self.start < 1:
            raise InvalidTrajectory(f"agent {self.agent_id!r}: future samples must have t_index >= 1")

    def __len__(self) -> int:
        return len(self.xy)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.agent_id == other.agent_id
            and self.kind is other.kind
            and (self.start == other.start or len(self) == 0)
            and np.array_equal(self.xy, other.xy)
        )

    @property
    def t_index(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self.xy))

    @property
    def end(self) -> int:
        """Sample index of the last point (``start - 1`` when empty)."""
        return self.start + len(self.xy) - 1

    def has(self, t: int) -> bool:
        return self.start <= t <= self.end

    def at(self, t: int) -> np.ndarray:
        if not self.has(t):
            raise IndexError(f"agent {self.agent_id!r}: no sample at t_index {t}")
        return self.xy[t - self.start]

    def with_xy(self, xy: np.ndarray) -> "Trajectory":
        return replace(self, xy=xy)


def join(past: Trajectory, future: Trajectory) -> Trajectory:
    """Concatenate a past and a future track into one ``Kind.FULL`` trajectory.

    The two parts must be contiguous in time; when one is empty the other is
    returned relabelled.
    """
    if len(past) == 0:
        return Trajectory(future.agent_id, future.xy, Kind.FULL, future.start)
    if len(future) == 0:
        return Trajectory(past.agent_id, past.xy, Kind.FULL, past.start)
    if past.end + 1 != future.start:
        raise InvalidTrajectory(
            f"agent {past.agent_id!r}: past ends at {past.end}, future starts at {future.start}"
        )
    return Trajectory(past.agent_id, np.vstack([past.xy, future.xy]), Kind.FULL, past.start)


@dataclass(frozen=True)
class DisplacementSeq:
    deltas: np.ndarray  # (N-1, 2)
    origin: np.ndarray  # first position, kept for reconstruction

    def positions(self) -> np.ndarray:
        return np.vstack([self.origin, self.origin + np.cumsum(self.deltas, axis=0)])


def to_displacements(traj: Trajectory) -> DisplacementSeq:
    if len(traj) < 2:
        raise TrajectoryTooShort(f"agent {traj.agent_id!r}: need >= 2 points, got {len(traj)}")
    return DisplacementSeq(np.diff(traj.xy, axis=0), traj.xy[0].copy())


def heading_at(traj: Trajectory, t_index: int) -> float:
    """Heading (radians) of the step arriving at ``t_index``.

    A step shorter than 1e-6 m is degenerate; the most recent earlier
    non-degenerate step is used instead, and failing that the nearest later
    one.
    """
    if not (traj.has(t_index) and traj.has(t_index - 1)):
        raise IndexError(f"agent {traj.agent_id!r}: heading undefined at t_index {t_index}")
    steps = np.diff(traj.xy, axis=0)
    norms = np.hypot(steps[:, 0], steps[:, 1])
    k = t_index - traj.start - 1  # row of the step (t_index-1 -> t_index)
    ok = np.flatnonzero(norms >= STATIONARY_EPS)
    if len(ok) == 0:
        raise AllStationary(f"agent {traj.agent_id!r}: no moving step")
    earlier = ok[ok <= k]
    j = earlier[-1] if len(earlier) else ok[ok > k][0]
    return math.atan2(steps[j, 1], steps[j, 0])


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def wrap_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class NormalizationFrame:
    """Rigid world-to-scene transform: ``p' = R(-rotation) @ (p - origin)``.

    ``degenerate`` marks a translation-only frame used when the target was
    stationary over its last two past samples.
    """

    origin: tuple = (0.0, 0.0)
    rotation: float = 0.0
    degenerate: bool = False

    def apply(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return (xy - np.asarray(self.origin)) @ rotation_matrix(self.rotation)

    def invert(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return xy @ rotation_matrix(self.rotation).T + np.asarray(self.origin)

    def then(self, other: "NormalizationFrame") -> "NormalizationFrame":
        """Frame equivalent to applying ``self`` and then ``other``."""
        o = np.asarray(self.origin) + rotation_matrix(self.rotation) @ np.asarray(other.origin)
        return NormalizationFrame(
            (float(o[0]), float(o[1])),
            wrap_angle(self.rotation + other.rotation),
            self.degenerate or other.degenerate,
        )

    def is_identity(self, tol: float = 1e-9) -> bool:
        return abs(self.origin[0]) <= tol and abs(self.origin[1]) <= tol and abs(self.rotation) <= tol


@dataclass(frozen=True, eq=False)
class AgentTrack:
    past: Trajectory
    future: Trajectory

    def __post_init__(self) -> None:
        if self.past.kind is not Kind.PAST or self.future.kind is not Kind.FUTURE:
            raise InvalidTrajectory("AgentTrack needs a past and a future trajectory")
        if self.past.agent_id != self.future.agent_id:
            raise InvalidTrajectory("past/future agent ids differ")

    @property
    def agent_id(self) -> str:
        return self.past.agent_id

    @property
    def full(self) -> Trajectory:
        return join(self.past, self.future)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AgentTrack):
            return NotImplemented
        return self.past == other.past and self.future == other.future


def make_track(agent_id: str, past_xy, future_xy, past_end: int = 0, future_start: int = 1) -> AgentTrack:
    past_xy = np.asarray(past_xy, dtype=np.float64).reshape(-1, 2)
    return AgentTrack(
        Trajectory(agent_id, past_xy, Kind.PAST, past_end - len(past_xy) + 1),
        Trajectory(agent_id, future_xy, Kind.FUTURE, future_start),
    )


@dataclass(frozen=True, eq=False)
class Scene:
    scene_id: str
    target_id: str
    agents: Mapping[str, AgentTrack]
    lanes: LaneGraph = field(default_factory=LaneGraph)
    frame: NormalizationFrame = field(default_factory=NormalizationFrame)

    def __post_init__(self) -> None:
        agents = dict(sorted(self.agents.items()))
        for key, track in agents.items():
            if key != track.agent_id:
                raise InvalidTrajectory(f"agent key {key!r} != track id {track.agent_id!r}")
        if self.target_id not in agents:
            raise InvalidTrajectory(f"scene {self.scene_id!r}: target {self.target_id!r} missing")
        object.__setattr__(self, "agents", agents)

    @property
    def target(self) -> AgentTrack:
        return self.agents[self.target_id]

    def others(self):
        return [track for aid, track in self.agents.items() if aid != self.target_id]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scene):
            return NotImplemented
        return (
            self.scene_id == other.scene_id
            and self.target_id == other.target_id
            and self.agents == other.agents
            and self.lanes == other.lanes
            and self.frame == other.frame
        )

    def map_points(self, fn) -> "Scene":
        agents = {
            aid: AgentTrack(t.past.with_xy(fn(t.past.xy)), t.future.with_xy(fn(t.future.xy)))
            for aid, t in self.agents.items()
        }
        return replace(self, agents=agents, lanes=self.lanes.map_points(fn))


def scene_frame(scene: Scene) -> NormalizationFrame:
    """Frame that moves the target's present position to the origin, heading +x."""
    past = scene.target.past
    if len(past) < 2:
        raise TrajectoryTooShort(f"scene {scene.scene_id!r}: target past needs >= 2 points")
    p0, p1 = past.xy[-2], past.xy[-1]
    step = p1 - p0
    origin = (float(p1[0]), float(p1[1]))
    if math.hypot(step[0], step[1]) <= STATIONARY_EPS:
        return NormalizationFrame(origin, 0.0, degenerate=True)
    return NormalizationFrame(origin, math.atan2(step[1], step[0]))


def normalize_scene(scene: Scene) -> Scene:
    """Rigidly transform every trajectory and lane into the target-centric frame.

    The returned scene's ``frame`` maps the original (world) coordinates to
    the new ones, composed with whatever frame the input already carried, so
    ``scene.frame.invert`` always recovers world coordinates.
    """
    step = scene_frame(scene)
    out = scene.map_points(step.apply)
    return replace(out, frame=scene.frame.then(step))


def denormalize_scene(scene: Scene) -> Scene:
    """Inverse of :func:`normalize_scene`: back to world coordinates."""
    return replace(scene.map_points(scene.frame.invert), frame=NormalizationFrame())

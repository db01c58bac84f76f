"""Minimal lane graph: centerline polylines plus same-direction neighbours."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import InvalidTrajectory


@dataclass(frozen=True, eq=False)
class Lane:
    lane_id: str
    centerline: np.ndarray
    left_neighbor: Optional[str] = None
    right_neighbor: Optional[str] = None

    def __post_init__(self) -> None:
        pts = np.array(self.centerline, dtype=np.float64).reshape(-1, 2)
        if len(pts) < 2:
            raise InvalidTrajectory(f"lane {self.lane_id!r}: centerline needs >= 2 points")
        if not np.all(np.isfinite(pts)):
            raise InvalidTrajectory(f"lane {self.lane_id!r}: non-finite centerline")
        pts.setflags(write=False)
        object.__setattr__(self, "centerline", pts)

    @property
    def direction(self) -> np.ndarray:
        """(M-1, 2) unit heading of each centerline segment."""
        seg = np.diff(self.centerline, axis=0)
        norm = np.linalg.norm(seg, axis=1, keepdims=True)
        return seg / np.where(norm > 0, norm, 1.0)

    def distance_to(self, point) -> float:
        """Euclidean distance from ``point`` to the centerline polyline."""
        p = np.asarray(point, dtype=np.float64)
        a = self.centerline[:-1]
        ab = self.centerline[1:] - a
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.einsum("ij,ij->i", p - a, ab) / np.where(denom > 0, denom, 1.0)
        t = np.clip(t, 0.0, 1.0)
        closest = a + t[:, None] * ab
        return float(np.min(np.linalg.norm(closest - p, axis=1)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lane):
            return NotImplemented
        return (
            self.lane_id == other.lane_id
            and self.left_neighbor == other.left_neighbor
            and self.right_neighbor == other.right_neighbor
            and np.array_equal(self.centerline, other.centerline)
        )


class LaneGraph:
    """Ordered, validated collection of lanes keyed by id."""

    def __init__(self, lanes: Iterable[Lane] = ()):
        ordered = sorted(lanes, key=lambda lane: lane.lane_id)
        self._lanes = {lane.lane_id: lane for lane in ordered}
        if len(self._lanes) != len(ordered):
            raise InvalidTrajectory("duplicate lane ids")
        for lane in ordered:
            for ref in (lane.left_neighbor, lane.right_neighbor):
                if ref is not None and ref not in self._lanes:
                    raise InvalidTrajectory(f"lane {lane.lane_id!r}: unknown neighbour {ref!r}")

    def __iter__(self):
        return iter(self._lanes.values())

    def __len__(self) -> int:
        return len(self._lanes)

    def __getitem__(self, lane_id: str) -> Lane:
        return self._lanes[lane_id]

    def __contains__(self, lane_id: object) -> bool:
        return lane_id in self._lanes

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LaneGraph):
            return NotImplemented
        return list(self) == list(other)

    def __repr__(self) -> str:
        return f"LaneGraph({list(self._lanes)})"

    def map_points(self, fn: Callable[[np.ndarray], np.ndarray]) -> "LaneGraph":
        return LaneGraph(
            Lane(lane.lane_id, fn(lane.centerline), lane.left_neighbor, lane.right_neighbor)
            for lane in self
        )

    def assign(self, point, max_dist: float = 2.0) -> Optional[str]:
        """Id of the nearest lane whose centerline lies within ``max_dist`` of ``point``.

        Ties go to the lexicographically smallest lane id. Returns None when
        no lane is close enough.
        """
        best, best_d = None, max_dist
        for lane in self:
            d = lane.distance_to(point)
            if d <= best_d and (best is None or d < best_d):
                best, best_d = lane.lane_id, d
        return best

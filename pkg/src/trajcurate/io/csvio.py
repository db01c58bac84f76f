"""Argoverse-v1-style trajectory CSV ingestion and JSON lane files.

Expected columns: ``TIMESTAMP, TRACK_ID, OBJECT_TYPE, X, Y, CITY_NAME``.
The track whose ``OBJECT_TYPE`` is ``AGENT`` is the scene target. Absolute
timestamps are mapped to 10 Hz sample indices by rank; the sample at rank
``t_past - 1`` becomes ``t_index == 0``.

The parser is total: any byte sequence produces either a ``CsvScene`` or a
``DatasetError`` subclass. Malformed rows are skipped and listed in
``CsvScene.rejects``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..core import T_FUTURE, T_PAST, AgentTrack, Kind, Scene, Trajectory
from ..errors import (
    DatasetError,
    MalformedInput,
    MissingColumn,
    NoTargetAgent,
    NonMonotonicTimestamps,
    TrajCurateError,
)
from ..lanes import LaneGraph

REQUIRED = ("TIMESTAMP", "TRACK_ID", "OBJECT_TYPE", "X", "Y", "CITY_NAME")
TARGET_TYPE = "AGENT"
STEP_S = 0.1
JITTER_S = 0.01
MAX_BYTES = 32 * 1024 * 1024
MAX_ROWS = 500_000
MAX_FIELD = 4096


@dataclass
class CsvScene:
    scene: Scene
    city: str = ""
    rejects: list = field(default_factory=list)  # (line number, reason)


def _float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite")
    return v


def parse_trajectory_bytes(
    data: bytes,
    scene_id: str,
    lanes: Optional[LaneGraph] = None,
    t_past: int = T_PAST,
    t_future: int = T_FUTURE,
) -> CsvScene:
    if len(data) > MAX_BYTES:
        raise MalformedInput(f"{scene_id}: file larger than {MAX_BYTES} bytes")
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"{scene_id}: not UTF-8 ({exc.reason} at byte {exc.start})") from None
    if "\x00" in text:
        raise MalformedInput(f"{scene_id}: NUL byte in input")
    try:
        return _parse_text(text, scene_id, lanes or LaneGraph(), t_past, t_future)
    except csv.Error as exc:
        raise MalformedInput(f"{scene_id}: CSV syntax error: {exc}") from None


def _parse_text(text: str, scene_id: str, lanes: LaneGraph, t_past: int, t_future: int) -> CsvScene:
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if not header or all(not h.strip() for h in header):
        raise MalformedInput(f"{scene_id}: empty file")
    cols = {name.strip().upper(): i for i, name in enumerate(header)}
    missing = [c for c in REQUIRED if c not in cols]
    if missing:
        raise MissingColumn(f"{scene_id}: missing column(s) {', '.join(missing)}")
    idx = [cols[c] for c in REQUIRED]
    width = max(idx) + 1

    rejects: list = []
    rows: list[tuple[float, str, str, float, float]] = []
    cities: set[str] = set()
    for line_no, row in enumerate(reader, start=2):
        if len(rows) + len(rejects) >= MAX_ROWS:
            raise MalformedInput(f"{scene_id}: more than {MAX_ROWS} rows")
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < width:
            rejects.append((line_no, "too few fields"))
            continue
        ts, track, otype, x, y, city = (row[i].strip() for i in idx)
        if not track or len(track) > MAX_FIELD:
            rejects.append((line_no, "bad TRACK_ID"))
            continue
        try:
            rows.append((_float(ts), track, otype.upper(), _float(x), _float(y)))
        except ValueError:
            rejects.append((line_no, "unparseable number"))
            continue
        cities.add(city)
    if not rows:
        raise MalformedInput(f"{scene_id}: no valid rows")

    # per-track monotonicity in file order
    last: dict[str, float] = {}
    for ts, track, *_ in rows:
        if track in last and ts <= last[track]:
            raise NonMonotonicTimestamps(f"{scene_id}: track {track!r} timestamp {ts!r} not increasing")
        last[track] = ts

    stamps = np.unique(np.array([r[0] for r in rows]))
    steps = np.diff(stamps)
    if len(steps) and (np.any(steps < STEP_S - JITTER_S) or np.any(steps > STEP_S + JITTER_S)):
        k = int(np.flatnonzero((steps < STEP_S - JITTER_S) | (steps > STEP_S + JITTER_S))[0])
        raise NonMonotonicTimestamps(
            f"{scene_id}: sampling step {steps[k]!r}s at rank {k} outside {STEP_S}+-{JITTER_S}s"
        )
    if len(stamps) < t_past:
        raise MalformedInput(f"{scene_id}: {len(stamps)} timestamps, need >= {t_past}")
    rank = {float(t): i for i, t in enumerate(stamps)}

    targets = {track for _, track, otype, _, _ in rows if otype == TARGET_TYPE}
    if not targets:
        raise NoTargetAgent(f"{scene_id}: no row with OBJECT_TYPE == {TARGET_TYPE}")
    if len(targets) > 1:
        raise MalformedInput(f"{scene_id}: {len(targets)} tracks marked {TARGET_TYPE}")
    target_id = targets.pop()

    tracks: dict[str, list] = {}
    for ts, track, _, x, y in rows:
        tracks.setdefault(track, []).append((rank[ts] - (t_past - 1), x, y))

    agents = {}
    for track, pts in sorted(tracks.items()):
        t = np.array([p[0] for p in pts])
        xy = np.array([(p[1], p[2]) for p in pts])
        keep = t <= t_future
        t, xy = t[keep], xy[keep]
        if len(t) == 0:
            continue
        if np.any(np.diff(t) != 1):
            if track == target_id:
                raise MalformedInput(f"{scene_id}: target track has missing samples")
            rejects.append((0, f"track {track!r} has missing samples, dropped"))
            continue
        past = t <= 0
        agents[track] = AgentTrack(
            Trajectory(track, xy[past], Kind.PAST, int(t[0]) if past.any() else 0),
            Trajectory(track, xy[~past], Kind.FUTURE, int(t[~past][0]) if (~past).any() else 1),
        )
    try:
        scene = Scene(scene_id, target_id, agents, lanes)
    except TrajCurateError as exc:
        raise MalformedInput(f"{scene_id}: {exc}") from None
    return CsvScene(scene, ",".join(sorted(cities)), rejects)


def parse_trajectory_csv(path, lanes: Optional[LaneGraph] = None, **kw) -> CsvScene:
    """Parse one CSV file; a sibling ``<stem>.lanes.json`` is loaded when ``lanes`` is None."""
    path = Path(path)
    if lanes is None:
        lane_path = path.with_name(path.stem + ".lanes.json")
        if lane_path.exists():
            lanes = read_lane_file(lane_path)
    try:
        with open(path, "rb") as fh:
            data = fh.read(MAX_BYTES + 1)
    except OSError as exc:
        raise MalformedInput(f"{path}: {exc.strerror}") from None
    return parse_trajectory_bytes(data, path.stem, lanes, **kw)


def read_lane_file(path) -> LaneGraph:
    from .records import SCHEMA_VERSION, lanes_from_list
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if doc.get("schema_version") != SCHEMA_VERSION:
            from ..errors import SchemaVersionMismatch
            raise SchemaVersionMismatch(f"{path}: schema_version {doc.get('schema_version')!r}")
        return lanes_from_list(doc["lanes"])
    except DatasetError:
        raise
    except (OSError, ValueError, KeyError, TypeError, AttributeError, TrajCurateError) as exc:
        raise MalformedInput(f"{path}: bad lane file: {exc}") from None


def write_lane_file(path, lanes: LaneGraph) -> None:
    from .records import SCHEMA_VERSION, dumps, lanes_to_list
    Path(path).write_text(dumps({"schema_version": SCHEMA_VERSION, "lanes": lanes_to_list(lanes)}) + "\n",
                          encoding="utf-8")


def scene_to_csv(scene: Scene, t0: float = 0.0, city: str = "SYN") -> str:
    """Render a scene in the CSV layout (used by tests and demos)."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(REQUIRED)
    rows = []
    for aid, track in scene.agents.items():
        otype = TARGET_TYPE if aid == scene.target_id else "OTHERS"
        full = track.full
        for t, (x, y) in zip(full.t_index, full.xy):
            ts = t0 + (int(t) + T_PAST - 1) * STEP_S
            rows.append((ts, aid, otype, repr(float(x)), repr(float(y))))
    for ts, aid, otype, x, y in sorted(rows):
        w.writerow((f"{ts:.3f}", aid, otype, x, y, city))
    return out.getvalue()

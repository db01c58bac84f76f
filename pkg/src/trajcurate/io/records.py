"""Newline-delimited JSON records.

One JSON object per line, UTF-8, keys sorted. Every record carries
``schema_version`` and ``type``. Floats are written with ``repr`` precision
(17 significant digits) so coordinates round-trip exactly. Multi-scene files
are written in ``scene_id`` order.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional

from ..core import AgentTrack, Kind, NormalizationFrame, Scene, Trajectory
from ..errors import MalformedRecord, SchemaVersionMismatch, TrajCurateError
from ..labeling import InteractionPair, IntentClass, PairReason
from ..lanes import Lane, LaneGraph
from ..metrics import MetricsReport, PredictionSet
from ..pretext import (
    ClosestDistClass,
    DirMoveClass,
    InteractionType,
    InteractionTypeClass,
    PretextLabelSet,
    RangeGapLabel,
)
from ..scenarios import OracleAnnotation, ScenarioKind

SCHEMA_VERSION = 1


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=False)


# --- encoders -------------------------------------------------------------

def _traj(t: Trajectory) -> dict:
    return {"start": t.start, "xy": t.xy.tolist()}


def lanes_to_list(lanes: LaneGraph) -> list:
    return [
        {
            "lane_id": lane.lane_id,
            "centerline": lane.centerline.tolist(),
            "left_neighbor": lane.left_neighbor,
            "right_neighbor": lane.right_neighbor,
        }
        for lane in lanes
    ]


def scene_record(scene: Scene) -> dict:
    f = scene.frame
    return {
        "type": "scene",
        "scene_id": scene.scene_id,
        "target_id": scene.target_id,
        "frame": {"origin": list(f.origin), "rotation": f.rotation, "degenerate": f.degenerate},
        "agents": [
            {"agent_id": aid, "past": _traj(t.past), "future": _traj(t.future)}
            for aid, t in scene.agents.items()
        ],
        "lanes": lanes_to_list(scene.lanes),
    }


def pair_dict(p: InteractionPair) -> dict:
    return {
        "target_id": p.target_id,
        "other_id": p.other_id,
        "d_min": p.d_min,
        "oncoming": p.oncoming,
        "retained": p.retained,
        "reason": p.reason.value,
        "intent": p.intent.value,
    }


def pairs_record(scene_id: str, target_id: str, intent: Optional[IntentClass], pairs: list) -> dict:
    return {
        "type": "pairs",
        "scene_id": scene_id,
        "target_id": target_id,
        "intent": intent.value if intent is not None else None,
        "pairs": [pair_dict(p) for p in pairs],
    }


def label_dict(ls: PretextLabelSet) -> dict:
    it = ls.itype
    return {
        "target_id": ls.target_id,
        "other_id": ls.other_id,
        "range_gap": ls.range_gap.gap,
        "closest": {"class_id": ls.closest.class_id, "d_gt": ls.closest.d_gt},
        "direction": {"class_id": ls.direction.class_id, "dir_gt": ls.direction.dir_gt},
        "itype": {
            "kind": it.kind.value,
            "t1": it.t1,
            "t2": it.t2,
            "d_I": it.d_I,
            "lane_rule": it.lane_rule,
            "lane_fallback": it.lane_fallback,
        },
        "truncated": ls.truncated,
    }


def labels_record(scene_id: str, labels: list, skipped: list = ()) -> dict:
    return {
        "type": "labels",
        "scene_id": scene_id,
        "labels": [label_dict(ls) for ls in labels],
        "skipped": [{"other_id": o, "reason": r} for o, r in skipped],
    }


def predictions_record(scene_id: str, preds: Iterable[PredictionSet], frame: str = "scene",
                       pretext: Optional[dict] = None) -> dict:
    rec = {
        "type": "predictions",
        "scene_id": scene_id,
        "frame": frame,
        "agents": [
            {
                "agent_id": p.agent_id,
                "start": p.start,
                "modes": p.modes.tolist(),
                "confidences": p.confidences.tolist(),
            }
            for p in sorted(preds, key=lambda p: p.agent_id)
        ],
    }
    if pretext is not None:
        rec["pretext"] = pretext
    return rec


def oracle_record(o: OracleAnnotation) -> dict:
    return {
        "type": "oracle",
        "scene_id": o.scene_id,
        "kind": o.kind.value,
        "intent": o.intent.value,
        "retained_pairs": sorted(list(p) for p in o.retained_pairs),
        "filtered_pairs": sorted(list(p) for p in o.filtered_pairs),
        "itype": {k: v.value for k, v in sorted(o.itype.items())},
    }


def report_record(report: MetricsReport, **extra: Any) -> dict:
    return {"type": "report", **report.to_dict(), **extra}


# --- decoders -------------------------------------------------------------

def _get(rec: dict, key: str):
    try:
        return rec[key]
    except (KeyError, TypeError) as exc:
        raise MalformedRecord(f"missing field {key!r}") from exc


def _decode_traj(agent_id: str, d: dict, kind: Kind) -> Trajectory:
    return Trajectory(agent_id, _get(d, "xy"), kind, _get(d, "start"))


def lanes_from_list(items: list) -> LaneGraph:
    return LaneGraph(
        Lane(_get(it, "lane_id"), _get(it, "centerline"), it.get("left_neighbor"), it.get("right_neighbor"))
        for it in items
    )


def scene_from_record(rec: dict) -> Scene:
    fr = _get(rec, "frame")
    origin = _get(fr, "origin")
    frame = NormalizationFrame((float(origin[0]), float(origin[1])), float(_get(fr, "rotation")),
                               bool(fr.get("degenerate", False)))
    agents = {}
    for a in _get(rec, "agents"):
        aid = _get(a, "agent_id")
        agents[aid] = AgentTrack(
            _decode_traj(aid, _get(a, "past"), Kind.PAST),
            _decode_traj(aid, _get(a, "future"), Kind.FUTURE),
        )
    return Scene(_get(rec, "scene_id"), _get(rec, "target_id"), agents,
                 lanes_from_list(rec.get("lanes", [])), frame)


def pair_from_dict(d: dict) -> InteractionPair:
    return InteractionPair(
        _get(d, "target_id"), _get(d, "other_id"), float(_get(d, "d_min")), bool(_get(d, "oncoming")),
        bool(_get(d, "retained")), PairReason(_get(d, "reason")), IntentClass(_get(d, "intent")),
    )


def pairs_from_record(rec: dict) -> tuple[Optional[IntentClass], list[InteractionPair]]:
    intent = rec.get("intent")
    return (IntentClass(intent) if intent is not None else None,
            [pair_from_dict(p) for p in _get(rec, "pairs")])


def label_from_dict(d: dict) -> PretextLabelSet:
    it = _get(d, "itype")
    cl, dr = _get(d, "closest"), _get(d, "direction")
    return PretextLabelSet(
        _get(d, "target_id"),
        _get(d, "other_id"),
        RangeGapLabel(float(_get(d, "range_gap"))),
        ClosestDistClass(int(_get(cl, "class_id")), float(_get(cl, "d_gt"))),
        DirMoveClass(int(_get(dr, "class_id")), float(_get(dr, "dir_gt"))),
        InteractionTypeClass(
            InteractionType(_get(it, "kind")), it.get("t1"), it.get("t2"), float(_get(it, "d_I")),
            bool(it.get("lane_rule", False)), bool(it.get("lane_fallback", False)),
        ),
        int(d.get("truncated", 0)),
    )


def labels_from_record(rec: dict) -> list[PretextLabelSet]:
    return [label_from_dict(d) for d in _get(rec, "labels")]


def predictions_from_record(rec: dict) -> dict[str, PredictionSet]:
    out = {}
    for a in _get(rec, "agents"):
        p = PredictionSet(_get(a, "agent_id"), _get(a, "modes"), _get(a, "confidences"), _get(a, "start"))
        out[p.agent_id] = p
    return out


def oracle_from_record(rec: dict) -> OracleAnnotation:
    return OracleAnnotation(
        _get(rec, "scene_id"),
        ScenarioKind(_get(rec, "kind")),
        IntentClass(_get(rec, "intent")),
        frozenset(tuple(p) for p in _get(rec, "retained_pairs")),
        frozenset(tuple(p) for p in _get(rec, "filtered_pairs")),
        {k: InteractionType(v) for k, v in _get(rec, "itype").items()},
    )


def report_from_record(rec: dict) -> MetricsReport:
    fields = MetricsReport.__dataclass_fields__
    return MetricsReport(**{k: rec[k] for k in fields if k in rec})


DECODERS = {
    "scene": scene_from_record,
    "pairs": pairs_from_record,
    "labels": labels_from_record,
    "predictions": predictions_from_record,
    "oracle": oracle_from_record,
    "report": report_from_record,
}


# --- files ----------------------------------------------------------------

def write_records(path, records: Iterable[dict]) -> int:
    """Write records sorted by ``scene_id`` (stable); returns the count."""
    recs = sorted(records, key=lambda r: r.get("scene_id", ""))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in recs:
            fh.write(dumps({"schema_version": SCHEMA_VERSION, **rec}))
            fh.write("\n")
    return len(recs)


def parse_line(line: str, expected_type: Optional[str] = None, where: str = "") -> dict:
    try:
        rec = json.loads(line, parse_constant=_reject_constant)
    except (ValueError, RecursionError) as exc:
        raise MalformedRecord(f"{where}invalid JSON: {exc}") from exc
    if not isinstance(rec, dict):
        raise MalformedRecord(f"{where}record is not an object")
    version = rec.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"{where}schema_version {version!r}, expected {SCHEMA_VERSION}")
    if expected_type is not None and rec.get("type") != expected_type:
        raise MalformedRecord(f"{where}record type {rec.get('type')!r}, expected {expected_type!r}")
    return rec


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name}")


def iter_raw(path, expected_type: Optional[str] = None) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                yield parse_line(line, expected_type, f"{path}:{lineno}: ")


def read_records(path, expected_type: str) -> list:
    """Decode every record of ``expected_type`` in ``path``.

    Decoding failures surface as ``MalformedRecord``; version mismatches as
    ``SchemaVersionMismatch``.
    """
    decode = DECODERS[expected_type]
    out = []
    for rec in iter_raw(path, expected_type):
        try:
            out.append(decode(rec))
        except TrajCurateError as exc:
            if isinstance(exc, (MalformedRecord, SchemaVersionMismatch)):
                raise
            raise MalformedRecord(f"{path}: {exc}") from exc
        except (TypeError, ValueError, KeyError, IndexError) as exc:
            raise MalformedRecord(f"{path}: {exc}") from exc
    return out


def read_keyed(path, expected_type: str) -> dict:
    """Like :func:`read_records` but keyed by ``scene_id``."""
    out = {}
    for rec in iter_raw(path, expected_type):
        try:
            out[rec["scene_id"]] = DECODERS[expected_type](rec)
        except (TrajCurateError, TypeError, ValueError, KeyError, IndexError) as exc:
            if isinstance(exc, SchemaVersionMismatch):
                raise
            raise MalformedRecord(f"{path}: {exc}") from exc
    return out


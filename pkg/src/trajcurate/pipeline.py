"""Corpus-level stages behind the command line: gen, curate, pretext, eval, stats.

Each stage reads and writes newline-delimited record files plus a
``manifest.json`` entry (keyed by stage) holding its configuration, config
hash, tool version and input/output digests. Scenes are processed independently (optionally in a
process pool) and merged in ``scene_id`` order, so outputs are
byte-identical for any worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from . import __version__
from .baseline import constant_velocity
from .core import normalize_scene
from .errors import DatasetError, NoScenesFound, TrajCurateError
from .io import records as R
from .io.csvio import parse_trajectory_csv
from .labeling import LabelConfig, label_interactions, target_intent
from .losses import LossWeights, main_trajectory_loss, scene_pretext_losses, select_mode, total_loss
from .metrics import MetricsConfig, PredictionSet, aggregate, evaluate_scene
from .pretext import DEFAULT_EPS_D, label_scene
from .scenarios import generate, suite_specs

log = logging.getLogger(__name__)

SCENES = "scenes.jsonl"
ORACLE = "oracle.jsonl"
PREDICTIONS = "predictions.jsonl"
PAIRS = "pairs.jsonl"
LABELS = "labels.jsonl"
REJECTS = "rejects.jsonl"
REPORT = "report.jsonl"
REPORT_TXT = "report.txt"
SCENE_METRICS = "scene_metrics.jsonl"
MANIFEST = "manifest.json"
PRETEXT_CLASSES = {"closest": 4, "direction": 3, "itype": 5}


def pmap(fn: Callable, items: list, workers: int = 1) -> list:
    """Ordered map; ``workers > 1`` uses a process pool."""
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(R.dumps(config).encode()).hexdigest()


def write_manifest(out_dir: Path, stage: str, config: dict, outputs: dict, inputs: Iterable[Path] = (),
                   counts: Optional[dict] = None) -> dict:
    manifest = {
        "stage": stage,
        "tool_version": __version__,
        "schema_version": R.SCHEMA_VERSION,
        "config": config,
        "config_hash": config_hash(config),
        "inputs": {p.name: sha256_file(p) for p in sorted(inputs)},
        "files": {name: {"records": n, "sha256": sha256_file(out_dir / name)} for name, n in sorted(outputs.items())},
        "counts": counts or {},
    }
    # stages sharing an output directory each keep their own entry
    path = out_dir / MANIFEST
    merged = {}
    if path.exists():
        try:
            merged = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            merged = {}
        if not isinstance(merged, dict):
            merged = {}
    merged[stage] = manifest
    path.write_text(json.dumps(merged, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def _jsonable(cfg) -> dict:
    d = asdict(cfg)
    return {k: (v.value if hasattr(v, "value") else v) for k, v in d.items()}


# --- gen ------------------------------------------------------------------

def _gen_one(item, with_predictions: bool):
    sid, spec = item
    scene, oracle = generate(spec, sid)
    out = [R.scene_record(scene), R.oracle_record(oracle)]
    if with_predictions:
        preds = constant_velocity(scene)
        rng = np.random.Generator(np.random.PCG64(spec.seed ^ 0x5EED))
        k = len(next(iter(preds.values())).modes) if preds else 0
        pretext = {}
        for aid in sorted(preds):
            if aid == scene.target_id:
                continue
            pretext[aid] = {"range_gap": rng.uniform(0.0, 30.0, k).tolist()}
            for task, c in PRETEXT_CLASSES.items():
                pretext[aid][task] = rng.normal(0.0, 1.0, (k, c)).tolist()
        out.append(R.predictions_record(sid, preds.values(), frame="world", pretext=pretext))
    return out


def run_gen(out_dir, n: int, seed: int, noise_sigma: float = 0.05, predictions: bool = True,
            workers: int = 1) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = suite_specs(n, seed, noise_sigma)
    results = pmap(partial(_gen_one, with_predictions=predictions), specs, workers)
    outputs = {
        SCENES: R.write_records(out_dir / SCENES, (r[0] for r in results)),
        ORACLE: R.write_records(out_dir / ORACLE, (r[1] for r in results)),
    }
    if predictions:
        outputs[PREDICTIONS] = R.write_records(out_dir / PREDICTIONS, (r[2] for r in results))
    kinds = Counter(spec.kind.value for _, spec in specs)
    config = {"n": n, "seed": seed, "noise_sigma": noise_sigma, "predictions": predictions}
    return write_manifest(out_dir, "gen", config, outputs, counts={"kinds": dict(sorted(kinds.items()))})


# --- curate ---------------------------------------------------------------

@dataclass
class _Item:
    """Unit of work for curate: either a scene record or a CSV path."""

    scene_id: str
    record: Optional[dict] = None
    csv_path: Optional[str] = None
    rejects: list = field(default_factory=list)


def discover(input_dir) -> list[_Item]:
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise NoScenesFound(f"no scenes found: {input_dir} is not a directory")
    items = []
    scene_file = input_dir / SCENES
    if scene_file.exists():
        for rec in R.iter_raw(scene_file, "scene"):
            items.append(_Item(str(rec.get("scene_id")), record=rec))
    for p in sorted(input_dir.glob("*.csv")):
        items.append(_Item(p.stem, csv_path=str(p)))
    if not items:
        raise NoScenesFound(f"no scenes found in {input_dir}")
    return sorted(items, key=lambda it: it.scene_id)


def _curate_one(item: _Item, cfg: LabelConfig):
    try:
        if item.csv_path is not None:
            parsed = parse_trajectory_csv(item.csv_path)
            scene, row_rejects = parsed.scene, parsed.rejects
        else:
            scene, row_rejects = R.scene_from_record(item.record), []
        norm = normalize_scene(scene)
        intent = target_intent(norm, cfg)
        pairs = label_interactions(norm, cfg)
    except (TrajCurateError, TypeError, ValueError, KeyError, IndexError) as exc:
        return None, {"type": "reject", "scene_id": item.scene_id, "error": type(exc).__name__, "reason": str(exc)}
    reject = None
    if row_rejects:
        reject = {"type": "reject", "scene_id": item.scene_id, "error": "RowsSkipped",
                  "reason": "; ".join(f"line {ln}: {why}" for ln, why in row_rejects)}
    return (R.scene_record(norm), R.pairs_record(norm.scene_id, norm.target_id, intent, pairs)), reject


def run_curate(input_dir, out_dir, cfg: LabelConfig = LabelConfig(), workers: int = 1) -> dict:
    items = discover(input_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = pmap(partial(_curate_one, cfg=cfg), items, workers)
    done = [r for r, _ in results if r is not None]
    rejects = [rej for _, rej in results if rej is not None]
    outputs = {
        SCENES: R.write_records(out_dir / SCENES, (d[0] for d in done)),
        PAIRS: R.write_records(out_dir / PAIRS, (d[1] for d in done)),
        REJECTS: R.write_records(out_dir / REJECTS, rejects),
    }
    n_pairs = sum(len(d[1]["pairs"]) for d in done)
    n_retained = sum(p["retained"] for d in done for p in d[1]["pairs"])
    interactive = sum(any(p["retained"] for p in d[1]["pairs"]) for d in done)
    counts = {
        "scenes_in": len(items),
        "scenes_out": len(done),
        "rejected": sum(1 for _, rej in results if rej is not None and _ is None),
        "interactive_scenes": interactive,
        "candidate_pairs": n_pairs,
        "retained_pairs": n_retained,
    }
    inputs = [Path(input_dir) / SCENES] if (Path(input_dir) / SCENES).exists() else []
    inputs += [Path(it.csv_path) for it in items if it.csv_path]
    manifest = write_manifest(out_dir, "curate", _jsonable(cfg), outputs, inputs, counts)
    if not done:
        raise NoScenesFound(f"no scenes could be curated from {input_dir} (see {out_dir / REJECTS})")
    return manifest


# --- pretext --------------------------------------------------------------

def _pretext_one(pair_rec_scene, eps_d: float):
    scene_rec, pairs_rec = pair_rec_scene
    scene = R.scene_from_record(scene_rec)
    _, pairs = R.pairs_from_record(pairs_rec)
    labels, skipped = label_scene(scene, pairs, eps_d)
    return R.labels_record(scene.scene_id, labels, skipped)


def _load_curated(cur_dir: Path) -> list[tuple[dict, dict]]:
    if not (cur_dir / SCENES).exists() or not (cur_dir / PAIRS).exists():
        raise NoScenesFound(f"no scenes found: {cur_dir} lacks {SCENES}/{PAIRS}")
    scenes = {r["scene_id"]: r for r in R.iter_raw(cur_dir / SCENES, "scene")}
    pairs = {r["scene_id"]: r for r in R.iter_raw(cur_dir / PAIRS, "pairs")}
    if not scenes:
        raise NoScenesFound(f"no scenes found in {cur_dir}")
    missing = sorted(set(scenes) ^ set(pairs))
    if missing:
        raise DatasetError(f"scenes and pairs files disagree on {len(missing)} scene id(s), e.g. {missing[0]}")
    return [(scenes[s], pairs[s]) for s in sorted(scenes)]


def run_pretext(cur_dir, out_dir, eps_d: float = DEFAULT_EPS_D, workers: int = 1) -> dict:
    cur_dir, out_dir = Path(cur_dir), Path(out_dir)
    items = _load_curated(cur_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    recs = pmap(partial(_pretext_one, eps_d=eps_d), items, workers)
    outputs = {LABELS: R.write_records(out_dir / LABELS, recs)}
    counts = {
        "scenes": len(recs),
        "label_sets": sum(len(r["labels"]) for r in recs),
        "skipped_pairs": sum(len(r["skipped"]) for r in recs),
    }
    return write_manifest(out_dir, "pretext", {"eps_d": eps_d}, outputs,
                          [cur_dir / SCENES, cur_dir / PAIRS], counts)


# --- eval -----------------------------------------------------------------

def _scene_losses(scene, preds, label_sets, pretext: dict, lam: float) -> Optional[dict]:
    target = scene.target_id
    if target not in preds or len(scene.target.future) == 0:
        return None
    main_per_mode = main_trajectory_loss(preds[target].modes, scene.target.future.xy)
    k = select_mode(main_per_mode)
    usable = [ls for ls in label_sets if ls.other_id in pretext]
    tasks = {}
    if usable:
        tasks = scene_pretext_losses(
            k,
            [pretext[ls.other_id]["range_gap"] for ls in usable],
            [ls.range_gap.gap for ls in usable],
            {t: [pretext[ls.other_id][t] for ls in usable] for t in PRETEXT_CLASSES},
            {
                "closest": [ls.closest.class_id for ls in usable],
                "direction": [ls.direction.class_id for ls in usable],
                "itype": [ls.itype.class_id for ls in usable],
            },
        )
    pretext_sum = math.fsum(tasks.values())
    main = float(main_per_mode[k])
    return {"mode": k, "main": main, "pretext": pretext_sum,
            "total": total_loss(main, pretext_sum, LossWeights(lam)), "tasks": tasks}


def _eval_one(item, cfg: MetricsConfig, with_losses: bool, lam: float):
    scene_rec, pairs_rec, labels_rec, pred_rec = item
    scene = R.scene_from_record(scene_rec)
    _, pairs = R.pairs_from_record(pairs_rec)
    label_sets = R.labels_from_record(labels_rec) if labels_rec is not None else []
    preds = R.predictions_from_record(pred_rec) if pred_rec is not None else {}
    if pred_rec is not None and pred_rec.get("frame", "scene") == "world":
        preds = {
            a: PredictionSet(a, scene.frame.apply(p.modes), p.confidences, p.start) for a, p in preds.items()
        }
    gts = {aid: t.future for aid, t in scene.agents.items()}
    weak = {ls.other_id: ls.itype.is_weak for ls in label_sets}
    ev = evaluate_scene(scene.scene_id, scene.target_id, preds, gts, pairs, weak, cfg)
    rec = {"type": "scene_metrics", "scene_id": scene.scene_id, "target_fde": ev.target_fde,
           "interactive": ev.interactive, "interacting_fdes": ev.interacting_fdes,
           "strong_fdes": ev.strong_fdes, "cam_count": ev.cam_count, "missing": ev.missing}
    if with_losses:
        rec["losses"] = _scene_losses(scene, preds, label_sets, (pred_rec or {}).get("pretext", {}), lam)
    return ev, rec


def _as_file(path, default_name: str) -> Path:
    p = Path(path)
    return p / default_name if p.is_dir() else p


def run_eval(cur_dir, labels, predictions, out_dir, cfg: MetricsConfig = MetricsConfig(),
             with_losses: bool = False, lam: float = 1.0, workers: int = 1) -> dict:
    cur_dir, out_dir = Path(cur_dir), Path(out_dir)
    labels_path = _as_file(labels, LABELS)
    pred_path = _as_file(predictions, PREDICTIONS)
    items = _load_curated(cur_dir)
    label_recs = {r["scene_id"]: r for r in R.iter_raw(labels_path, "labels")}
    pred_recs = {r["scene_id"]: r for r in R.iter_raw(pred_path, "predictions")}
    work = [(s, p, label_recs.get(s["scene_id"]), pred_recs.get(s["scene_id"])) for s, p in items]
    results = pmap(partial(_eval_one, cfg=cfg, with_losses=with_losses, lam=lam), work, workers)
    evals = [ev for ev, _ in results]
    report = aggregate(evals, cfg)
    if cfg.strong_only:
        report = type(report)(**{**report.to_dict(), "i_min_fde": report.i_min_fde_strong})
    extra = {}
    if with_losses:
        extra["losses"] = _mean_losses([rec["losses"] for _, rec in results if rec.get("losses")], lam)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {
        REPORT: R.write_records(out_dir / REPORT, [R.report_record(report, **extra)]),
        SCENE_METRICS: R.write_records(out_dir / SCENE_METRICS, (rec for _, rec in results)),
    }
    text = report.to_text()
    for key, value in sorted(extra.get("losses", {}).items()):
        text += f"loss_{key}={value!r}\n"
    (out_dir / REPORT_TXT).write_text(text, encoding="utf-8")
    outputs[REPORT_TXT] = 1
    config = {**_jsonable(cfg), "with_losses": with_losses, "lambda": lam}
    return write_manifest(out_dir, "eval", config, outputs,
                          [cur_dir / SCENES, cur_dir / PAIRS, labels_path, pred_path],
                          {"scenes": len(evals)})


def _mean_losses(per_scene: list[dict], lam: float) -> dict:
    if not per_scene:
        return {}
    out = {key: math.fsum(s[key] for s in per_scene) / len(per_scene) for key in ("main", "pretext", "total")}
    for task in ("range_gap", *PRETEXT_CLASSES):
        vals = [s["tasks"][task] for s in per_scene if task in s["tasks"]]
        if vals:
            out[f"task_{task}"] = math.fsum(vals) / len(vals)
    out["lambda"] = lam
    out["scenes"] = len(per_scene)
    return out


# --- stats ----------------------------------------------------------------

def corpus_stats(in_dir) -> dict:
    """Counts by intent, pair reason, interaction type and label bins for any stage directory."""
    in_dir = Path(in_dir)
    stats: dict = {}
    if (in_dir / PAIRS).exists():
        intents, reasons = Counter(), Counter()
        n = 0
        for rec in R.iter_raw(in_dir / PAIRS, "pairs"):
            n += 1
            intents[str(rec.get("intent"))] += 1
            for p in rec["pairs"]:
                reasons[p["reason"]] += 1
        stats["scenes"] = n
        stats["intent"] = dict(sorted(intents.items()))
        stats["pair_reason"] = dict(sorted(reasons.items()))
    if (in_dir / LABELS).exists():
        itypes, cd, dm = Counter(), Counter(), Counter()
        for rec in R.iter_raw(in_dir / LABELS, "labels"):
            for ls in rec["labels"]:
                itypes[ls["itype"]["kind"]] += 1
                cd[str(ls["closest"]["class_id"])] += 1
                dm[str(ls["direction"]["class_id"])] += 1
        stats["itype"] = dict(sorted(itypes.items()))
        stats["closest_bins"] = dict(sorted(cd.items()))
        stats["direction_bins"] = dict(sorted(dm.items()))
    if (in_dir / ORACLE).exists():
        kinds = Counter(rec["kind"] for rec in R.iter_raw(in_dir / ORACLE, "oracle"))
        stats["scenario_kind"] = dict(sorted(kinds.items()))
    if not stats and (in_dir / SCENES).exists():
        stats["scenes"] = sum(1 for _ in R.iter_raw(in_dir / SCENES, "scene"))
    if not stats:
        raise NoScenesFound(f"no scenes found in {in_dir}")
    return stats


def flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(flatten(v, key + "."))
        else:
            out.append((key, v))
    return out

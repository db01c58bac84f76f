"""Minimal SVG rendering of curated scenes for eyeballing label quality."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .core import Scene
from .io import records as R

COLORS = {"target": "#d62728", "retained": "#1f77b4", "filtered": "#ff7f0e", "other": "#999999"}


def scene_svg(scene: Scene, retained=(), filtered=(), size: int = 480, pad: float = 5.0) -> str:
    pts = [t.full.xy for t in scene.agents.values() if len(t.full)]
    allxy = np.concatenate(pts) if pts else np.zeros((1, 2))
    lo, hi = allxy.min(axis=0) - pad, allxy.max(axis=0) + pad
    scale = size / max(hi - lo)

    def project(xy):
        xy = (np.asarray(xy) - lo) * scale
        return " ".join(f"{x:.1f},{size - y:.1f}" for x, y in xy)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
           f"<title>{escape(scene.scene_id)}</title>"]
    for lane in scene.lanes:
        out.append(f'<polyline points="{project(lane.centerline)}" fill="none" stroke="#ddd" stroke-width="6"/>')
    for aid, track in scene.agents.items():
        role = ("target" if aid == scene.target_id else "retained" if aid in retained
                else "filtered" if aid in filtered else "other")
        color = COLORS[role]
        if len(track.past):
            out.append(f'<polyline points="{project(track.past.xy)}" fill="none" stroke="{color}" '
                       'stroke-width="2" stroke-dasharray="4 2"/>')
        if len(track.future):
            out.append(f'<polyline points="{project(track.future.xy)}" fill="none" stroke="{color}" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_dir(in_dir, out_dir, limit: int = 20) -> int:
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = {}
    if (in_dir / "pairs.jsonl").exists():
        for rec in R.iter_raw(in_dir / "pairs.jsonl", "pairs"):
            pairs[rec["scene_id"]] = rec["pairs"]
    n = 0
    for rec in R.iter_raw(in_dir / "scenes.jsonl", "scene"):
        if n >= limit:
            break
        scene = R.scene_from_record(rec)
        ps = pairs.get(scene.scene_id, [])
        svg = scene_svg(scene, {p["other_id"] for p in ps if p["retained"]},
                        {p["other_id"] for p in ps if not p["retained"]})
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in scene.scene_id)
        (out_dir / f"{safe}.svg").write_text(svg, encoding="utf-8")
        n += 1
    return n

"""Score a constant-velocity baseline on a generated corpus, in-process.

The same flow is available from the shell:

    trajcurate gen --n 120 --seed 1 --output out/gen
    trajcurate curate --input out/gen --output out/cur
    trajcurate pretext --input out/cur --output out/cur
    trajcurate eval --input out/cur --predictions out/gen --output out/eval

Run:  python demos/03_evaluate_baseline.py
"""

from trajcurate.baseline import constant_velocity
from trajcurate.core import normalize_scene
from trajcurate.labeling import label_interactions
from trajcurate.metrics import CamMode, MetricsConfig, aggregate, evaluate_scene
from trajcurate.pretext import label_scene
from trajcurate.scenarios import generate_suite

evals = {mode: [] for mode in CamMode}
for scene, _ in generate_suite(120, master_seed=1):
    norm = normalize_scene(scene)
    pairs = label_interactions(norm)
    labels, _ = label_scene(norm, pairs)
    weak = {ls.other_id: ls.itype.is_weak for ls in labels}
    preds = constant_velocity(norm)
    gts = {aid: track.future for aid, track in norm.agents.items()}
    for mode in CamMode:
        cfg = MetricsConfig(cam_mode=mode)
        evals[mode].append(evaluate_scene(norm.scene_id, norm.target_id, preds, gts, pairs, weak, cfg))

for mode, ev in evals.items():
    print(f"--- CAM mode {mode.value}")
    print(aggregate(ev, MetricsConfig(cam_mode=mode)).to_text(), end="")

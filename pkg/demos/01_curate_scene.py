"""Walk one synthetic scene through normalisation, pair selection and pretext labelling.

Run:  python demos/01_curate_scene.py
"""

from trajcurate.core import normalize_scene
from trajcurate.labeling import label_interactions, target_intent
from trajcurate.pretext import label_scene
from trajcurate.scenarios import ScenarioKind, ScenarioSpec, generate

# A left turn across an oncoming car, plus two far-away bystanders.
scene, oracle = generate(ScenarioSpec(ScenarioKind.LEFT_TURN_ONCOMING, seed=2024, n_bystanders=2))
print(f"scene {scene.scene_id}: {len(scene.agents)} agents, target {scene.target_id}")

# Scenes arrive in world coordinates. Normalising moves the target's last
# observed position to the origin and rotates its heading onto +x.
norm = normalize_scene(scene)
print("target at t=0:", norm.target.past.at(0).round(6), "frame:", norm.frame)

intent = target_intent(norm)
print("intent:", intent.value, "(oracle:", oracle.intent.value + ")")

# Every agent whose future comes within d_th of the target's future is a
# candidate; oncoming agents are kept only when the target turns left.
pairs = label_interactions(norm)
for p in pairs:
    print(f"  {p.other_id}: d_min={p.d_min:.2f} m oncoming={p.oncoming} -> {p.reason.value}")

labels, skipped = label_scene(norm, pairs)
for ls in labels:
    print(
        f"  {ls.other_id}: gap@t20={ls.range_gap.gap:.2f} m, closest class {ls.closest.class_id} "
        f"({ls.closest.d_gt:.2f} m), direction class {ls.direction.class_id} ({ls.direction.dir_gt:+.2f} m), "
        f"type {ls.itype.kind.value} (t1={ls.itype.t1}, t2={ls.itype.t2})"
    )
print("oracle types:", {k: v.value for k, v in oracle.itype.items()}, "skipped:", skipped)

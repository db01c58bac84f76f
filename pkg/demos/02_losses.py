"""How the pretext terms combine with the trajectory loss for one scene.

Run:  python demos/02_losses.py
"""

import numpy as np

from trajcurate.losses import (
    LossWeights,
    cross_entropy,
    main_trajectory_loss,
    scene_pretext_losses,
    select_mode,
    smooth_l1,
    total_loss,
)

rng = np.random.default_rng(0)

# Six candidate futures for the target; mode 2 is closest to the truth.
gt = np.c_[np.linspace(1, 30, 30), np.zeros(30)]
modes = gt[None] + rng.normal(0, 1.0, (6, 30, 2)) * np.array([3, 2, 0.2, 2, 4, 1])[:, None, None]
per_mode = main_trajectory_loss(modes, gt)
k = select_mode(per_mode)
print("per-mode trajectory loss:", per_mode.round(3), "-> selected mode", k)

# Pretext heads predict one value (or class scores) per mode and pair; only
# the selected mode is scored.
n_pairs = 2
out = scene_pretext_losses(
    k,
    range_gap_preds=rng.uniform(5, 15, (n_pairs, 6)),
    range_gap_targets=[8.0, 12.5],
    logits={
        "closest": rng.normal(0, 1, (n_pairs, 6, 4)),
        "direction": rng.normal(0, 1, (n_pairs, 6, 3)),
        "itype": rng.normal(0, 1, (n_pairs, 6, 5)),
    },
    labels={"closest": [1, 2], "direction": [2, 0], "itype": [0, 4]},
)
pretext = sum(out.values())
print("pretext terms:", {t: round(v, 3) for t, v in out.items()})
for lam in (0.0, 0.5, 1.0):
    print(f"lambda={lam}: total={total_loss(float(per_mode[k]), pretext, LossWeights(lam)):.4f}")

# Both kernels return analytic gradients alongside the value.
print("smooth-L1 grad at x = [-2, -0.5, 0.5, 2]:", smooth_l1([-2, -0.5, 0.5, 2], 0.0).grad)
print("cross-entropy grad:", cross_entropy([2.0, 0.5, -1.0], 0).grad.round(4))

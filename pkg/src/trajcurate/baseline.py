"""Constant-velocity multi-modal baseline used to exercise the evaluation path."""

from __future__ import annotations

import numpy as np

from .core import DT, Scene, rotation_matrix
from .metrics import PredictionSet

# (speed scale, heading offset in radians) per mode, most confident first
MODES = ((1.0, 0.0), (0.8, 0.0), (1.2, 0.0), (1.0, 0.15), (1.0, -0.15), (0.5, 0.0))
CONFIDENCES = (0.3, 0.2, 0.15, 0.15, 0.1, 0.1)


def constant_velocity(scene: Scene, history: int = 5) -> dict[str, PredictionSet]:
    """Six-mode predictions for every agent with a future and at least two past samples.

    The velocity is the mean over the last ``history`` past steps; modes vary
    speed and heading around it.
    """
    out = {}
    for aid, track in scene.agents.items():
        past, fut = track.past, track.future
        if len(fut) == 0 or len(past) < 2:
            continue
        h = min(history, len(past) - 1)
        vel = (past.xy[-1] - past.xy[-1 - h]) / (h * DT)
        dt = (fut.t_index - past.end) * DT
        modes = np.stack([
            past.xy[-1] + dt[:, None] * (rotation_matrix(dh) @ (vel * s))
            for s, dh in MODES
        ])
        out[aid] = PredictionSet(aid, modes, CONFIDENCES, fut.start)
    return out

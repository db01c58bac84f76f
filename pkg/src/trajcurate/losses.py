"""Loss kernels with analytic gradients.

Everything here operates on plain floats / numpy vectors so the kernels can
be dropped into any training stack; each returns the value together with
its gradient with respect to the prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyPairSet, LabelOutOfRange, LengthMismatch

SMOOTH_L1_BETA = 1.0


@dataclass(frozen=True)
class LossResult:
    value: float
    grad: np.ndarray


@dataclass(frozen=True)
class LossWeights:
    lam: float = 1.0

    def __post_init__(self) -> None:
        if not self.lam >= 0:
            raise ValueError("lambda must be >= 0")


def smooth_l1(pred, target, beta: float = SMOOTH_L1_BETA) -> LossResult:
    """Elementwise smooth-L1 summed over entries; grad is d/d(pred).

    ``0.5 x**2 / beta`` for ``|x| < beta``, ``|x| - 0.5 beta`` otherwise.
    """
    x = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    ax = np.abs(x)
    quad = ax < beta
    value = np.where(quad, 0.5 * x * x / beta, ax - 0.5 * beta)
    grad = np.where(quad, x / beta, np.sign(x))
    return LossResult(float(value.sum()), np.atleast_1d(grad))


def log_softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    return z - np.log(np.exp(z).sum())


def softmax(logits) -> np.ndarray:
    return np.exp(log_softmax(logits))


def cross_entropy(logits, label: int) -> LossResult:
    """Negative log-likelihood of ``label`` under ``softmax(logits)``."""
    z = np.asarray(logits, dtype=np.float64).ravel()
    if len(z) < 2:
        raise LabelOutOfRange("cross_entropy needs at least two classes")
    if not (0 <= int(label) < len(z)) or int(label) != label:
        raise LabelOutOfRange(f"label {label} outside [0, {len(z)})")
    lsm = log_softmax(z)
    grad = np.exp(lsm)
    grad[int(label)] -= 1.0
    return LossResult(float(-lsm[int(label)]), grad)


def pretext_loss(per_pair_losses: Sequence[float], k_target: int | None = None) -> float:
    """Mean over the target's interacting agents."""
    losses = np.asarray(per_pair_losses, dtype=np.float64)
    k = len(losses) if k_target is None else k_target
    if k < 1 or len(losses) == 0:
        raise EmptyPairSet("no interacting pairs")
    if len(losses) != k:
        raise LengthMismatch(f"{len(losses)} losses for k_target={k}")
    return float(losses.sum() / k)


def total_loss(main: float, pretext: float, w: LossWeights = LossWeights()) -> float:
    if w.lam == 0:
        return main
    return main + w.lam * pretext


def select_mode(main_losses_per_mode: Sequence[float]) -> int:
    """Index of the smallest loss; the first one wins ties."""
    losses = np.asarray(main_losses_per_mode, dtype=np.float64)
    if losses.ndim != 1 or len(losses) == 0:
        raise ValueError("select_mode needs a non-empty 1-D sequence")
    return int(np.argmin(losses))


def main_trajectory_loss(modes, gt) -> np.ndarray:
    """Per-mode mean smooth-L1 over timesteps, summed over x and y.

    Stand-in for a network's regression loss so mode selection and the total
    loss can be exercised without a model.
    """
    modes = np.asarray(modes, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if modes.ndim != 3 or modes.shape[1:] != gt.shape:
        raise LengthMismatch(f"modes {modes.shape} vs ground truth {gt.shape}")
    x = np.abs(modes - gt[None])
    per = np.where(x < SMOOTH_L1_BETA, 0.5 * x * x, x - 0.5 * SMOOTH_L1_BETA)
    return per.sum(axis=2).mean(axis=1)


def scene_pretext_losses(
    selected: int,
    range_gap_preds: Sequence[Sequence[float]] = (),
    range_gap_targets: Sequence[float] = (),
    logits: dict | None = None,
    labels: dict | None = None,
) -> dict[str, float]:
    """Per-task pretext losses for one scene at the selected mode.

    ``range_gap_preds[j][k]`` is the regression output of mode ``k`` for pair
    ``j``; ``logits[task][j][k]`` the class logits. Tasks with no pairs are
    omitted, matching a zero contribution to the total.
    """
    out: dict[str, float] = {}
    if len(range_gap_preds):
        per = [smooth_l1(p[selected], t).value for p, t in zip(range_gap_preds, range_gap_targets, strict=True)]
        out["range_gap"] = pretext_loss(per)
    for task, per_pair in (logits or {}).items():
        if not len(per_pair):
            continue
        per = [cross_entropy(lg[selected], y).value for lg, y in zip(per_pair, labels[task], strict=True)]
        out[task] = pretext_loss(per)
    return out

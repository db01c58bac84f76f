"""Forecasting metrics: min-FDE, miss rate, interactive / non-interactive
min-FDE and the collision awareness metric (CAM)."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import Trajectory
from .errors import EmptyCorpus, InvalidTrajectory, LengthMismatch
from .labeling import InteractionPair

log = logging.getLogger(__name__)

DEFAULT_K = 6


class CamMode(str, Enum):
    ARGMAX_CONFIDENCE = "argmax-confidence"
    BEST_OF_K = "best-of-k"


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """K candidate futures for one agent; mode ``k`` row ``i`` is sample ``start + i``."""

    agent_id: str
    modes: np.ndarray
    confidences: np.ndarray
    start: int = 1

    def __post_init__(self) -> None:
        modes = np.array(self.modes, dtype=np.float64)
        if modes.ndim == 2:
            modes = modes[None]
        if modes.ndim != 3 or modes.shape[2] != 2 or modes.shape[0] == 0:
            raise InvalidTrajectory(f"agent {self.agent_id!r}: modes must be (K, T, 2)")
        conf = np.array(self.confidences, dtype=np.float64).ravel()
        if len(conf) != len(modes):
            raise InvalidTrajectory(f"agent {self.agent_id!r}: {len(conf)} confidences for {len(modes)} modes")
        if not (np.all(np.isfinite(modes)) and np.all(np.isfinite(conf))):
            raise InvalidTrajectory(f"agent {self.agent_id!r}: non-finite prediction")
        if np.any(conf < 0):
            raise InvalidTrajectory(f"agent {self.agent_id!r}: negative confidence")
        modes.setflags(write=False)
        conf.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "confidences", conf)

    @property
    def k(self) -> int:
        return len(self.modes)

    @property
    def end(self) -> int:
        return self.start + self.modes.shape[1] - 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PredictionSet):
            return NotImplemented
        return (
            self.agent_id == other.agent_id
            and self.start == other.start
            and np.array_equal(self.modes, other.modes)
            and np.array_equal(self.confidences, other.confidences)
        )


@dataclass(frozen=True)
class MetricsConfig:
    miss_threshold: float = 2.0
    d_cam: float = 2.0
    strong_only: bool = False
    cam_mode: CamMode = CamMode.ARGMAX_CONFIDENCE

    def __post_init__(self) -> None:
        if not (self.miss_threshold > 0 and self.d_cam > 0):
            raise ValueError("metric thresholds must be > 0")
        object.__setattr__(self, "cam_mode", CamMode(self.cam_mode))


def fde_per_mode(preds: PredictionSet, gt: Trajectory) -> np.ndarray:
    if len(gt) == 0 or preds.end != gt.end:
        raise LengthMismatch(
            f"agent {preds.agent_id!r}: prediction ends at {preds.end}, ground truth at {gt.end}"
        )
    d = preds.modes[:, -1, :] - gt.xy[-1]
    return np.hypot(d[:, 0], d[:, 1])


def min_fde(preds: PredictionSet, gt: Trajectory) -> float:
    return float(fde_per_mode(preds, gt).min())


def miss_rate(min_fdes: Iterable[float], miss_threshold: float = 2.0) -> float:
    values = np.fromiter(min_fdes, dtype=np.float64)
    if len(values) == 0:
        raise EmptyCorpus("miss_rate over an empty corpus")
    return float(np.count_nonzero(values > miss_threshold) / len(values))


def interacting_fdes(
    scene_preds: Mapping[str, PredictionSet],
    gts: Mapping[str, Trajectory],
    interacting: Sequence[InteractionPair],
    weak: Optional[Mapping[str, bool]] = None,
    strong_filter: bool = False,
) -> tuple[list[float], int]:
    """min-FDE of each retained interacting agent, plus the number skipped for lack of a prediction.

    With ``strong_filter`` only pairs whose interaction type is known and not
    weak are kept (``weak`` maps other agent id to its weak flag).
    """
    values, missing = [], 0
    for pair in interacting:
        if not pair.retained:
            continue
        if strong_filter and (weak is None or weak.get(pair.other_id, True)):
            continue
        if pair.other_id not in scene_preds:
            missing += 1
            continue
        values.append(min_fde(scene_preds[pair.other_id], gts[pair.other_id]))
    if missing:
        log.warning("%d interacting agent(s) without predictions skipped", missing)
    return values, missing


def i_min_fde(
    scene_preds: Mapping[str, PredictionSet],
    gts: Mapping[str, Trajectory],
    interacting: Sequence[InteractionPair],
    weak: Optional[Mapping[str, bool]] = None,
    strong_filter: bool = False,
) -> float:
    values, _ = interacting_fdes(scene_preds, gts, interacting, weak, strong_filter)
    if not values:
        raise EmptyCorpus("no interacting agents with predictions")
    return float(np.mean(values))


def ni_min_fde(target_fdes: Iterable[tuple[float, bool]]) -> float:
    """Mean target min-FDE over scenes flagged non-interactive.

    ``target_fdes`` yields ``(min_fde, interactive)`` per scene.
    """
    values = [fde for fde, interactive in target_fdes if not interactive]
    if not values:
        raise EmptyCorpus("no non-interactive scenes")
    return float(np.mean(values))


def _stack(
    scene_preds: Mapping[str, PredictionSet], gts: Mapping[str, Trajectory], mode: CamMode
) -> tuple[np.ndarray, np.ndarray]:
    """Predictions (M, N, T, 2) and ground truth (N, T, 2) on a shared time grid, NaN where absent."""
    ids = sorted(a for a in scene_preds if a in gts and len(gts[a]))
    if not ids:
        return np.empty((1, 0, 0, 2)), np.empty((0, 0, 2))
    lo = min(gts[a].start for a in ids)
    hi = max(gts[a].end for a in ids)
    T = hi - lo + 1
    if mode is CamMode.BEST_OF_K:
        ks = {scene_preds[a].k for a in ids}
        if len(ks) != 1:
            raise LengthMismatch(f"best-of-k CAM needs equal K, got {sorted(ks)}")
        M = ks.pop()
    else:
        M = 1
    P = np.full((M, len(ids), T, 2), np.nan)
    G = np.full((len(ids), T, 2), np.nan)
    for n, a in enumerate(ids):
        p, g = scene_preds[a], gts[a]
        if p.start != g.start or p.modes.shape[1] != len(g):
            raise LengthMismatch(f"agent {a!r}: prediction and ground truth not aligned")
        sl = slice(g.start - lo, g.end - lo + 1)
        G[n, sl] = g.xy
        if mode is CamMode.BEST_OF_K:
            P[:, n, sl] = p.modes
        else:
            P[0, n, sl] = p.modes[int(np.argmax(p.confidences))]
    return P, G


def cam_count(
    scene_preds: Mapping[str, PredictionSet],
    gts: Mapping[str, Trajectory],
    cfg: MetricsConfig = MetricsConfig(),
) -> int:
    """False near-collisions in one scene, each unordered pair counted once per timestep.

    In argmax-confidence mode each agent contributes its most confident
    mode. In best-of-k mode the k-th modes of both agents are compared and a
    pair/timestep counts only if it fires for every k.
    """
    P, G = _stack(scene_preds, gts, cfg.cam_mode)
    n = G.shape[0]
    if n < 2:
        return 0
    iu, ju = np.triu_indices(n, k=1)
    with np.errstate(invalid="ignore"):
        gt_d = np.linalg.norm(G[iu] - G[ju], axis=-1)  # (pairs, T)
        pred_d = np.linalg.norm(P[:, iu] - P[:, ju], axis=-1)  # (M, pairs, T)
        fires = (pred_d < cfg.d_cam) & (gt_d >= cfg.d_cam)[None]
    return int(np.count_nonzero(fires.all(axis=0)))


def cam(corpus: Sequence[tuple[Mapping[str, PredictionSet], Mapping[str, Trajectory]]],
        cfg: MetricsConfig = MetricsConfig()) -> float:
    """Total false near-collisions divided by the number of scenes."""
    if not corpus:
        raise EmptyCorpus("cam over an empty corpus")
    return sum(cam_count(p, g, cfg) for p, g in corpus) / len(corpus)


@dataclass
class SceneEval:
    """Per-scene partial results; corpus metrics are order-independent reductions of these."""

    scene_id: str
    target_fde: Optional[float]
    interactive: bool
    interacting_fdes: list[float] = field(default_factory=list)
    strong_fdes: list[float] = field(default_factory=list)
    cam_count: int = 0
    missing: int = 0


@dataclass(frozen=True)
class MetricsReport:
    min_fde: Optional[float]
    mr: Optional[float]
    i_min_fde: Optional[float]
    i_min_fde_strong: Optional[float]
    ni_min_fde: Optional[float]
    cam: Optional[float]
    n_scenes: int
    n_targets: int = 0
    n_interacting: int = 0
    n_strong: int = 0
    n_non_interactive: int = 0
    n_missing: int = 0
    cam_mode: str = CamMode.ARGMAX_CONFIDENCE.value

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        def fmt(v):
            if v is None:
                return "nan"
            return repr(v) if isinstance(v, float) else str(v)
        return "".join(f"{k}={fmt(v)}\n" for k, v in self.to_dict().items())


def evaluate_scene(
    scene_id: str,
    target_id: str,
    preds: Mapping[str, PredictionSet],
    gts: Mapping[str, Trajectory],
    pairs: Sequence[InteractionPair],
    weak: Optional[Mapping[str, bool]] = None,
    cfg: MetricsConfig = MetricsConfig(),
) -> SceneEval:
    target_fde = min_fde(preds[target_id], gts[target_id]) if target_id in preds else None
    interactive = any(p.retained for p in pairs)
    all_fdes, missing = interacting_fdes(preds, gts, pairs)
    strong, _ = interacting_fdes(preds, gts, pairs, weak, strong_filter=True)
    return SceneEval(
        scene_id,
        target_fde,
        interactive,
        all_fdes,
        strong,
        cam_count(preds, gts, cfg),
        missing + (target_fde is None),
    )


def _mean(values: list[float]) -> Optional[float]:
    return math.fsum(values) / len(values) if values else None


def aggregate(evals: Sequence[SceneEval], cfg: MetricsConfig = MetricsConfig()) -> MetricsReport:
    if not evals:
        raise EmptyCorpus("no scenes to aggregate")
    targets = [e.target_fde for e in evals if e.target_fde is not None]
    inter = [v for e in evals for v in e.interacting_fdes]
    strong = [v for e in evals for v in e.strong_fdes]
    ni = [e.target_fde for e in evals if e.target_fde is not None and not e.interactive]
    return MetricsReport(
        min_fde=_mean(targets),
        mr=miss_rate(targets, cfg.miss_threshold) if targets else None,
        i_min_fde=_mean(inter),
        i_min_fde_strong=_mean(strong),
        ni_min_fde=_mean(ni),
        cam=sum(e.cam_count for e in evals) / len(evals),
        n_scenes=len(evals),
        n_targets=len(targets),
        n_interacting=len(inter),
        n_strong=len(strong),
        n_non_interactive=len(ni),
        n_missing=sum(e.missing for e in evals),
        cam_mode=cfg.cam_mode.value,
    )

"""Seeded synthetic scenes with ground-truth interaction annotations.

Every scene is built in a canonical road frame (a four-way intersection at
the origin, right-hand traffic, 3.5 m lanes), checked against decision
margins, perturbed with Gaussian position noise and finally moved by a
random rigid transform so normalization has work to do.

Randomness comes from numpy's PCG64. ``generate(spec)`` seeds
``PCG64(spec.seed)``; ``generate_suite(n, master_seed)`` derives the seed of
scene ``i`` as ``SeedSequence([master_seed, i]).generate_state(1, uint64)[0]``
so any subset of a suite can be regenerated independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .core import DT, T_FUTURE, T_PAST, Scene, make_track, rotation_matrix
from .errors import InvalidSpec
from .labeling import IntentClass
from .lanes import Lane, LaneGraph
from .pretext import CD_EDGES, DIR_THRESHOLD, InteractionType

LANE_W = 3.5
HALF = LANE_W / 2
D_TH = 5.0
EPS_D = 5.0
MARGIN = 0.5
MAX_ATTEMPTS = 200

T_ALL = np.arange(-(T_PAST - 1), T_FUTURE + 1)  # -19 .. 30
N_PAST = T_PAST


class ScenarioKind(str, Enum):
    LEAD_FOLLOW = "LeadFollow"
    LEFT_TURN_ONCOMING = "LeftTurnOncoming"
    STRAIGHT_WITH_ONCOMING = "StraightWithOncoming"
    CROSSING = "Crossing"
    LANE_CHANGE = "LaneChange"
    NON_INTERACTIVE = "NonInteractive"


KINDS = list(ScenarioKind)


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    seed: int
    noise_sigma: float = 0.05
    n_bystanders: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidSpec(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise InvalidSpec("noise_sigma must be finite and >= 0")
        if self.n_bystanders < 0:
            raise InvalidSpec("n_bystanders must be >= 0")


@dataclass(frozen=True)
class OracleAnnotation:
    scene_id: str
    kind: ScenarioKind
    intent: IntentClass
    retained_pairs: frozenset  # of (target_id, other_id)
    filtered_pairs: frozenset  # candidates removed by the oncoming rule
    itype: dict = field(default_factory=dict)  # other_id -> InteractionType


TARGET = "000"


def _lane(lane_id, start, end, left=None, right=None, n=31) -> Lane:
    pts = np.linspace(start, end, n)
    return Lane(lane_id, pts, left, right)


def _lanes(kind: ScenarioKind) -> LaneGraph:
    lanes = [
        _lane("E1", (-150.0, -HALF), (150.0, -HALF), right="E2" if kind is ScenarioKind.LANE_CHANGE else None),
        _lane("W1", (150.0, HALF), (-150.0, HALF)),
    ]
    if kind is ScenarioKind.LANE_CHANGE:
        lanes.append(_lane("E2", (-150.0, -HALF - LANE_W), (150.0, -HALF - LANE_W), left="E1"))
    if kind in (ScenarioKind.LEFT_TURN_ONCOMING, ScenarioKind.CROSSING):
        lanes.append(_lane("N1", (HALF, -150.0), (HALF, 150.0)))
        lanes.append(_lane("S1", (-HALF, 150.0), (-HALF, -150.0)))
    return LaneGraph(lanes)


def _line(p0, heading: float, speed: float) -> np.ndarray:
    """Constant-velocity positions at every t in T_ALL; ``p0`` is the t=0 position."""
    d = np.array([math.cos(heading), math.sin(heading)])
    return np.asarray(p0, dtype=np.float64) + (T_ALL * DT * speed)[:, None] * d


def _left_turn_path(s: np.ndarray, radius: float) -> np.ndarray:
    """Arc-length parameterized path: eastbound in E1, left turn onto N1.

    ``s = 0`` is the start of the arc at ``(HALF - radius, -HALF)``.
    """
    cx, cy = HALF - radius, -HALF + radius
    quarter = radius * math.pi / 2
    out = np.empty((len(s), 2))
    before = s < 0
    out[before] = np.column_stack([cx + s[before], np.full(before.sum(), -HALF)])
    arc = (s >= 0) & (s <= quarter)
    phi = s[arc] / radius
    out[arc] = np.column_stack([cx + radius * np.sin(phi), cy - radius * np.cos(phi)])
    after = s > quarter
    out[after] = np.column_stack([np.full(after.sum(), HALF), cy + (s[after] - quarter)])
    return out


def _lane_change_path(speed: float, y0: float, y1: float, t_a: int, t_b: int) -> np.ndarray:
    x = T_ALL * DT * speed
    u = np.clip((T_ALL - t_a) / (t_b - t_a), 0.0, 1.0)
    y = y0 + (y1 - y0) * (1 - np.cos(math.pi * u)) / 2
    return np.column_stack([x, y])


def _in_lane_pair(rng, speed: float, lead: bool, y: float) -> np.ndarray:
    """Another vehicle in the same lane as a track moving +x from the origin at ``speed``.

    Lead vehicles start ahead and are slightly slower; followers start
    behind and are slightly faster, so paths overlap in space with a clear
    arrival order.
    """
    gap = rng.uniform(0.5, 1.2) * speed
    eps = rng.uniform(0.0, 0.08)
    if lead:
        return _line((gap, y), 0.0, speed * (1 - eps))
    return _line((-gap, y), 0.0, speed * (1 + eps))


def _arrival_offset(rng, t_c: float) -> Optional[float]:
    """Time the other agent reaches the conflict point, >= 0.7 s away from ``t_c``."""
    delta = rng.uniform(0.7, 1.0)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    for s in (sign, -sign):
        t_o = t_c + s * delta
        if 0.4 <= t_o <= 2.7:
            return t_o
    return None


@dataclass
class _Draft:
    """Noise-free canonical-frame scene under construction."""

    tracks: dict  # agent_id -> (50, 2) positions over T_ALL
    intent: IntentClass
    retained: dict  # other_id -> InteractionType
    filtered: set = field(default_factory=set)


def _draft_lead_follow(rng) -> Optional[_Draft]:
    v = rng.uniform(8.0, 12.0)
    lead = rng.random() < 0.5
    tracks = {TARGET: _line((0.0, -HALF), 0.0, v), "001": _in_lane_pair(rng, v, lead, -HALF)}
    itype = InteractionType.CLOSE_LEAD if lead else InteractionType.CLOSE_FOLLOW
    return _Draft(tracks, IntentClass.STRAIGHT, {"001": itype})


def _draft_straight_with_oncoming(rng) -> Optional[_Draft]:
    v = rng.uniform(8.0, 12.0)
    v_w = rng.uniform(8.0, 12.0)
    x_w = rng.uniform(20.0, 40.0)
    tracks = {
        TARGET: _line((0.0, -HALF), 0.0, v),
        "001": _in_lane_pair(rng, v, True, -HALF),
        "002": _line((x_w, HALF), math.pi, v_w),
    }
    return _Draft(tracks, IntentClass.STRAIGHT, {"001": InteractionType.CLOSE_LEAD}, {"002"})


def _draft_left_turn_oncoming(rng) -> Optional[_Draft]:
    radius = rng.uniform(5.0, 6.0)
    v_t = rng.uniform(5.0, 8.0)
    tau = rng.uniform(0.3, 0.8)  # time from t=0 to the start of the arc
    s = (T_ALL * DT - tau) * v_t
    target = _left_turn_path(s, radius)
    # the arc crosses the westbound centerline y = +HALF here
    phi_c = math.acos((radius - LANE_W) / radius)
    x_c = HALF - radius + radius * math.sin(phi_c)
    t_c = tau + radius * phi_c / v_t
    t_o = _arrival_offset(rng, t_c)
    if t_o is None:
        return None
    v_o = rng.uniform(7.0, 11.0)
    oncoming = _line((x_c + v_o * t_o, HALF), math.pi, v_o)
    # oncoming reaching the conflict point first -> it leads
    itype = InteractionType.LEFT_TURN_LEAD if t_o < t_c else InteractionType.LEFT_TURN_FOLLOW
    return _Draft({TARGET: target, "001": oncoming}, IntentClass.LEFT_TURN, {"001": itype})


def _draft_crossing(rng) -> Optional[_Draft]:
    v = rng.uniform(8.0, 12.0)
    t_c = rng.uniform(0.8, 2.2)
    t_o = _arrival_offset(rng, t_c)
    if t_o is None:
        return None
    v_n = rng.uniform(8.0, 12.0)
    tracks = {
        TARGET: _line((HALF - v * t_c, -HALF), 0.0, v),
        "001": _line((HALF, -HALF - v_n * t_o), math.pi / 2, v_n),
    }
    # a straight target ignores agents outside its own lane
    return _Draft(tracks, IntentClass.STRAIGHT, {"001": InteractionType.WEAK})


def _draft_lane_change(rng) -> Optional[_Draft]:
    v = rng.uniform(8.0, 12.0)
    to_right = rng.random() < 0.5
    y0, y1 = (-HALF, -HALF - LANE_W) if to_right else (-HALF - LANE_W, -HALF)
    t_a = int(rng.integers(1, 4))
    t_b = t_a + int(rng.integers(10, 12))
    target = _lane_change_path(v, y0, y1, t_a, t_b)
    lead = rng.random() < 0.5
    other = _in_lane_pair(rng, v, lead, y1)
    itype = InteractionType.CLOSE_LEAD if lead else InteractionType.CLOSE_FOLLOW
    return _Draft({TARGET: target, "001": other}, IntentClass.LANE_CHANGE, {"001": itype})


def _draft_non_interactive(rng) -> Optional[_Draft]:
    v = rng.uniform(6.0, 12.0)
    return _Draft({TARGET: _line((0.0, -HALF), 0.0, v)}, IntentClass.STRAIGHT, {})


_DRAFTS: dict[ScenarioKind, Callable] = {
    ScenarioKind.LEAD_FOLLOW: _draft_lead_follow,
    ScenarioKind.LEFT_TURN_ONCOMING: _draft_left_turn_oncoming,
    ScenarioKind.STRAIGHT_WITH_ONCOMING: _draft_straight_with_oncoming,
    ScenarioKind.CROSSING: _draft_crossing,
    ScenarioKind.LANE_CHANGE: _draft_lane_change,
    ScenarioKind.NON_INTERACTIVE: _draft_non_interactive,
}


def _future(xy: np.ndarray) -> np.ndarray:
    return xy[N_PAST:]


def _margins_ok(draft: _Draft) -> bool:
    """Every decision the labelers make must sit >= MARGIN from its threshold."""
    tgt = _future(draft.tracks[TARGET])
    for aid, xy in draft.tracks.items():
        if aid == TARGET:
            continue
        fut = _future(xy)
        grid = cdist(tgt, fut)
        d_min = grid.min()
        if aid in draft.retained or aid in draft.filtered:
            if d_min > D_TH - MARGIN:
                return False
        elif d_min < 2 * D_TH + MARGIN:
            return False
        if aid not in draft.retained:
            continue
        aligned = np.linalg.norm(tgt - fut, axis=1)
        if any(abs(aligned.min() - e) < MARGIN for e in CD_EDGES):
            return False
        if abs(abs(aligned[-1] - aligned[0]) - DIR_THRESHOLD) < MARGIN:
            return False
        if draft.retained[aid] is not InteractionType.WEAK:
            i, j = np.unravel_index(np.argmin(grid), grid.shape)
            if grid[i, j] > EPS_D - MARGIN or abs(int(i) - int(j)) < 2:
                return False
    return True


def _bystander(rng, target_future: np.ndarray) -> Optional[np.ndarray]:
    r = rng.uniform(25.0, 80.0)
    ang = rng.uniform(-math.pi, math.pi)
    p0 = (r * math.cos(ang), r * math.sin(ang))
    xy = _line(p0, rng.uniform(-math.pi, math.pi), rng.uniform(0.0, 12.0))
    if cdist(target_future, _future(xy)).min() < 2 * D_TH + MARGIN:
        return None
    return xy


def _build(spec: ScenarioSpec, rng: np.random.Generator) -> _Draft:
    make = _DRAFTS[spec.kind]
    for _ in range(MAX_ATTEMPTS):
        draft = make(rng)
        if draft is None or not _margins_ok(draft):
            continue
        next_id = len(draft.tracks)
        tfut = _future(draft.tracks[TARGET])
        for _ in range(spec.n_bystanders):
            for _ in range(MAX_ATTEMPTS):
                xy = _bystander(rng, tfut)
                if xy is not None:
                    break
            else:
                raise InvalidSpec(f"could not place bystander {next_id:03d} clear of the target")
            draft.tracks[f"{next_id:03d}"] = xy
            next_id += 1
        return draft
    raise InvalidSpec(f"could not construct a {spec.kind.value} scene within margins")


def scene_id_for(spec: ScenarioSpec) -> str:
    return f"{spec.kind.value}-{spec.seed:020d}"


def generate(spec: ScenarioSpec, scene_id: Optional[str] = None) -> tuple[Scene, OracleAnnotation]:
    """Build one scene and its by-construction annotation."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    draft = _build(spec, rng)
    theta = rng.uniform(-math.pi, math.pi)
    shift = rng.uniform(-500.0, 500.0, size=2)
    rot = rotation_matrix(theta)

    def to_world(xy):
        return xy @ rot.T + shift

    agents = {}
    for aid, xy in sorted(draft.tracks.items()):
        noisy = xy + rng.normal(0.0, spec.noise_sigma, size=xy.shape) if spec.noise_sigma > 0 else xy
        w = to_world(noisy)
        agents[aid] = make_track(aid, w[:N_PAST], w[N_PAST:])
    sid = scene_id or scene_id_for(spec)
    scene = Scene(sid, TARGET, agents, _lanes(spec.kind).map_points(to_world))
    oracle = OracleAnnotation(
        sid,
        spec.kind,
        draft.intent,
        frozenset((TARGET, o) for o in draft.retained),
        frozenset((TARGET, o) for o in draft.filtered),
        dict(sorted(draft.retained.items())),
    )
    return scene, oracle


def suite_seed(master_seed: int, i: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(i)]).generate_state(1, np.uint64)[0])


def suite_specs(n: int, master_seed: int, noise_sigma: float = 0.05) -> list[tuple[str, ScenarioSpec]]:
    """Scene ids and specs of a stratified suite: scene ``i`` has kind ``KINDS[i % 6]``."""
    if n < 1:
        raise InvalidSpec("suite size must be >= 1")
    out = []
    for i in range(n):
        seed = suite_seed(master_seed, i)
        n_by = int(np.random.Generator(np.random.PCG64(seed ^ 0x9E3779B97F4A7C15)).integers(0, 3))
        spec = ScenarioSpec(KINDS[i % len(KINDS)], seed, noise_sigma, n_by)
        out.append((f"s{master_seed}-{i:06d}", spec))
    return out


def generate_suite(n: int, master_seed: int, noise_sigma: float = 0.05) -> list[tuple[Scene, OracleAnnotation]]:
    return [generate(spec, sid) for sid, spec in suite_specs(n, master_seed, noise_sigma)]

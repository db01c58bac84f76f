"""Interaction-aware curation, pretext labelling and evaluation for trajectory forecasting."""

__version__ = "0.1.0"

from .core import AgentTrack, NormalizationFrame, Scene, Trajectory, normalize_scene  # noqa: E402
from .labeling import IntentClass, InteractionPair, LabelConfig, label_interactions  # noqa: E402
from .metrics import MetricsConfig, PredictionSet  # noqa: E402
from .pretext import InteractionType, PretextLabelSet, label_scene  # noqa: E402

__all__ = [
    "AgentTrack",
    "IntentClass",
    "InteractionPair",
    "InteractionType",
    "LabelConfig",
    "MetricsConfig",
    "NormalizationFrame",
    "PredictionSet",
    "PretextLabelSet",
    "Scene",
    "Trajectory",
    "label_interactions",
    "label_scene",
    "normalize_scene",
]

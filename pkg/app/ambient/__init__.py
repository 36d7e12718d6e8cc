"""Background Lorentzian geometry of the built-in product spacetimes."""
from .background import (
    BackgroundData,
    christoffels_full,
    eval_background,
    metric_components,
    slice_mean_curvature,
)
from .models import MODEL_REGISTRY, ScaleFactor, SpacetimeModel, create_model

__all__ = [
    "BackgroundData",
    "MODEL_REGISTRY",
    "ScaleFactor",
    "SpacetimeModel",
    "christoffels_full",
    "create_model",
    "eval_background",
    "metric_components",
    "slice_mean_curvature",
]

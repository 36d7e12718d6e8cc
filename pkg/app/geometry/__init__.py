"""Periodic-grid stencil calculus and the geometry of spacelike graphs."""
from .grid import GraphState, GridSpec, gradient, hessian, node_coordinates, partial_first, partial_second
from .profiles import HeightProfile
from .hypersurface import (
    DEFAULT_MARGIN,
    IDENTITY_TOLERANCES,
    GeometryFields,
    compute_geometry,
    embedding_oracle,
    gradient_quantities,
    identity_residuals,
    identity_violations,
    induced_christoffels,
    induced_metric,
    normal,
    principal_curvatures,
    reference_norm_normal,
    second_fundamental,
    with_curvatures,
)

__all__ = [
    "DEFAULT_MARGIN",
    "IDENTITY_TOLERANCES",
    "GeometryFields",
    "GraphState",
    "GridSpec",
    "HeightProfile",
    "compute_geometry",
    "embedding_oracle",
    "gradient",
    "gradient_quantities",
    "hessian",
    "identity_residuals",
    "identity_violations",
    "induced_christoffels",
    "induced_metric",
    "node_coordinates",
    "normal",
    "partial_first",
    "partial_second",
    "principal_curvatures",
    "reference_norm_normal",
    "second_fundamental",
    "with_curvatures",
]

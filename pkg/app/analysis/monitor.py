"""
Monitor records: the scalars the flow is audited on, extracted from a single
geometry evaluation of a graph.
"""
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.ambient.models import SpacetimeModel
from app.flow.curvature import PrescribedCurvature, evaluate_on_graph
from app.geometry.grid import GraphState
from app.geometry.hypersurface import DEFAULT_MARGIN, GeometryFields, compute_geometry

# frozen column order of series.csv
SERIES_COLUMNS: List[str] = [
    "time",
    "dt",
    "sup_abs_residual",
    "min_signed_residual",
    "max_vtilde",
    "max_abs_kappa",
    "max_abs_H",
    "u_min",
    "u_max",
    "max_du_norm",
]


class MonitorRecord(BaseModel):
    """One row of the flow's time series."""
    model_config = ConfigDict(frozen=True)

    step: int
    time: float
    dt: float
    sup_abs_residual: float
    min_signed_residual: float
    max_vtilde: float
    max_abs_kappa: float
    max_abs_H: float
    u_min: float
    u_max: float
    max_du_norm: float

    def as_row(self) -> List[float]:
        return [getattr(self, column) for column in SERIES_COLUMNS]


def monitor_from_fields(
    state: GraphState,
    fields: GeometryFields,
    f_values: np.ndarray,
    dt: float = 0.0,
) -> MonitorRecord:
    """Builds a record from already computed geometry and f(u, x) values."""
    residual = fields.H - f_values
    return MonitorRecord(
        step=state.step,
        time=float(state.time),
        dt=float(dt),
        sup_abs_residual=float(np.max(np.abs(residual))),
        min_signed_residual=float(np.min(residual)),
        max_vtilde=float(np.max(fields.vtilde)),
        max_abs_kappa=float(np.max(np.abs(fields.kappa))),
        max_abs_H=float(np.max(np.abs(fields.H))),
        u_min=float(np.min(state.u)),
        u_max=float(np.max(state.u)),
        max_du_norm=float(np.sqrt(np.max(fields.du_norm2))),
    )


def monitor(
    model: SpacetimeModel,
    state: GraphState,
    f: PrescribedCurvature,
    dt: float = 0.0,
    margin: float = DEFAULT_MARGIN,
    fields: Optional[GeometryFields] = None,
) -> MonitorRecord:
    """Evaluates the geometry once and extracts every monitored scalar."""
    if fields is None or fields.H is None:
        fields = compute_geometry(model, state, margin)
    return monitor_from_fields(state, fields, evaluate_on_graph(f, state), dt)

"""
Scalar form of the prescribed mean curvature flow,

    du/dt = -e^{-psi} v (H - f),

integrated at fixed spatial coordinates with adaptive explicit steps, window
and spacelikeness guards and a residual based stopping rule.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.ambient.models import SpacetimeModel
from app.analysis.monitor import MonitorRecord, monitor_from_fields
from app.errors import DomainError, SpacelikenessLost
from app.flow.curvature import PrescribedCurvature, evaluate_on_graph
from app.geometry.grid import GraphState
from app.geometry.hypersurface import (
    DEFAULT_MARGIN,
    GeometryFields,
    compute_geometry,
    gradient_quantities,
    second_fundamental,
    with_curvatures,
)


class FlowConfig(BaseModel):
    """Numerical parameters of one flow run."""
    model_config = ConfigDict(extra="forbid")

    cfl_safety: float = Field(0.2, gt=0.0, le=1.0)
    tol_residual: float = Field(1e-8, gt=0.0)
    max_steps: int = Field(2_000_000, gt=0)
    max_flow_time: float = Field(1e4, gt=0.0)
    spacelike_margin: float = Field(DEFAULT_MARGIN, gt=0.0, lt=1.0)
    integrator: str = Field("rk2", pattern="^(euler|rk2)$")
    u_floor: Optional[float] = None
    u_ceiling: Optional[float] = None
    record_every: int = Field(100, gt=0)
    barrier_tol: float = Field(1e-10, ge=0.0)

    @model_validator(mode="after")
    def _check_window(self) -> "FlowConfig":
        if self.u_floor is not None and self.u_ceiling is not None and self.u_floor >= self.u_ceiling:
            raise ValueError(f"u_floor ({self.u_floor}) must be below u_ceiling ({self.u_ceiling})")
        return self


class FlowStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_STEPS_REACHED = "MaxStepsReached"
    DIVERGED = "Diverged"
    SPACELIKENESS_LOST = "SpacelikenessLost"


@dataclass
class FlowTrace:
    """Append-only record of a run; snapshots are kept at the record cadence."""
    initial_state: GraphState
    final_state: GraphState
    status: FlowStatus
    records: List[MonitorRecord] = field(default_factory=list)
    snapshots: List[GraphState] = field(default_factory=list)
    tol_residual: float = 1e-8
    u_floor: Optional[float] = None
    u_ceiling: Optional[float] = None
    initial_barrier_ok: bool = True
    message: str = ""

    @property
    def steps(self) -> int:
        return self.final_state.step

    @property
    def final_residual(self) -> Optional[float]:
        return self.records[-1].sup_abs_residual if self.records else None


class Residual(NamedTuple):
    field: np.ndarray
    sup_abs: float
    min_signed: float


@dataclass(frozen=True)
class BarrierReport:
    ok: bool
    kind: str
    min_signed: float
    max_signed: float
    worst_node: Tuple[int, ...]


def _residual_from(fields: GeometryFields, f_values: np.ndarray) -> Residual:
    values = fields.H - f_values
    return Residual(field=values, sup_abs=float(np.max(np.abs(values))), min_signed=float(np.min(values)))


def residual(
    model: SpacetimeModel,
    state: GraphState,
    f: PrescribedCurvature,
    margin: float = DEFAULT_MARGIN,
    fields: Optional[GeometryFields] = None,
) -> Residual:
    """Node-wise H - f(u(xi), xi), its sup norm and its minimum."""
    if fields is None or fields.H is None:
        fields = second_fundamental(model, state, fields, margin)
    return _residual_from(fields, evaluate_on_graph(f, state))


def _node(index: int, shape: Tuple[int, ...]) -> Tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(index, shape))


def check_upper_barrier(
    model: SpacetimeModel,
    state: GraphState,
    f: PrescribedCurvature,
    tol: float = 1e-10,
    margin: float = DEFAULT_MARGIN,
    fields: Optional[GeometryFields] = None,
) -> BarrierReport:
    """Report-only check of H >= f on the graph (ok iff min(H - f) >= -tol)."""
    res = residual(model, state, f, margin, fields)
    return BarrierReport(
        ok=res.min_signed >= -tol,
        kind="upper",
        min_signed=res.min_signed,
        max_signed=float(np.max(res.field)),
        worst_node=_node(int(np.argmin(res.field)), res.field.shape),
    )


def check_lower_barrier(
    model: SpacetimeModel,
    state: GraphState,
    f: PrescribedCurvature,
    tol: float = 1e-10,
    margin: float = DEFAULT_MARGIN,
    fields: Optional[GeometryFields] = None,
) -> BarrierReport:
    """Report-only check of H <= f on the graph (ok iff max(H - f) <= tol)."""
    res = residual(model, state, f, margin, fields)
    max_signed = float(np.max(res.field))
    return BarrierReport(
        ok=max_signed <= tol,
        kind="lower",
        min_signed=res.min_signed,
        max_signed=max_signed,
        worst_node=_node(int(np.argmax(res.field)), res.field.shape),
    )


def diffusion_bound(fields: GeometryFields) -> float:
    """Largest eigenvalue over all nodes of the principal symbol v^2 g^{ij}."""
    symbol = fields.v ** 2 * fields.g_inv
    if symbol.shape[0] == 1:
        return float(np.max(symbol[0, 0]))
    a, b, d = symbol[0, 0], symbol[0, 1], symbol[1, 1]
    largest = 0.5 * (a + d) + np.sqrt(0.25 * (a - d) ** 2 + b * b)
    return float(np.max(largest))


def stable_dt(
    model: SpacetimeModel,
    state: GraphState,
    config: FlowConfig,
    fields: Optional[GeometryFields] = None,
) -> float:
    """
    cfl_safety * min_k h_k^2 / (2 n Lambda), clamped so the run stops at max_flow_time.
    """
    if fields is None or fields.g_inv is None:
        fields = second_fundamental(model, state, fields, config.spacelike_margin)
    grid = state.grid
    bound = diffusion_bound(fields)
    h_min = min(grid.spacing)
    dt = config.cfl_safety * h_min * h_min / (2.0 * grid.dim * bound)
    remaining = config.max_flow_time - state.time
    return max(0.0, min(dt, remaining))


def normal_speed(
    model: SpacetimeModel,
    state: GraphState,
    f: PrescribedCurvature,
    fields: GeometryFields,
) -> np.ndarray:
    """Right-hand side -e^{-psi} v (H - f) at every node."""
    res = fields.H - evaluate_on_graph(f, state)
    return -np.exp(-fields.background.psi) * fields.v * res


def step(
    model: SpacetimeModel,
    state: GraphState,
    f: PrescribedCurvature,
    dt: float,
    integrator: str = "rk2",
    margin: float = DEFAULT_MARGIN,
    fields: Optional[GeometryFields] = None,
) -> GraphState:
    """
    One explicit step: forward Euler or the explicit midpoint rule.

    Raises:
        SpacelikenessLost: if the midpoint or the updated graph violates the margin.
    """
    updated, _ = _advance(model, state, f, dt, integrator, margin, fields)
    return updated


def _advance(
    model: SpacetimeModel,
    state: GraphState,
    f: PrescribedCurvature,
    dt: float,
    integrator: str,
    margin: float,
    fields: Optional[GeometryFields],
) -> Tuple[GraphState, GeometryFields]:
    """step() that also hands back the checked gradient fields of the updated graph."""
    if integrator not in ("euler", "rk2"):
        raise ValueError(f"Unknown integrator '{integrator}'")
    if fields is None or fields.H is None:
        fields = second_fundamental(model, state, fields, margin, curvatures=False)
    slope = normal_speed(model, state, f, fields)

    if integrator == "rk2":
        midpoint = GraphState(grid=state.grid, u=state.u + 0.5 * dt * slope, time=state.time + 0.5 * dt, step=state.step)
        mid_fields = second_fundamental(model, midpoint, None, margin, curvatures=False)
        slope = normal_speed(model, midpoint, f, mid_fields)

    updated = state.advance(state.u + dt * slope, dt)
    return updated, gradient_quantities(model, updated, margin)


def _outside_window(state: GraphState, config: FlowConfig) -> bool:
    if config.u_floor is not None and float(np.min(state.u)) < config.u_floor:
        return True
    if config.u_ceiling is not None and float(np.max(state.u)) > config.u_ceiling:
        return True
    return False


def evolve(
    model: SpacetimeModel,
    initial: GraphState,
    f: PrescribedCurvature,
    config: FlowConfig,
) -> FlowTrace:
    """
    Runs the flow from an (upper barrier) initial graph.

    Loop: geometry -> record -> stopping tests -> dt -> step. Terminates with
    Converged (sup|H - f| <= tol_residual), Diverged (u leaves the configured
    window or the temporal domain), SpacelikenessLost or MaxStepsReached.
    Never raises for these, also when the initial graph already fails.
    """
    margin = config.spacelike_margin
    trace = FlowTrace(
        initial_state=initial,
        final_state=initial,
        status=FlowStatus.MAX_STEPS_REACHED,
        tol_residual=config.tol_residual,
        u_floor=config.u_floor,
        u_ceiling=config.u_ceiling,
    )

    try:
        fields = compute_geometry(model, initial, margin)
    except SpacelikenessLost as e:
        logging.error(f"Initial graph is not uniformly spacelike: {e}")
        trace.status = FlowStatus.SPACELIKENESS_LOST
        trace.message = str(e)
        return trace
    except DomainError as e:
        logging.error(f"Initial graph leaves the temporal domain: {e}")
        trace.status = FlowStatus.DIVERGED
        trace.message = str(e)
        return trace

    barrier = check_upper_barrier(model, initial, f, config.barrier_tol, margin, fields)
    trace.initial_barrier_ok = barrier.ok
    if not barrier.ok:
        logging.warning(
            f"Initial graph is not an upper barrier: min(H - f) = {barrier.min_signed:.6g} "
            f"at node {barrier.worst_node}. Proceeding anyway."
        )

    state = initial
    dt = 0.0
    last_dt = 0.0
    while True:
        f_values = evaluate_on_graph(f, state)
        res = _residual_from(fields, f_values)
        converged = res.sup_abs <= config.tol_residual
        outside = _outside_window(state, config)

        if state.step % config.record_every == 0 or converged or outside:
            _record(trace, state, fields, f_values, last_dt)

        if converged:
            trace.status = FlowStatus.CONVERGED
            logging.info(f"Converged after {state.step} steps at t={state.time:.6g}, sup|H-f|={res.sup_abs:.3e}")
            break
        if outside:
            trace.status = FlowStatus.DIVERGED
            trace.message = (
                f"u left the window [{config.u_floor}, {config.u_ceiling}]: "
                f"u in [{np.min(state.u):.6g}, {np.max(state.u):.6g}] at t={state.time:.6g}"
            )
            logging.warning(trace.message)
            break
        if state.step >= config.max_steps:
            trace.status = FlowStatus.MAX_STEPS_REACHED
            trace.message = f"max_steps={config.max_steps} reached with sup|H-f|={res.sup_abs:.3e}"
            logging.warning(trace.message)
            break

        dt = stable_dt(model, state, config, fields)
        if dt <= 0.0:
            trace.status = FlowStatus.MAX_STEPS_REACHED
            trace.message = f"max_flow_time={config.max_flow_time} reached with sup|H-f|={res.sup_abs:.3e}"
            logging.warning(trace.message)
            break

        try:
            new_state, new_fields = _advance(model, state, f, dt, config.integrator, margin, fields)
            new_fields = second_fundamental(model, new_state, new_fields, margin, curvatures=False)
        except SpacelikenessLost as e:
            trace.status = FlowStatus.SPACELIKENESS_LOST
            trace.message = f"step {state.step + 1}: {e}"
            logging.error(trace.message)
            break
        except DomainError as e:
            trace.status = FlowStatus.DIVERGED
            trace.message = f"step {state.step + 1}: {e}"
            logging.warning(trace.message)
            break
        state, fields, last_dt = new_state, new_fields, dt

    if not trace.records or trace.records[-1].step != state.step:
        _record(trace, state, fields, evaluate_on_graph(f, state), last_dt)
    trace.final_state = state
    return trace


def _record(
    trace: FlowTrace,
    state: GraphState,
    fields: GeometryFields,
    f_values: np.ndarray,
    dt: float,
) -> None:
    record = monitor_from_fields(state, with_curvatures(fields), f_values, dt)
    trace.records.append(record)
    trace.snapshots.append(state)
    logging.info(
        f"step={record.step} t={record.time:.6g} dt={record.dt:.3e} "
        f"sup|H-f|={record.sup_abs_residual:.3e} u=[{record.u_min:.6g}, {record.u_max:.6g}]"
    )

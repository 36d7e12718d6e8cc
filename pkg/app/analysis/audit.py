"""
Invariant audits over a finished flow trace.

Each verdict is a pure function of the trace. Verdicts that only hold when the
initial graph is an upper barrier (H >= f at t = 0) are marked not applicable
otherwise and pass.
"""
import json
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.errors import InsufficientTrace
from app.flow.evolution import FlowTrace


class AuditConfig(BaseModel):
    """Audit thresholds. The bounds are artifact choices, not derived constants."""
    model_config = ConfigDict(extra="forbid")

    sign_tol: float = Field(1e-6, ge=0.0)
    hypothesis_tol: float = Field(1e-10, ge=0.0)
    descent_tol: float = Field(1e-12, ge=0.0)
    vtilde_bound: float = Field(10.0, gt=1.0)
    vtilde_growth: float = Field(2.0, gt=1.0)
    du_norm_bound: float = Field(0.999, gt=0.0, lt=1.0)
    kappa_growth_factor: float = Field(1.1, gt=0.0)
    kappa_bound: Optional[float] = Field(None, gt=0.0)


class Verdict(BaseModel):
    name: str
    passed: bool
    applicable: bool = True
    worst_value: Optional[float] = None
    worst_time: Optional[float] = None
    detail: str = ""


class AuditReport(BaseModel):
    verdicts: List[Verdict]
    passed: bool

    def verdict(self, name: str) -> Verdict:
        for item in self.verdicts:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True)


def _not_applicable(name: str, reason: str) -> Verdict:
    return Verdict(name=name, passed=True, applicable=False, detail=reason)


def audit(trace: FlowTrace, config: Optional[AuditConfig] = None) -> AuditReport:
    """
    Checks the monitored invariants of a trace:

    sign preservation of H - f, node-wise monotone descent between snapshots,
    total descent, window confinement, uniform spacelikeness, no curvature
    growth, and the final residual against the run's tolerance.

    Raises:
        InsufficientTrace: if the trace holds fewer than two records.
    """
    config = config or AuditConfig()
    records = trace.records
    if len(records) < 2:
        raise InsufficientTrace(f"audit needs at least 2 monitor records, got {len(records)}")

    times = np.array([r.time for r in records])
    min_signed = np.array([r.min_signed_residual for r in records])
    barrier_start = min_signed[0] >= -config.hypothesis_tol
    no_barrier = f"initial min(H - f) = {min_signed[0]:.6g} < 0, the initial graph is not an upper barrier"

    verdicts = [
        _sign_preservation(times, min_signed, barrier_start, no_barrier, config),
        _monotone_descent(trace, barrier_start, no_barrier, config),
        _total_descent(trace, barrier_start, no_barrier, config),
        _window_confinement(trace, times, barrier_start, config),
        _vtilde_bound(trace, times, config),
        _spacelike_margin(trace, times, config),
        _curvature_no_growth(trace, times, config),
        _final_residual(trace),
    ]
    return AuditReport(verdicts=verdicts, passed=all(v.passed for v in verdicts))


def _sign_preservation(times, min_signed, barrier_start, no_barrier, config) -> Verdict:
    name = "sign_preservation"
    if not barrier_start:
        return _not_applicable(name, no_barrier)
    worst = int(np.argmin(min_signed))
    return Verdict(
        name=name,
        passed=bool(min_signed[worst] >= -config.sign_tol),
        worst_value=float(min_signed[worst]),
        worst_time=float(times[worst]),
        detail=f"min over records of min(H - f) must stay >= -{config.sign_tol:g}",
    )


def _monotone_descent(trace: FlowTrace, barrier_start, no_barrier, config) -> Verdict:
    name = "monotone_descent"
    if not barrier_start:
        return _not_applicable(name, no_barrier)
    worst_value, worst_time = -np.inf, None
    snapshots = trace.snapshots
    for previous, current in zip(snapshots, snapshots[1:]):
        rise = float(np.max(current.u - previous.u))
        if rise > worst_value:
            worst_value, worst_time = rise, float(current.time)
    if worst_time is None:
        return _not_applicable(name, "fewer than two snapshots")
    return Verdict(
        name=name,
        passed=bool(worst_value <= config.descent_tol),
        worst_value=worst_value,
        worst_time=worst_time,
        detail="largest node-wise increase of u between consecutive snapshots",
    )


def _total_descent(trace: FlowTrace, barrier_start, no_barrier, config) -> Verdict:
    name = "total_descent"
    if not barrier_start:
        return _not_applicable(name, no_barrier)
    rise = float(np.max(trace.final_state.u - trace.initial_state.u))
    return Verdict(
        name=name,
        passed=bool(rise <= config.descent_tol),
        worst_value=rise,
        worst_time=float(trace.final_state.time),
        detail="u(0, x) - u(t, x) must be non-negative at the final state",
    )


def _window_confinement(trace: FlowTrace, times, barrier_start, config) -> Verdict:
    name = "window_confinement"
    floor = trace.u_floor
    ceiling = trace.u_ceiling
    if barrier_start:
        initial_max = trace.records[0].u_max + config.descent_tol
        ceiling = initial_max if ceiling is None else min(ceiling, initial_max)
    if floor is None and ceiling is None:
        return _not_applicable(name, "no window configured and the initial graph is not an upper barrier")

    u_min = np.array([r.u_min for r in trace.records])
    u_max = np.array([r.u_max for r in trace.records])
    below = (floor - u_min) if floor is not None else np.full_like(u_min, -np.inf)
    above = (u_max - ceiling) if ceiling is not None else np.full_like(u_max, -np.inf)
    excess = np.maximum(below, above)
    worst = int(np.argmax(excess))
    return Verdict(
        name=name,
        passed=bool(excess[worst] <= 0.0),
        worst_value=float(excess[worst]),
        worst_time=float(times[worst]),
        detail=f"u must stay within [{floor}, {ceiling}]; value is the largest excursion",
    )


def _vtilde_bound(trace: FlowTrace, times, config) -> Verdict:
    values = np.array([r.max_vtilde for r in trace.records])
    bound = min(config.vtilde_bound, config.vtilde_growth * values[0])
    worst = int(np.argmax(values))
    return Verdict(
        name="vtilde_bound",
        passed=bool(values[worst] <= bound),
        worst_value=float(values[worst]),
        worst_time=float(times[worst]),
        detail=f"max vtilde must stay <= {bound:.6g}",
    )


def _spacelike_margin(trace: FlowTrace, times, config) -> Verdict:
    values = np.array([r.max_du_norm for r in trace.records])
    worst = int(np.argmax(values))
    return Verdict(
        name="spacelike_margin",
        passed=bool(values[worst] <= config.du_norm_bound),
        worst_value=float(values[worst]),
        worst_time=float(times[worst]),
        detail=f"max |Du| must stay <= {config.du_norm_bound:g}",
    )


def _curvature_no_growth(trace: FlowTrace, times, config) -> Verdict:
    values = np.array([r.max_abs_kappa for r in trace.records])
    median = float(np.median(values))
    limit = config.kappa_growth_factor * median + 1e-12
    passed = values[-1] <= limit
    detail = f"final max|kappa| must be <= {config.kappa_growth_factor:g} x median ({median:.6g})"
    if config.kappa_bound is not None:
        passed = passed and float(np.max(values)) <= config.kappa_bound
        detail += f" and max|kappa| <= {config.kappa_bound:g}"
    return Verdict(
        name="curvature_no_growth",
        passed=bool(passed),
        worst_value=float(values[-1]),
        worst_time=float(times[-1]),
        detail=detail,
    )


def _final_residual(trace: FlowTrace) -> Verdict:
    last = trace.records[-1]
    return Verdict(
        name="final_residual",
        passed=bool(last.sup_abs_residual <= trace.tol_residual),
        worst_value=float(last.sup_abs_residual),
        worst_time=float(last.time),
        detail=f"sup|H - f| at the last record must be <= {trace.tol_residual:g}",
    )

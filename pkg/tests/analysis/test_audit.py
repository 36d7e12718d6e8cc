# tests/analysis/test_audit.py
import json
from typing import List, Optional

import numpy as np
import pytest

from app.ambient.models import create_model
from app.analysis.audit import AuditConfig, audit
from app.analysis.monitor import MonitorRecord
from app.errors import InsufficientTrace
from app.flow.curvature import PrescribedCurvature
from app.flow.evolution import FlowConfig, FlowStatus, FlowTrace, evolve
from app.geometry.grid import GraphState, GridSpec
from app.geometry.profiles import HeightProfile

GRID = GridSpec.create(1, [8], [1.0])

VERDICT_NAMES = [
    "sign_preservation",
    "monotone_descent",
    "total_descent",
    "window_confinement",
    "vtilde_bound",
    "spacelike_margin",
    "curvature_no_growth",
    "final_residual",
]


def _trace(
    heights: List[float],
    min_signed: List[float],
    kappa: Optional[List[float]] = None,
    vtilde: Optional[List[float]] = None,
    u_floor: Optional[float] = None,
    u_ceiling: Optional[float] = None,
) -> FlowTrace:
    """A hand-made trace of constant graphs, one record and snapshot per height."""
    kappa = kappa or [abs(m) for m in min_signed]
    vtilde = vtilde or [1.0] * len(heights)
    snapshots, records = [], []
    for i, u in enumerate(heights):
        snapshots.append(GraphState(grid=GRID, u=np.full(8, u), time=0.1 * i, step=10 * i))
        records.append(MonitorRecord(
            step=10 * i,
            time=0.1 * i,
            dt=0.01,
            sup_abs_residual=abs(min_signed[i]),
            min_signed_residual=min_signed[i],
            max_vtilde=vtilde[i],
            max_abs_kappa=kappa[i],
            max_abs_H=abs(min_signed[i]),
            u_min=u,
            u_max=u,
            max_du_norm=0.0,
        ))
    return FlowTrace(
        initial_state=snapshots[0],
        final_state=snapshots[-1],
        status=FlowStatus.CONVERGED,
        records=records,
        snapshots=snapshots,
        tol_residual=1e-8,
        u_floor=u_floor,
        u_ceiling=u_ceiling,
    )


@pytest.fixture
def descending_trace() -> FlowTrace:
    """Graphs moving down onto a slice, H - f decaying from above."""
    return _trace([1.0, 0.8, 0.6], [0.5, 0.3, 1e-9])


def test_descending_trace_passes_every_verdict(descending_trace):
    # Act
    report = audit(descending_trace)

    # Assert
    assert [v.name for v in report.verdicts] == VERDICT_NAMES
    assert report.passed
    assert all(v.applicable for v in report.verdicts)
    assert report.verdict("total_descent").worst_value == pytest.approx(-0.4)


def test_short_trace_is_rejected(descending_trace):
    descending_trace.records = descending_trace.records[:1]
    with pytest.raises(InsufficientTrace):
        audit(descending_trace)


def test_rising_snapshot_breaks_monotone_descent():
    # Act
    report = audit(_trace([1.0, 1.1, 0.6], [0.5, 0.3, 1e-9]))

    # Assert
    descent = report.verdict("monotone_descent")
    assert not descent.passed
    assert descent.worst_value == pytest.approx(0.1)
    assert descent.worst_time == pytest.approx(0.1)
    # the implied ceiling is the initial maximum
    assert not report.verdict("window_confinement").passed
    assert not report.passed


def test_sign_change_is_flagged():
    report = audit(_trace([1.0, 0.8, 0.6], [0.5, -1e-3, 1e-9]))
    sign = report.verdict("sign_preservation")
    assert not sign.passed
    assert sign.worst_value == pytest.approx(-1e-3)


def test_hypothesis_verdicts_not_applicable_without_upper_barrier():
    # Arrange: H < f initially and u rises
    trace = _trace([0.0, 0.2, 0.4], [-0.5, -0.3, 1e-9])

    # Act
    report = audit(trace)

    # Assert
    for name in ("sign_preservation", "monotone_descent", "total_descent", "window_confinement"):
        verdict = report.verdict(name)
        assert not verdict.applicable
        assert verdict.passed
    assert report.passed


def test_configured_window_is_enforced():
    trace = _trace([0.0, 0.5, 1.5], [-0.5, -0.3, 1e-9], u_floor=-1.0, u_ceiling=1.0)
    verdict = audit(trace).verdict("window_confinement")
    assert verdict.applicable
    assert not verdict.passed
    assert verdict.worst_value == pytest.approx(0.5)


def test_vtilde_growth_is_bounded():
    trace = _trace([1.0, 0.8, 0.6], [0.5, 0.3, 1e-9], vtilde=[1.0, 1.5, 2.5])
    verdict = audit(trace).verdict("vtilde_bound")
    assert not verdict.passed
    assert verdict.worst_value == 2.5
    assert audit(trace, AuditConfig(vtilde_growth=3.0)).verdict("vtilde_bound").passed


def test_curvature_growth_is_flagged():
    trace = _trace([1.0, 0.8, 0.6], [0.5, 0.3, 1e-9], kappa=[1.0, 0.8, 5.0])
    assert not audit(trace).verdict("curvature_no_growth").passed
    calm = _trace([1.0, 0.8, 0.6], [0.5, 0.3, 1e-9], kappa=[1.0, 0.8, 0.6])
    assert not audit(calm, AuditConfig(kappa_bound=0.9)).verdict("curvature_no_growth").passed


def test_generous_kappa_bound_does_not_excuse_growth():
    growing = _trace([1.0, 0.8, 0.6], [0.5, 0.3, 1e-9], kappa=[1.0, 0.8, 5.0])
    calm = _trace([1.0, 0.8, 0.6], [0.5, 0.3, 1e-9], kappa=[1.0, 0.8, 0.6])
    assert not audit(growing, AuditConfig(kappa_bound=100.0)).verdict("curvature_no_growth").passed
    assert audit(calm, AuditConfig(kappa_bound=100.0)).verdict("curvature_no_growth").passed


def test_final_residual_against_tolerance():
    report = audit(_trace([1.0, 0.8, 0.6], [0.5, 0.3, 1e-3]))
    assert not report.verdict("final_residual").passed


def test_audit_is_deterministic_and_serializable(descending_trace):
    first = audit(descending_trace)
    second = audit(descending_trace)
    assert first.model_dump() == second.model_dump()
    parsed = json.loads(first.to_json())
    assert parsed["passed"] is True
    assert len(parsed["verdicts"]) == 8


def test_cosh_repeller_breaks_confinement():
    # Arrange
    model = create_model("flrw_torus", {"scale": "cosh"})
    config = FlowConfig(cfl_safety=0.9, u_floor=-1.0, u_ceiling=1.0)
    trace = evolve(model, HeightProfile.constant(0.1).state(GRID), PrescribedCurvature.constant(0.0), config)

    # Act
    report = audit(trace)

    # Assert
    assert trace.status is FlowStatus.DIVERGED
    assert not report.verdict("window_confinement").passed
    assert report.verdict("sign_preservation").passed
    assert not report.passed

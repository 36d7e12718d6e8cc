# tests/flow/test_evolution.py
import math

import numpy as np
import pytest
from pydantic import ValidationError

import app.flow.evolution as evolution_module
import app.geometry.hypersurface as hypersurface_module
from app.ambient.models import create_model
from app.analysis.audit import audit
from app.errors import SpacelikenessLost
from app.flow.curvature import PrescribedCurvature
from app.flow.evolution import (
    FlowConfig,
    FlowStatus,
    check_lower_barrier,
    check_upper_barrier,
    diffusion_bound,
    evolve,
    residual,
    stable_dt,
    step,
)
from app.geometry.grid import GraphState, GridSpec
from app.geometry.hypersurface import compute_geometry, identity_residuals, identity_violations
from app.geometry.profiles import HeightProfile

ZERO = PrescribedCurvature.constant(0.0)


@pytest.fixture
def minkowski():
    return create_model("minkowski_torus")


@pytest.fixture
def gaussian():
    return create_model("flrw_torus", {"scale": "gaussian"})


def _grid(points: int) -> GridSpec:
    return GridSpec.create(1, [points], [1.0])


def test_flow_config_defaults_and_validation():
    # Act
    config = FlowConfig()

    # Assert
    assert config.cfl_safety == 0.2
    assert config.tol_residual == 1e-8
    assert config.integrator == "rk2"
    with pytest.raises(ValidationError):
        FlowConfig(u_floor=1.0, u_ceiling=0.0)
    with pytest.raises(ValidationError):
        FlowConfig(integrator="rk4")
    with pytest.raises(ValidationError):
        FlowConfig(cfl_safety=1.5)
    with pytest.raises(ValidationError):
        FlowConfig(unknown_knob=1)


def test_stable_dt_on_flat_slice(minkowski):
    """v^2 g^{11} = 1 everywhere, so dt = 0.2 h^2 / 2 for h = 1/16."""
    state = GraphState(grid=_grid(16), u=np.zeros(16))
    assert stable_dt(minkowski, state, FlowConfig()) == pytest.approx(0.2 / 512, rel=1e-14)


def test_stable_dt_is_clamped_by_flow_time(minkowski):
    state = GraphState(grid=_grid(16), u=np.zeros(16), time=0.9999)
    dt = stable_dt(minkowski, state, FlowConfig(max_flow_time=1.0))
    assert dt == pytest.approx(1e-4)


def test_diffusion_bound_in_two_dimensions():
    grid = GridSpec.create(2, [8, 8], [1.0, 1.0])
    fields = compute_geometry(create_model("minkowski_torus", spatial_dim=2), GraphState(grid=grid, u=np.zeros((8, 8))))
    assert diffusion_bound(fields) == pytest.approx(1.0)


def test_stationary_graph_does_not_move(minkowski):
    # Arrange
    state = GraphState(grid=_grid(16), u=np.full(16, 0.3))

    # Act
    updated = step(minkowski, state, ZERO, 0.01)

    # Assert
    np.testing.assert_array_equal(updated.u, state.u)
    assert updated.step == 1
    assert updated.time == pytest.approx(0.01)


def test_step_rejects_unknown_integrator(minkowski):
    state = GraphState(grid=_grid(16), u=np.zeros(16))
    with pytest.raises(ValueError):
        step(minkowski, state, ZERO, 0.01, integrator="leapfrog")


def test_stationary_flow_converges_at_step_zero(minkowski):
    # Act
    trace = evolve(minkowski, GraphState(grid=_grid(16), u=np.full(16, 0.3)), ZERO, FlowConfig(tol_residual=1e-10))

    # Assert
    assert trace.status is FlowStatus.CONVERGED
    assert trace.steps == 0
    assert len(trace.records) == 1
    assert trace.final_residual == 0.0


def test_homogeneous_gaussian_flow_decays_exponentially(gaussian):
    """For u = const the flow reduces to du/dt = -u, so sup|H - f| = 0.8 exp(-t)."""
    # Arrange
    initial = HeightProfile.constant(0.8).state(_grid(8))
    config = FlowConfig(cfl_safety=0.9)

    # Act
    trace = evolve(gaussian, initial, ZERO, config)

    # Assert
    assert trace.status is FlowStatus.CONVERGED
    assert trace.initial_barrier_ok
    assert trace.final_residual <= 1e-8
    for record in trace.records:
        expected = 0.8 * math.exp(-record.time)
        assert record.sup_abs_residual == pytest.approx(expected, rel=1e-2)
        assert record.u_max == record.u_min


def test_euler_integrator_converges_too(gaussian):
    initial = HeightProfile.constant(0.8).state(_grid(8))
    trace = evolve(gaussian, initial, ZERO, FlowConfig(cfl_safety=0.9, integrator="euler"))
    assert trace.status is FlowStatus.CONVERGED
    assert trace.final_state.u.max() == pytest.approx(0.0, abs=1e-8)


def test_cosine_graph_flows_to_a_maximal_slice(minkowski):
    # Arrange
    initial = HeightProfile.cosine(0.0, 0.01).state(_grid(8))

    # Act
    trace = evolve(minkowski, initial, ZERO, FlowConfig())

    # Assert
    assert trace.status is FlowStatus.CONVERGED
    assert np.ptp(trace.final_state.u) < 1e-8
    assert trace.records[-1].step == trace.steps
    assert len(trace.snapshots) == len(trace.records)


def test_cosh_repeller_leaves_the_window():
    """H = -tanh(u) < 0 for u > 0, so a slice above the symmetric one runs away."""
    # Arrange
    model = create_model("flrw_torus", {"scale": "cosh"})
    initial = HeightProfile.constant(0.1).state(_grid(8))
    config = FlowConfig(cfl_safety=0.9, u_floor=-1.0, u_ceiling=1.0)

    # Act
    trace = evolve(model, initial, ZERO, config)

    # Assert
    assert trace.status is FlowStatus.DIVERGED
    assert not trace.initial_barrier_ok
    assert trace.final_state.u.max() > 1.0
    assert "window" in trace.message


def test_steep_initial_graph_is_reported(minkowski):
    # |Du| = 0.3 * 16 * sin(pi / 8) > 1
    initial = HeightProfile.cosine(0.0, 0.3).state(_grid(16))
    trace = evolve(minkowski, initial, ZERO, FlowConfig())
    assert trace.status is FlowStatus.SPACELIKENESS_LOST
    assert trace.records == []
    assert "node" in trace.message


def test_max_steps_stops_the_run(minkowski):
    # Arrange
    initial = HeightProfile.cosine(0.0, 0.01).state(_grid(8))

    # Act
    trace = evolve(minkowski, initial, ZERO, FlowConfig(max_steps=5))

    # Assert
    assert trace.status is FlowStatus.MAX_STEPS_REACHED
    assert trace.steps == 5
    assert [r.step for r in trace.records] == [0, 5]
    assert "max_steps" in trace.message


def test_max_flow_time_stops_the_run(minkowski):
    initial = HeightProfile.cosine(0.0, 0.01).state(_grid(8))
    trace = evolve(minkowski, initial, ZERO, FlowConfig(max_flow_time=0.01))
    assert trace.status is FlowStatus.MAX_STEPS_REACHED
    assert trace.final_state.time == pytest.approx(0.01)
    assert "max_flow_time" in trace.message


def test_record_cadence(minkowski):
    initial = HeightProfile.cosine(0.0, 0.01).state(_grid(8))
    trace = evolve(minkowski, initial, ZERO, FlowConfig(max_steps=25, record_every=10))
    assert [r.step for r in trace.records] == [0, 10, 20, 25]


def test_barrier_reports(gaussian):
    # Arrange: H = u = 0.5 on the slice
    state = HeightProfile.constant(0.5).state(_grid(16))

    # Act
    upper = check_upper_barrier(gaussian, state, ZERO)
    lower = check_lower_barrier(gaussian, state, PrescribedCurvature.constant(1.0))
    not_upper = check_upper_barrier(gaussian, state, PrescribedCurvature.constant(1.0))

    # Assert
    assert upper.ok and upper.kind == "upper"
    assert upper.min_signed == pytest.approx(0.5)
    assert lower.ok and lower.kind == "lower"
    assert lower.max_signed == pytest.approx(-0.5)
    assert not not_upper.ok
    assert len(not_upper.worst_node) == 1


def test_residual_of_homogeneous_slice(gaussian):
    state = HeightProfile.constant(0.5).state(_grid(8))
    res = residual(gaussian, state, PrescribedCurvature.constant(0.2))
    assert res.sup_abs == pytest.approx(0.3)
    assert res.min_signed == pytest.approx(0.3)
    assert res.field.shape == (8,)


def test_loop_evaluates_only_what_each_step_needs(minkowski, mocker):
    """Two curvature evaluations per rk2 step; principal curvatures only at records."""
    # Arrange
    initial = HeightProfile.cosine(0.0, 0.01).state(_grid(8))
    full = mocker.spy(evolution_module, "compute_geometry")
    curvature = mocker.spy(evolution_module, "second_fundamental")
    gradients = mocker.spy(evolution_module, "gradient_quantities")
    principal = mocker.spy(hypersurface_module, "principal_curvatures")

    # Act
    trace = evolve(minkowski, initial, ZERO, FlowConfig(max_steps=25, record_every=10))

    # Assert: records at steps 0, 10, 20 and 25; step 0 reuses the initial geometry
    assert trace.steps == 25
    assert full.call_count == 1
    assert curvature.call_count == 2 * 25
    assert gradients.call_count == 25
    assert principal.call_count == 1 + 3


def test_initial_graph_outside_the_temporal_domain_is_a_status():
    # Arrange
    model = create_model("flrw_torus", {"scale": "power", "p": 0.5})
    initial = HeightProfile.constant(-0.5).state(_grid(8))

    # Act
    trace = evolve(model, initial, ZERO, FlowConfig())

    # Assert
    assert trace.status is FlowStatus.DIVERGED
    assert trace.records == []
    assert "x0 > 0" in trace.message


def test_steep_cosine_is_not_spacelike_in_the_bump_model():
    # max |u'| = 0.4 pi > 1 for u = 0.2 cos(2 pi x)
    model = create_model("conformal_bump", {"A": 0.1})
    with pytest.raises(SpacelikenessLost) as err:
        compute_geometry(model, HeightProfile.cosine(0.0, 0.2).state(_grid(64)))
    assert err.value.value > 1.0


def test_bump_model_relaxes_to_a_maximal_slice_inside_the_initial_range():
    # Arrange
    model = create_model("conformal_bump", {"A": 0.1})
    initial = HeightProfile.cosine(0.0, 0.1).state(_grid(16))
    config = FlowConfig(cfl_safety=0.9, tol_residual=1e-6, u_floor=-0.1, u_ceiling=0.1)

    # Act
    trace = evolve(model, initial, ZERO, config)
    report = audit(trace)

    # Assert
    assert trace.status is FlowStatus.CONVERGED
    assert trace.final_residual <= 1e-6
    assert -0.1 <= trace.final_state.u.min() and trace.final_state.u.max() <= 0.1
    assert np.ptp(trace.final_state.u) < 1e-6
    confinement = report.verdict("window_confinement")
    assert confinement.applicable and confinement.passed


def test_two_dimensional_flow_keeps_every_identity_at_every_record():
    # Arrange
    model = create_model("minkowski_torus", spatial_dim=2)
    grid = GridSpec.create(2, [8, 8], [1.0, 1.0])
    initial = HeightProfile.cosine(0.0, 0.05, waves=(1, 1)).state(grid)

    # Act
    trace = evolve(model, initial, ZERO, FlowConfig(cfl_safety=0.9, record_every=10))

    # Assert
    assert trace.status is FlowStatus.CONVERGED
    assert np.ptp(trace.final_state.u) < 1e-5
    assert len(trace.snapshots) == len(trace.records) >= 3
    for state in trace.snapshots:
        fields = compute_geometry(model, state)
        assert identity_violations(identity_residuals(model, state, fields)) == {}

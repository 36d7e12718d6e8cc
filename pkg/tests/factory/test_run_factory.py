# tests/factory/test_run_factory.py
import numpy as np
import pytest

from app.errors import ConfigError, GridMismatch, UnknownModel
from app.factory.run_factory import create_run, load_config, load_run_config, parse_config


@pytest.fixture
def minimal_document() -> dict:
    """The smallest valid run description."""
    return {"spacetime": {"type": "minkowski_torus"}, "grid": {"points": 16}}


def test_minimal_document_gets_defaults(minimal_document):
    # Act
    config = parse_config(minimal_document)

    # Assert
    assert config.grid.points == [16]
    assert config.grid.lengths == [1.0]
    assert config.flow.cfl_safety == 0.2
    assert config.flow.tol_residual == 1e-8
    assert config.flow.integrator == "rk2"
    assert config.f.type == "constant" and config.f.params == {"c": 0.0}
    assert config.initial.type == "constant"
    assert config.barriers.lower is None
    assert config.output.directory == "runs/default"
    assert config.meta.command == "evolve"


def test_odd_point_count_names_the_field(minimal_document):
    minimal_document["grid"]["points"] = 7
    with pytest.raises(ConfigError) as err:
        parse_config(minimal_document)
    assert err.value.paths() == ["grid.points"]


def test_initial_graph_outside_power_law_domain(minimal_document):
    # Arrange
    minimal_document["spacetime"] = {"type": "flrw_torus", "params": {"scale": "power", "p": 0.5}}
    minimal_document["initial"] = {"type": "constant", "params": {"c": -1.0}}

    # Act
    with pytest.raises(ConfigError) as err:
        parse_config(minimal_document)

    # Assert
    assert err.value.paths() == ["initial.params"]
    assert "temporal domain" in str(err.value)


def test_lower_barrier_is_domain_checked_too(minimal_document):
    minimal_document["spacetime"] = {"type": "flrw_torus", "params": {"scale": "power", "p": 1.0}}
    minimal_document["initial"] = {"type": "constant", "params": {"c": 1.0}}
    minimal_document["barriers"] = {"lower": {"type": "constant", "params": {"c": 0.0}}}
    with pytest.raises(ConfigError) as err:
        parse_config(minimal_document)
    assert err.value.paths() == ["barriers.lower.params"]


def test_unknown_model_alone_raises_unknown_model(minimal_document):
    minimal_document["spacetime"]["type"] = "kerr"
    with pytest.raises(UnknownModel) as err:
        parse_config(minimal_document)
    assert err.value.paths() == ["spacetime.type"]


def test_diagnostics_are_aggregated(minimal_document):
    # Arrange
    minimal_document["spacetime"]["type"] = "kerr"
    minimal_document["grid"]["points"] = 7
    minimal_document["f"] = {"type": "constant", "params": {"c": 0.1, "k": 2}}
    minimal_document["refine"] = {"levels": [16, 9]}

    # Act
    with pytest.raises(ConfigError) as err:
        parse_config(minimal_document)

    # Assert
    assert type(err.value) is ConfigError
    assert set(err.value.paths()) == {"spacetime.type", "grid.points", "refine.levels"}


def test_unknown_parameters_are_reported(minimal_document):
    minimal_document["f"] = {"type": "constant", "params": {"c": 0.1, "k": 2}}
    minimal_document["initial"] = {"type": "cosine", "params": {"amplitude": 0.1, "freq": 3}}
    with pytest.raises(ConfigError) as err:
        parse_config(minimal_document)
    assert set(err.value.paths()) == {"f.params.k", "initial.params.freq"}


@pytest.mark.parametrize(
    "key, value, path",
    [
        ("bogus", 1, "bogus"),
        ("flow", {"cfl": 0.5}, "flow.cfl"),
        ("flow", {"cfl_safety": 2.0}, "flow.cfl_safety"),
        ("f", {"type": "quadratic"}, "f.type"),
    ],
)
def test_schema_errors_carry_dotted_paths(minimal_document, key, value, path):
    minimal_document[key] = value
    with pytest.raises(ConfigError) as err:
        parse_config(minimal_document)
    assert path in err.value.paths()


def test_bump_amplitude_cap(minimal_document):
    minimal_document["spacetime"] = {"type": "conformal_bump", "params": {"A": 0.9}}
    with pytest.raises(ConfigError) as err:
        parse_config(minimal_document)
    assert err.value.paths() == ["spacetime.params.A"]


def test_sampled_table_of_wrong_size(tmp_path, minimal_document):
    # Arrange
    np.savetxt(tmp_path / "f.csv", np.zeros(8), delimiter=",")
    minimal_document["f"] = {"type": "sampled_grid", "path": str(tmp_path / "f.csv")}

    # Act / Assert
    with pytest.raises(GridMismatch):
        parse_config(minimal_document)


def test_relative_table_paths_resolve_against_the_config(tmp_path):
    # Arrange
    table = 0.1 * np.cos(2 * np.pi * np.arange(16) / 16)
    np.savetxt(tmp_path / "f.csv", table, delimiter=",")
    (tmp_path / "run.yaml").write_text(
        "spacetime: {type: minkowski_torus}\n"
        "grid: {points: 16}\n"
        "f: {type: sampled_grid, path: f.csv}\n"
    )

    # Act
    config = load_run_config(tmp_path / "run.yaml")
    setup = create_run(config)

    # Assert
    assert config.f.path == str((tmp_path / "f.csv").resolve())
    np.testing.assert_allclose(setup.f.table, table)


def test_load_config_failures(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    (tmp_path / "broken.yaml").write_text("grid: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "broken.yaml")
    (tmp_path / "empty.yaml").write_text("")
    assert load_config(tmp_path / "empty.yaml") == {}
    with pytest.raises(ConfigError) as err:
        parse_config({})
    assert set(err.value.paths()) == {"spacetime", "grid"}


def test_create_run_builds_every_part():
    # Arrange
    config = parse_config({
        "spacetime": {"type": "conformal_bump", "params": {"A": 0.2}},
        "grid": {"dim": 2, "points": 16, "lengths": 2.0},
        "f": {"type": "cosine_spatial", "params": {"c": 0.0, "eps": 0.1}},
        "initial": {"type": "cosine", "params": {"amplitude": 0.02, "waves": [1, 2]}},
        "barriers": {"lower": {"type": "constant", "params": {"c": -0.5}}},
        "flow": {"record_every": 50},
        "output": {"record_every": 7},
    })

    # Act
    setup = create_run(config)

    # Assert
    assert setup.grid.points == (16, 16)
    assert setup.grid.lengths == (2.0, 2.0)
    assert setup.model.lengths == (2.0, 2.0)
    assert setup.f.params["waves"] == (1, 1)
    assert setup.initial.params["waves"] == (1, 2)
    assert setup.lower_barrier.kind == "constant"
    assert setup.flow.record_every == 7
    assert setup.initial.sample(setup.grid).shape == (16, 16)

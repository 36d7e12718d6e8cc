"""
Factory for building runs from configuration documents.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import ValidationError

from app.ambient.models import CONFORMAL_BUMP, MODEL_REGISTRY, SpacetimeModel, create_model
from app.errors import ConfigError, GridMismatch, UnknownModel
from app.factory.config_schema import ProfileSection, RunConfig
from app.flow.curvature import PrescribedCurvature
from app.flow.evolution import FlowConfig
from app.geometry.grid import MIN_POINTS, GridSpec
from app.geometry.profiles import HeightProfile

PathLike = Union[str, Path]


@dataclass(frozen=True)
class RunSetup:
    """Everything a pipeline needs, built once from a validated RunConfig."""
    config: RunConfig
    model: SpacetimeModel
    grid: GridSpec
    f: PrescribedCurvature
    initial: HeightProfile
    lower_barrier: Optional[HeightProfile]
    flow: FlowConfig


def load_config(path: PathLike) -> dict:
    """Loads a YAML configuration file."""
    try:
        with open(path, "r") as f:
            document = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError([("", f"cannot read configuration '{path}': {e}")]) from e
    except yaml.YAMLError as e:
        raise ConfigError([("", f"configuration '{path}' is not valid YAML: {e}")]) from e
    return document if document is not None else {}


def _load_table(path: str, base_dir: Optional[Path], field_path: str) -> np.ndarray:
    resolved = Path(path)
    if not resolved.is_absolute() and base_dir is not None:
        resolved = base_dir / resolved
    try:
        if resolved.suffix == ".npy":
            table = np.load(resolved)
        else:
            table = np.loadtxt(resolved, delimiter=",")
    except (OSError, ValueError) as e:
        raise ConfigError([(field_path, f"cannot load table '{resolved}': {e}")]) from e
    return np.atleast_1d(np.asarray(table, dtype=float))


def _param(params: Dict[str, Any], key: str, field_path: str, default: Any = None) -> Any:
    if key in params:
        return params[key]
    if default is None:
        raise ConfigError([(f"{field_path}.{key}", "required parameter is missing")])
    return default


def _unknown_params(params: Dict[str, Any], allowed: Tuple[str, ...], field_path: str) -> None:
    extra = sorted(set(params) - set(allowed))
    if extra:
        raise ConfigError([(f"{field_path}.{key}", "unknown parameter") for key in extra])


def build_grid(config: RunConfig) -> GridSpec:
    section = config.grid
    return GridSpec.create(section.dim, section.expanded("points"), section.expanded("lengths"))


def build_model(config: RunConfig, grid: GridSpec) -> SpacetimeModel:
    """Creates the spacetime model; bump periods default to the grid periods."""
    params = dict(config.spacetime.params)
    if config.spacetime.type == CONFORMAL_BUMP:
        params.setdefault("lengths", list(grid.lengths))
    return create_model(config.spacetime.type, params, grid.dim)


def build_curvature(config: RunConfig, grid: GridSpec, base_dir: Optional[Path] = None) -> PrescribedCurvature:
    """
    Raises:
        ConfigError: for missing or unknown parameters.
        GridMismatch: if a sampled table does not match the grid.
    """
    section = config.f
    params = section.params
    if section.type == "constant":
        _unknown_params(params, ("c",), "f.params")
        return PrescribedCurvature.constant(_param(params, "c", "f.params", 0.0))
    if section.type == "affine_time":
        _unknown_params(params, ("alpha", "beta"), "f.params")
        return PrescribedCurvature.affine(_param(params, "alpha", "f.params"), _param(params, "beta", "f.params"))
    if section.type == "cosine_spatial":
        _unknown_params(params, ("c", "eps", "waves", "lengths"), "f.params")
        return PrescribedCurvature.cosine(
            c=_param(params, "c", "f.params", 0.0),
            eps=_param(params, "eps", "f.params"),
            waves=_as_tuple(params.get("waves", 1), grid.dim),
            lengths=_as_tuple(params.get("lengths", list(grid.lengths)), grid.dim),
        )
    if section.path is None:
        raise ConfigError([("f.path", "sampled_grid curvature needs a table path")])
    table = _load_table(section.path, base_dir, "f.path")
    if table.shape != grid.points:
        raise GridMismatch(f"f table '{section.path}' has shape {table.shape}, grid expects {grid.points}")
    return PrescribedCurvature.sampled(table, grid)


def build_profile(
    section: ProfileSection,
    grid: GridSpec,
    field_path: str,
    base_dir: Optional[Path] = None,
) -> HeightProfile:
    params = section.params
    if section.type == "constant":
        _unknown_params(params, ("c",), f"{field_path}.params")
        return HeightProfile.constant(_param(params, "c", f"{field_path}.params", 0.0))
    if section.type == "cosine":
        _unknown_params(params, ("c", "amplitude", "waves", "lengths", "phase"), f"{field_path}.params")
        lengths = params.get("lengths")
        return HeightProfile.cosine(
            offset=_param(params, "c", f"{field_path}.params", 0.0),
            amplitude=_param(params, "amplitude", f"{field_path}.params"),
            waves=_as_tuple(params.get("waves", 1), grid.dim),
            lengths=_as_tuple(lengths, grid.dim) if lengths is not None else None,
            phase=params.get("phase", 0.0),
        )
    if section.path is None:
        raise ConfigError([(f"{field_path}.path", "sampled profiles need a table path")])
    table = _load_table(section.path, base_dir, f"{field_path}.path")
    if table.shape != grid.points:
        raise GridMismatch(f"{field_path} table '{section.path}' has shape {table.shape}, grid expects {grid.points}")
    return HeightProfile.sampled(table, grid)


def _as_tuple(value: Any, n: int) -> Tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,) * n


def build_flow_config(config: RunConfig) -> FlowConfig:
    """output.record_every, when given, overrides flow.record_every."""
    if config.output.record_every is None:
        return config.flow
    return config.flow.model_copy(update={"record_every": config.output.record_every})


def _resolve_path(section, base_dir: Optional[Path]):
    if section is None or section.path is None or base_dir is None or Path(section.path).is_absolute():
        return section
    return section.model_copy(update={"path": str((base_dir / section.path).resolve())})


def _validation_diagnostics(error: ValidationError) -> List[Tuple[str, str]]:
    return [(".".join(str(part) for part in item["loc"]), item["msg"]) for item in error.errors()]


def parse_config(document: Any, base_dir: Optional[PathLike] = None) -> RunConfig:
    """
    Validates a configuration document and fills in defaults.

    Schema errors are reported together; cross-section checks (model registry,
    grid constraints, model parameters, temporal domain of the initial and
    barrier graphs, refinement levels) are aggregated into a second report.

    Raises:
        UnknownModel: if the spacetime type is the only problem.
        ConfigError: with (field path, message) diagnostics otherwise.
        GridMismatch: if a sampled table does not match the grid.
    """
    if not isinstance(document, dict):
        raise ConfigError([("", "the configuration document must be a mapping")])
    base = Path(base_dir) if base_dir is not None else None
    try:
        config = RunConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigError(_validation_diagnostics(e)) from e

    config = config.model_copy(update={
        "f": _resolve_path(config.f, base),
        "initial": _resolve_path(config.initial, base),
        "barriers": config.barriers.model_copy(update={"lower": _resolve_path(config.barriers.lower, base)}),
    })

    diagnostics: List[Tuple[str, str]] = []
    known_model = config.spacetime.type in MODEL_REGISTRY
    if not known_model:
        diagnostics.append(UnknownModel(config.spacetime.type, sorted(MODEL_REGISTRY)).diagnostics[0])

    grid = model = None
    try:
        grid = build_grid(config)
    except ConfigError as e:
        diagnostics.extend(e.diagnostics)

    if grid is not None and known_model:
        try:
            model = build_model(config, grid)
        except ConfigError as e:
            diagnostics.extend(e.diagnostics)

    if grid is not None:
        try:
            build_curvature(config, grid)
        except ConfigError as e:
            diagnostics.extend(e.diagnostics)
        graphs = [("initial", config.initial)]
        if config.barriers.lower is not None:
            graphs.append(("barriers.lower", config.barriers.lower))
        for field_path, section in graphs:
            try:
                profile = build_profile(section, grid, field_path)
            except ConfigError as e:
                diagnostics.extend(e.diagnostics)
                continue
            if model is not None:
                diagnostics.extend(_domain_diagnostics(model, profile, grid, field_path))

    for level in config.refine.levels or []:
        if level < MIN_POINTS or level % 2 != 0:
            diagnostics.append(("refine.levels", f"levels must be even and >= {MIN_POINTS}, got {level}"))

    if diagnostics:
        if not known_model and len(diagnostics) == 1:
            raise UnknownModel(config.spacetime.type, sorted(MODEL_REGISTRY))
        raise ConfigError(diagnostics)
    return config


def _domain_diagnostics(
    model: SpacetimeModel,
    profile: HeightProfile,
    grid: GridSpec,
    field_path: str,
) -> List[Tuple[str, str]]:
    lower = model.lower_time_bound()
    if lower is None:
        return []
    lowest = float(np.min(profile.sample(grid)))
    if lowest < lower:
        return [(f"{field_path}.params", f"graph reaches x0 = {lowest:.6g}, below the temporal domain x0 >= {lower:.6g}")]
    return []


def load_run_config(path: PathLike) -> RunConfig:
    """Loads and validates a configuration file; relative table paths resolve against its directory."""
    logging.info(f"Loading run configuration from {path}...")
    return parse_config(load_config(path), Path(path).parent)


def create_run(config: RunConfig) -> RunSetup:
    """Builds model, grid, curvature, graphs and flow settings of a validated config."""
    grid = build_grid(config)
    model = build_model(config, grid)
    lower = config.barriers.lower
    setup = RunSetup(
        config=config,
        model=model,
        grid=grid,
        f=build_curvature(config, grid),
        initial=build_profile(config.initial, grid, "initial"),
        lower_barrier=build_profile(lower, grid, "barriers.lower") if lower is not None else None,
        flow=build_flow_config(config),
    )
    logging.info(f"Built run: {model!r} on grid {grid.points}, f={setup.f.kind}, initial={setup.initial.kind}")
    return setup

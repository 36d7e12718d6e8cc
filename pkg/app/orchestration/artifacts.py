"""
Writers for the on-disk artifacts of a run. All files live under the run's
output directory; numbers are written with 17 significant digits.
"""
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np

from app.analysis.monitor import SERIES_COLUMNS, MonitorRecord
from app.errors import ArtifactError
from app.geometry.grid import GraphState, node_coordinates
from app.geometry.hypersurface import GeometryFields

NUMBER_FORMAT = "%.17g"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def snapshot_columns(dim: int) -> List[str]:
    coordinates = ["x"] if dim == 1 else [f"x{k + 1}" for k in range(dim)]
    kappas = ["kappa"] if dim == 1 else [f"kappa{k + 1}" for k in range(dim)]
    return coordinates + ["u", "H", "vtilde"] + kappas


class ArtifactWriter:
    """Owns one output directory."""

    def __init__(self, directory: str):
        self.directory = Path(directory)

    def path(self, name: str) -> Path:
        return self.directory / name

    def prepare(self) -> None:
        """
        Raises:
            ArtifactError: if the directory cannot be created or written to.
        """
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            marker = self.directory / ".write_check"
            marker.write_text("")
            marker.unlink()
        except OSError as e:
            raise ArtifactError(f"IoError: output directory '{self.directory}' is not writable: {e}") from e

    @contextmanager
    def log_to_file(self, name: str = "run.log") -> Iterator[logging.Handler]:
        """Mirrors root logging into a file of the output directory for the duration of the block."""
        handler = logging.FileHandler(self.path(name), mode="w")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root = logging.getLogger()
        root.addHandler(handler)
        try:
            yield handler
        finally:
            root.removeHandler(handler)
            handler.close()

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        target = self.path(name)
        try:
            target.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable))
        except OSError as e:
            raise ArtifactError(f"IoError: cannot write '{target}': {e}") from e
        logging.info(f"Wrote {target}")
        return target

    def write_table(self, name: str, rows: np.ndarray, columns: Sequence[str]) -> Path:
        target = self.path(name)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            table = np.asarray(rows, dtype=float).reshape((-1, len(columns)))
            np.savetxt(target, table, fmt=NUMBER_FORMAT, delimiter=",", header=",".join(columns), comments="")
        except OSError as e:
            raise ArtifactError(f"IoError: cannot write '{target}': {e}") from e
        return target

    def write_series(self, records: Sequence[MonitorRecord], name: str = "series.csv") -> Path:
        return self.write_table(name, np.array([record.as_row() for record in records]), SERIES_COLUMNS)

    def write_snapshot(self, state: GraphState, fields: Optional[GeometryFields]) -> Path:
        """snapshots/step_K.csv with one row per node; geometry columns are NaN if it is unavailable."""
        grid = state.grid
        coords = node_coordinates(grid).reshape((grid.dim, -1))
        u = state.u.reshape(-1)
        if fields is not None:
            H = fields.H.reshape(-1)
            vtilde = fields.vtilde.reshape(-1)
            kappa = fields.kappa.reshape((grid.dim, -1))
        else:
            H = vtilde = np.full(u.shape, np.nan)
            kappa = np.full((grid.dim, u.size), np.nan)
        table = np.column_stack([*coords, u, H, vtilde, *kappa])
        return self.write_table(f"snapshots/step_{state.step}.csv", table, snapshot_columns(grid.dim))


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "model_dump"):
        return value.model_dump()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")

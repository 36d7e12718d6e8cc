"""
Closed-form and tabulated height profiles u(x) for initial and barrier graphs.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from app.errors import GridMismatch, NoReference
from app.geometry.grid import GraphState, GridSpec, node_coordinates

CONSTANT = "constant"
COSINE = "cosine"
SAMPLED = "sampled"

PROFILE_KINDS = (CONSTANT, COSINE, SAMPLED)


@dataclass(frozen=True, eq=False)
class HeightProfile:
    """
    u = c                                          (constant)
    u = offset + amplitude * prod_k cos(2 pi m_k x_k / L_k + phase)   (cosine)
    u = U(xi), U a table on one fixed grid          (sampled)

    Cosine profiles without explicit periods use the periods of the grid they
    are sampled on, so the same profile can be sampled at every refinement level.
    """
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    table: Optional[np.ndarray] = None
    grid: Optional[GridSpec] = None

    @classmethod
    def constant(cls, c: float) -> "HeightProfile":
        return cls(kind=CONSTANT, params={"c": float(c)})

    @classmethod
    def cosine(
        cls,
        offset: float,
        amplitude: float,
        waves: Sequence[int] = (1,),
        lengths: Optional[Sequence[float]] = None,
        phase: float = 0.0,
    ) -> "HeightProfile":
        return cls(
            kind=COSINE,
            params={
                "offset": float(offset),
                "amplitude": float(amplitude),
                "waves": tuple(int(m) for m in waves),
                "lengths": tuple(float(L) for L in lengths) if lengths is not None else None,
                "phase": float(phase),
            },
        )

    @classmethod
    def sampled(cls, table: np.ndarray, grid: GridSpec) -> "HeightProfile":
        table = np.asarray(table, dtype=float)
        if table.shape != grid.points:
            raise GridMismatch(f"sampled height table has shape {table.shape}, grid expects {grid.points}")
        return cls(kind=SAMPLED, table=table, grid=grid)

    def _wavenumbers(self, grid: GridSpec) -> Tuple[float, ...]:
        waves = self.params["waves"]
        lengths = self.params["lengths"] or grid.lengths
        numbers = []
        for k in range(grid.dim):
            m = waves[k] if k < len(waves) else waves[-1]
            L = lengths[k] if k < len(lengths) else lengths[-1]
            numbers.append(2.0 * math.pi * m / L)
        return tuple(numbers)

    def sample(self, grid: GridSpec) -> np.ndarray:
        """Values of u at every node of the grid."""
        if self.kind == CONSTANT:
            return np.full(grid.points, self.params["c"])
        if self.kind == SAMPLED:
            if grid != self.grid:
                raise GridMismatch(f"sampled height table lives on {self.grid}, not on {grid}")
            return self.table.copy()
        coords = node_coordinates(grid)
        product = np.ones(grid.points)
        for k, wavenumber in enumerate(self._wavenumbers(grid)):
            product = product * np.cos(wavenumber * coords[k] + self.params["phase"])
        return self.params["offset"] + self.params["amplitude"] * product

    def state(self, grid: GridSpec, time: float = 0.0) -> GraphState:
        return GraphState(grid=grid, u=self.sample(grid), time=time)

    def derivatives_1d(self, grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
        """
        Exact u' and u'' at the nodes of a one dimensional grid.

        Raises:
            NoReference: for sampled profiles or n != 1.
        """
        if grid.dim != 1 or self.kind == SAMPLED:
            raise NoReference("exact derivatives are only available for closed-form profiles in one dimension")
        if self.kind == CONSTANT:
            zeros = np.zeros(grid.points)
            return zeros, zeros.copy()
        k = self._wavenumbers(grid)[0]
        arg = k * node_coordinates(grid)[0] + self.params["phase"]
        amplitude = self.params["amplitude"]
        return -amplitude * k * np.sin(arg), -amplitude * k * k * np.cos(arg)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == SAMPLED:
            return {"type": SAMPLED, "points": list(self.grid.points)}
        params = {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()}
        return {"type": self.kind, "params": params}

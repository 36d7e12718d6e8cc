"""
Prescribed mean curvature f(x0, x): the target of the flow.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from app.errors import GridMismatch
from app.geometry.grid import GraphState, GridSpec, node_coordinates

CONSTANT = "constant"
AFFINE_TIME = "affine_time"
COSINE_SPATIAL = "cosine_spatial"
SAMPLED_GRID = "sampled_grid"

CURVATURE_KINDS = (CONSTANT, AFFINE_TIME, COSINE_SPATIAL, SAMPLED_GRID)


@dataclass(frozen=True, eq=False)
class PrescribedCurvature:
    """
    One of four closed forms or tables:

    - constant:        f = c
    - affine_time:     f = alpha + beta * x0
    - cosine_spatial:  f = c + eps * prod_k cos(2 pi m_k x_k / L_k)
    - sampled_grid:    f(x0, x) = F(x), F a table on the run's grid
    """
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    table: Optional[np.ndarray] = None
    grid: Optional[GridSpec] = None

    @classmethod
    def constant(cls, c: float) -> "PrescribedCurvature":
        return cls(kind=CONSTANT, params={"c": float(c)})

    @classmethod
    def affine(cls, alpha: float, beta: float) -> "PrescribedCurvature":
        return cls(kind=AFFINE_TIME, params={"alpha": float(alpha), "beta": float(beta)})

    @classmethod
    def cosine(
        cls,
        c: float,
        eps: float,
        waves: Sequence[int] = (1,),
        lengths: Sequence[float] = (1.0,),
    ) -> "PrescribedCurvature":
        return cls(
            kind=COSINE_SPATIAL,
            params={"c": float(c), "eps": float(eps), "waves": tuple(waves), "lengths": tuple(lengths)},
        )

    @classmethod
    def sampled(cls, table: np.ndarray, grid: GridSpec) -> "PrescribedCurvature":
        table = np.asarray(table, dtype=float)
        if table.shape != grid.points:
            raise GridMismatch(f"sampled curvature table has shape {table.shape}, grid expects {grid.points}")
        return cls(kind=SAMPLED_GRID, params={}, table=table, grid=grid)

    @property
    def has_closed_form(self) -> bool:
        return self.kind != SAMPLED_GRID

    def constant_value(self) -> Optional[float]:
        """The value of f when it is the same at every spacetime point, else None."""
        if self.kind == CONSTANT:
            return self.params["c"]
        if self.kind == AFFINE_TIME and self.params["beta"] == 0.0:
            return self.params["alpha"]
        if self.kind == COSINE_SPATIAL and self.params["eps"] == 0.0:
            return self.params["c"]
        return None

    def _cosine(self, x: np.ndarray) -> np.ndarray:
        waves: Tuple[int, ...] = self.params["waves"]
        lengths: Tuple[float, ...] = self.params["lengths"]
        product = np.ones(np.shape(x)[1:])
        for k in range(np.shape(x)[0]):
            m = waves[k] if k < len(waves) else waves[-1]
            L = lengths[k] if k < len(lengths) else lengths[-1]
            product = product * np.cos(2.0 * math.pi * m * x[k] / L)
        return self.params["c"] + self.params["eps"] * product

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.kind, "params": {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()}}


def eval_f(
    f: PrescribedCurvature,
    x0: float,
    x: Optional[Sequence[float]] = None,
    node: Optional[Tuple[int, ...]] = None,
    grid: Optional[GridSpec] = None,
) -> float:
    """
    Evaluates f at a single spacetime point.

    Raises:
        GridMismatch: sampled tables need a node index on their own grid.
    """
    if f.kind == SAMPLED_GRID:
        if grid is not None and grid != f.grid:
            raise GridMismatch(f"sampled curvature lives on {f.grid}, not on {grid}")
        if node is None:
            raise GridMismatch("a sampled curvature table can only be evaluated at a node index")
        return float(f.table[tuple(node)])
    if f.kind == CONSTANT:
        return f.params["c"]
    if f.kind == AFFINE_TIME:
        return f.params["alpha"] + f.params["beta"] * float(x0)
    point = np.asarray(x if x is not None else [0.0], dtype=float)
    return float(f._cosine(point.reshape((-1,))))


def evaluate_on_graph(f: PrescribedCurvature, state: GraphState) -> np.ndarray:
    """f(u(xi), xi) at every node of the graph."""
    u = state.u
    if f.kind == CONSTANT:
        return np.full(u.shape, f.params["c"])
    if f.kind == AFFINE_TIME:
        return f.params["alpha"] + f.params["beta"] * u
    if f.kind == COSINE_SPATIAL:
        return f._cosine(node_coordinates(state.grid))
    if state.grid != f.grid:
        raise GridMismatch(f"sampled curvature lives on {f.grid}, the flow state on {state.grid}")
    return f.table

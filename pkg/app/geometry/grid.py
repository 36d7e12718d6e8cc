"""
Periodic uniform grids on the flat torus and second order central difference stencils.

Fields are numpy arrays whose trailing axes are the grid axes; any leading axes
are component axes (a vector field has shape (n, N_1, ..., N_n)). The stencils
act on the trailing grid axes only, so they apply to scalar, vector and matrix
fields alike. Index arithmetic wraps modulo N_k.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

from app.errors import ConfigError, GridMismatch

MIN_POINTS = 8


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with N_k nodes on a period L_k in each direction."""
    dim: int
    points: Tuple[int, ...]
    lengths: Tuple[float, ...]

    def __post_init__(self):
        problems = []
        if self.dim not in (1, 2):
            problems.append(("grid.dim", f"must be 1 or 2, got {self.dim}"))
        if len(self.points) != self.dim:
            problems.append(("grid.points", f"expected {self.dim} entries, got {len(self.points)}"))
        if len(self.lengths) != self.dim:
            problems.append(("grid.lengths", f"expected {self.dim} entries, got {len(self.lengths)}"))
        for count in self.points:
            if count < MIN_POINTS or count % 2 != 0:
                problems.append(("grid.points", f"node counts must be even and >= {MIN_POINTS}, got {count}"))
        for length in self.lengths:
            if not length > 0:
                problems.append(("grid.lengths", f"periods must be positive, got {length}"))
        if problems:
            raise ConfigError(problems)

    @classmethod
    def create(cls, dim: int, points: Sequence[int], lengths: Sequence[float]) -> "GridSpec":
        return cls(dim=int(dim), points=tuple(int(p) for p in points), lengths=tuple(float(L) for L in lengths))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.points

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.lengths, self.points))

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    def coordinates(self) -> np.ndarray:
        """Node coordinates x_k = i * h_k, shape (n, *points)."""
        axes = [np.arange(N) * h for N, h in zip(self.points, self.spacing)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def refined(self, factor: int = 2) -> "GridSpec":
        return replace(self, points=tuple(N * factor for N in self.points))

    def with_points(self, count: int) -> "GridSpec":
        return replace(self, points=(int(count),) * self.dim)

    def check_field(self, values: np.ndarray, name: str = "field") -> None:
        if tuple(values.shape[-self.dim:]) != self.points:
            raise GridMismatch(f"{name} has grid shape {values.shape[-self.dim:]}, expected {self.points}")


@dataclass(frozen=True, eq=False)
class GraphState:
    """Height function u(t, .) of the graph M(t) = graph u over the torus."""
    grid: GridSpec
    u: np.ndarray
    time: float = 0.0
    step: int = field(default=0)

    def __post_init__(self):
        if tuple(self.u.shape) != self.grid.points:
            raise GridMismatch(f"height field has shape {self.u.shape}, grid expects {self.grid.points}")

    def advance(self, u: np.ndarray, dt: float) -> "GraphState":
        return GraphState(grid=self.grid, u=u, time=self.time + dt, step=self.step + 1)


@lru_cache(maxsize=32)
def node_coordinates(grid: GridSpec) -> np.ndarray:
    """Cached, read-only node coordinates of a grid."""
    coords = grid.coordinates()
    coords.setflags(write=False)
    return coords


def _grid_axis(grid: GridSpec, values: np.ndarray, k: int) -> int:
    return values.ndim - grid.dim + k


@lru_cache(maxsize=64)
def _neighbours(count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Index arrays of the right (i + 1) and left (i - 1) neighbours modulo count."""
    nodes = np.arange(count)
    right, left = (nodes + 1) % count, (nodes - 1) % count
    right.setflags(write=False)
    left.setflags(write=False)
    return right, left


def _shifted(values: np.ndarray, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    """values[i + 1] and values[i - 1] along axis, with periodic wrap."""
    right, left = _neighbours(values.shape[axis])
    return np.take(values, right, axis=axis), np.take(values, left, axis=axis)


def partial_first(grid: GridSpec, values: np.ndarray, k: int) -> np.ndarray:
    """(f[i+1] - f[i-1]) / (2 h_k) with periodic wrap."""
    right, left = _shifted(values, _grid_axis(grid, values, k))
    return (right - left) / (2.0 * grid.spacing[k])


def partial_second(grid: GridSpec, values: np.ndarray, k: int, l: int) -> np.ndarray:
    """Three point second difference for k == l, four point cross stencil otherwise."""
    if k == l:
        right, left = _shifted(values, _grid_axis(grid, values, k))
        h = grid.spacing[k]
        return (right - 2.0 * values + left) / (h * h)
    if k > l:
        k, l = l, k
    ak = _grid_axis(grid, values, k)
    al = _grid_axis(grid, values, l)
    hk, hl = grid.spacing[k], grid.spacing[l]
    plus, minus = _shifted(values, ak)
    plus_right, plus_left = _shifted(plus, al)
    minus_right, minus_left = _shifted(minus, al)
    cross = plus_right - plus_left - minus_right + minus_left
    return cross / (4.0 * hk * hl)


def gradient(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Stacks partial_first over all directions, shape (n, *values.shape)."""
    return np.stack([partial_first(grid, values, k) for k in range(grid.dim)])


def hessian(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Coordinate Hessian of a scalar field, shape (n, n, *points)."""
    n = grid.dim
    hess = np.empty((n, n) + values.shape)
    for k in range(n):
        for l in range(k, n):
            hess[k, l] = partial_second(grid, values, k, l)
            hess[l, k] = hess[k, l]
    return hess

"""
Registry of the built-in product spacetimes.

Every model has a metric of the Gaussian form

    ds^2 = e^{2 psi} ( -dx0^2 + sigma_ij(x0, x) dx^i dx^j )

on R x T^n, with psi and sigma given in closed form together with all the
derivatives the rest of the package needs. sigma never depends on the spatial
coordinates in this registry, so the Christoffel symbols of sigma vanish.
"""
import logging
import math
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.errors import ConfigError, DomainError, UnknownModel

ArrayLike = Any

MINKOWSKI = "minkowski_torus"
FLRW = "flrw_torus"
CONFORMAL_BUMP = "conformal_bump"

SCALE_FACTORS = ("gaussian", "power", "exponential", "cosh")

# |A| <= 0.5 keeps e^{2 psi} well conditioned
MAX_BUMP_AMPLITUDE = 0.5
# power law models stay away from the big-bang singularity at x0 = 0
POWER_DOMAIN_FACTOR = 0.05


class ScaleFactor:
    """Scale factor a(x0) of a spatially flat FLRW torus, sigma_ij = a^2 delta_ij."""

    def __init__(self, kind: str, p: float = 1.0, H0: float = 1.0):
        if kind not in SCALE_FACTORS:
            raise ConfigError([("spacetime.params.scale", f"unknown scale factor '{kind}'")])
        self.kind = kind
        self.p = float(p)
        self.H0 = float(H0)

    def lower_bound(self) -> Optional[float]:
        """Smallest admissible x0 for configuration validation (None = unbounded)."""
        if self.kind == "power":
            return POWER_DOMAIN_FACTOR * self.p
        return None

    def check_domain(self, x0: ArrayLike) -> None:
        if self.kind == "power" and np.any(np.asarray(x0) <= 0.0):
            raise DomainError(
                f"power-law scale factor is only defined for x0 > 0, got min x0 = {np.min(x0):.6g}"
            )

    def value(self, x0: ArrayLike) -> np.ndarray:
        t = np.asarray(x0, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * t * t)
        if self.kind == "power":
            return t ** self.p
        if self.kind == "exponential":
            return np.exp(self.H0 * t)
        return np.cosh(t)

    def derivative(self, x0: ArrayLike) -> np.ndarray:
        t = np.asarray(x0, dtype=float)
        if self.kind == "gaussian":
            return -t * np.exp(-0.5 * t * t)
        if self.kind == "power":
            return self.p * t ** (self.p - 1.0)
        if self.kind == "exponential":
            return self.H0 * np.exp(self.H0 * t)
        return np.sinh(t)

    def hubble_rate(self, x0: ArrayLike) -> np.ndarray:
        """a'/a in closed form."""
        t = np.asarray(x0, dtype=float)
        if self.kind == "gaussian":
            return -t
        if self.kind == "power":
            return self.p / t
        if self.kind == "exponential":
            return np.full_like(t, self.H0)
        return np.tanh(t)

    def to_dict(self) -> Dict[str, Any]:
        return {"scale": self.kind, "p": self.p, "H0": self.H0}


def _identity(n: int, shape: Tuple[int, ...]) -> np.ndarray:
    eye = np.eye(n).reshape((n, n) + (1,) * len(shape))
    return np.broadcast_to(eye, (n, n) + shape)


class SpacetimeModel:
    """
    A named product Lorentzian metric with analytic coefficient functions.

    Evaluation methods accept a scalar or an array of time coordinates x0 of
    shape S and spatial coordinates x of shape (n, *S); scalar and matrix
    valued results carry the component axes in front: psi -> S,
    psi_grad -> (n, *S), sigma -> (n, n, *S).
    """

    def __init__(self, kind: str, params: Optional[Mapping[str, Any]] = None, spatial_dim: int = 1):
        if kind not in MODEL_REGISTRY:
            raise UnknownModel(kind, sorted(MODEL_REGISTRY))
        if spatial_dim not in (1, 2):
            raise ConfigError([("grid.dim", f"spatial dimension must be 1 or 2, got {spatial_dim}")])
        self.kind = kind
        self.params: Dict[str, Any] = dict(params or {})
        self.spatial_dim = spatial_dim
        self.scale: Optional[ScaleFactor] = None
        self.amplitude = 0.0
        self.waves: Tuple[int, ...] = (1,) * spatial_dim
        self.lengths: Tuple[float, ...] = (1.0,) * spatial_dim
        MODEL_REGISTRY[kind](self)

    def __repr__(self) -> str:
        return f"SpacetimeModel(kind={self.kind!r}, params={self.params!r}, spatial_dim={self.spatial_dim})"

    @property
    def is_homogeneous(self) -> bool:
        return self.kind in (MINKOWSKI, FLRW)

    def check_domain(self, x0: ArrayLike) -> None:
        if self.scale is not None:
            self.scale.check_domain(x0)

    def lower_time_bound(self) -> Optional[float]:
        return self.scale.lower_bound() if self.scale is not None else None

    # --- conformal factor -------------------------------------------------

    def _bump_factors(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        phases = np.stack([
            2.0 * math.pi * self.waves[k] * x[k] / self.lengths[k] for k in range(self.spatial_dim)
        ])
        return np.cos(phases), np.sin(phases)

    def psi(self, x0: ArrayLike, x: ArrayLike) -> np.ndarray:
        shape = np.broadcast(np.asarray(x0, dtype=float), np.asarray(x, dtype=float)[0]).shape
        if self.kind != CONFORMAL_BUMP:
            return np.zeros(shape)
        cos, _ = self._bump_factors(np.asarray(x, dtype=float))
        return np.broadcast_to(self.amplitude * np.prod(cos, axis=0), shape).copy()

    def psi_dot(self, x0: ArrayLike, x: ArrayLike) -> np.ndarray:
        shape = np.broadcast(np.asarray(x0, dtype=float), np.asarray(x, dtype=float)[0]).shape
        return np.zeros(shape)

    def psi_grad(self, x0: ArrayLike, x: ArrayLike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.spatial_dim
        shape = np.broadcast(np.asarray(x0, dtype=float), x[0]).shape
        if self.kind != CONFORMAL_BUMP:
            return np.zeros((n,) + shape)
        cos, sin = self._bump_factors(x)
        grad = []
        for k in range(n):
            factor = -self.amplitude * 2.0 * math.pi * self.waves[k] / self.lengths[k] * sin[k]
            for j in range(n):
                if j != k:
                    factor = factor * cos[j]
            grad.append(np.broadcast_to(factor, shape))
        return np.stack(grad)

    # --- spatial metric ---------------------------------------------------

    def _sigma_scalar(self, x0: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Returns (a^2, d(a^2)/dx0) for the isotropic spatial metric."""
        if self.scale is None:
            return np.ones_like(x0), np.zeros_like(x0)
        a = self.scale.value(x0)
        return a * a, 2.0 * a * self.scale.derivative(x0)

    def sigma(self, x0: ArrayLike, x: ArrayLike) -> np.ndarray:
        t, shape = self._time_field(x0, x)
        s, _ = self._sigma_scalar(t)
        return _identity(self.spatial_dim, shape) * s

    def sigma_dot(self, x0: ArrayLike, x: ArrayLike) -> np.ndarray:
        t, shape = self._time_field(x0, x)
        _, sd = self._sigma_scalar(t)
        return _identity(self.spatial_dim, shape) * sd

    def sigma_inv(self, x0: ArrayLike, x: ArrayLike) -> np.ndarray:
        t, shape = self._time_field(x0, x)
        s, _ = self._sigma_scalar(t)
        return _identity(self.spatial_dim, shape) / s

    def spatial_metric(self, x0: ArrayLike, x: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """sigma, d(sigma)/dx0 and sigma^{-1} from a single scale factor evaluation."""
        t, shape = self._time_field(x0, x)
        s, sd = self._sigma_scalar(t)
        eye = _identity(self.spatial_dim, shape)
        return eye * s, eye * sd, eye / s

    def _time_field(self, x0: ArrayLike, x: ArrayLike) -> Tuple[np.ndarray, Tuple[int, ...]]:
        t = np.asarray(x0, dtype=float)
        shape = np.broadcast(t, np.asarray(x, dtype=float)[0]).shape
        return np.broadcast_to(t, shape), shape

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.kind, "params": dict(self.params), "spatial_dim": self.spatial_dim}


def _setup_minkowski(model: SpacetimeModel) -> None:
    pass


def _setup_flrw(model: SpacetimeModel) -> None:
    params = model.params
    model.scale = ScaleFactor(
        kind=params.get("scale", "gaussian"),
        p=params.get("p", 1.0),
        H0=params.get("H0", 1.0),
    )


def _setup_bump(model: SpacetimeModel) -> None:
    params = model.params
    n = model.spatial_dim
    amplitude = float(params.get("A", 0.1))
    if abs(amplitude) > MAX_BUMP_AMPLITUDE:
        raise ConfigError([("spacetime.params.A", f"|A| must not exceed {MAX_BUMP_AMPLITUDE}, got {amplitude}")])
    model.amplitude = amplitude
    model.waves = _per_dimension(params.get("waves", 1), n, int)
    model.lengths = _per_dimension(params.get("lengths", 1.0), n, float)
    logging.debug(f"Conformal bump with A={amplitude}, waves={model.waves}, lengths={model.lengths}")


def _per_dimension(value: Any, n: int, cast: Callable) -> Tuple:
    if isinstance(value, Sequence) and not isinstance(value, str):
        if len(value) != n:
            raise ConfigError([("spacetime.params", f"expected {n} per-dimension values, got {len(value)}")])
        return tuple(cast(item) for item in value)
    return (cast(value),) * n


MODEL_REGISTRY: Dict[str, Callable[[SpacetimeModel], None]] = {
    MINKOWSKI: _setup_minkowski,
    FLRW: _setup_flrw,
    CONFORMAL_BUMP: _setup_bump,
}


def create_model(kind: str, params: Optional[Mapping[str, Any]] = None, spatial_dim: int = 1) -> SpacetimeModel:
    """Creates a registered model; raises UnknownModel for anything else."""
    return SpacetimeModel(kind, params, spatial_dim)

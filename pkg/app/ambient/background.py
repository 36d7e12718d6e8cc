"""
Background geometry of the product spacetimes: conformal factor, spatial
metric, Christoffel symbols and the second fundamental form of the
coordinate slices {x0 = const}.

All closed forms below were derived once from the Gaussian metric
e^{2 psi}(-dx0^2 + sigma_ij dx^i dx^j) with sigma independent of x:

    G^0_00 = psi'                G^k_00 = sigma^kl psi_l
    G^0_0i = psi_i               G^k_0j = psi' delta^k_j + 1/2 sigma^kl sigma'_lj
    G^0_ij = psi' sigma_ij + 1/2 sigma'_ij
    G^k_ij = delta^k_i psi_j + delta^k_j psi_i - sigma_ij sigma^kl psi_l

(' = d/dx0). The slice second fundamental form w.r.t. the past directed
normal is hbar_ij = e^{psi} (-1/2 sigma'_ij - psi' sigma_ij).
"""
from dataclasses import dataclass
from typing import Any

import numpy as np

from app.ambient.models import SpacetimeModel
from app.errors import UnsupportedModel

ArrayLike = Any


@dataclass(frozen=True, eq=False)
class BackgroundData:
    """Ambient coefficients at one point or node-wise over a field of points."""
    psi: np.ndarray
    psi_dot: np.ndarray
    psi_i: np.ndarray
    sigma: np.ndarray
    sigma_dot: np.ndarray
    sigma_inv: np.ndarray
    gamma0_00: np.ndarray
    gamma0_0i: np.ndarray
    gamma0_ij: np.ndarray
    hbar: np.ndarray


def eval_background(model: SpacetimeModel, x0: ArrayLike, x: ArrayLike) -> BackgroundData:
    """
    Evaluates psi, sigma, their derivatives and the G^0 Christoffel components.

    Raises:
        DomainError: if x0 lies outside the temporal domain of the model.
    """
    model.check_domain(x0)
    psi = model.psi(x0, x)
    psi_dot = model.psi_dot(x0, x)
    psi_i = model.psi_grad(x0, x)
    sigma, sigma_dot, sigma_inv = model.spatial_metric(x0, x)

    hbar = np.exp(psi) * (-0.5 * sigma_dot - psi_dot * sigma)
    # same expression as in the identity G^0_ij = -e^{-psi} hbar_ij, evaluated once
    gamma0_ij = -(np.exp(-psi) * hbar)

    return BackgroundData(
        psi=psi,
        psi_dot=psi_dot,
        psi_i=psi_i,
        sigma=sigma,
        sigma_dot=sigma_dot,
        sigma_inv=sigma_inv,
        gamma0_00=psi_dot,
        gamma0_0i=psi_i,
        gamma0_ij=gamma0_ij,
        hbar=hbar,
    )


def metric_components(model: SpacetimeModel, x0: ArrayLike, x: ArrayLike) -> np.ndarray:
    """Full ambient metric g_{alpha beta}, shape (n+1, n+1, *S)."""
    model.check_domain(x0)
    n = model.spatial_dim
    psi = model.psi(x0, x)
    conformal = np.exp(2.0 * psi)
    sigma = model.sigma(x0, x)
    metric = np.zeros((n + 1, n + 1) + psi.shape)
    metric[0, 0] = -conformal
    metric[1:, 1:] = conformal * sigma
    return metric


def christoffels_full(model: SpacetimeModel, x0: ArrayLike, x: ArrayLike) -> np.ndarray:
    """
    All ambient Christoffel symbols G^alpha_{beta gamma}, shape (n+1, n+1, n+1, *S).

    Symmetric in the two lower indices by construction.
    """
    bg = eval_background(model, x0, x)
    n = model.spatial_dim
    shape = bg.psi.shape
    eye = np.eye(n).reshape((n, n) + (1,) * len(shape))
    gamma = np.zeros((n + 1, n + 1, n + 1) + shape)

    gamma[0, 0, 0] = bg.gamma0_00
    gamma[0, 0, 1:] = bg.gamma0_0i
    gamma[0, 1:, 0] = bg.gamma0_0i
    gamma[0, 1:, 1:] = bg.gamma0_ij

    psi_up = np.einsum("kl...,l...->k...", bg.sigma_inv, bg.psi_i)
    gamma[1:, 0, 0] = psi_up
    mixed = bg.psi_dot * eye + 0.5 * np.einsum("kl...,lj...->kj...", bg.sigma_inv, bg.sigma_dot)
    gamma[1:, 0, 1:] = mixed
    gamma[1:, 1:, 0] = mixed
    # delta^k_i psi_j + delta^k_j psi_i - sigma_ij psi^k
    spatial = (
        np.einsum("ki,j...->kij...", np.eye(n), bg.psi_i)
        + np.einsum("kj,i...->kij...", np.eye(n), bg.psi_i)
        - np.einsum("ij...,k...->kij...", bg.sigma, psi_up)
    )
    gamma[1:, 1:, 1:] = spatial
    return gamma


def slice_mean_curvature(model: SpacetimeModel, x0: ArrayLike) -> np.ndarray:
    """
    Mean curvature of the coordinate slice {x0 = const} w.r.t. the past directed normal.

    For a FLRW torus with scale factor a this is -n a'/a; Minkowski slices are flat.

    Raises:
        UnsupportedModel: for spatially inhomogeneous models.
    """
    if not model.is_homogeneous:
        raise UnsupportedModel(
            f"slice mean curvature is only defined for homogeneous models, not '{model.kind}'"
        )
    model.check_domain(x0)
    t = np.asarray(x0, dtype=float)
    if model.scale is None:
        return np.zeros_like(t)
    return -model.spatial_dim * model.scale.hubble_rate(t)

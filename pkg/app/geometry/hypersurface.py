"""
Discrete differential geometry of a spacelike graph x0 = u(x) over the torus.

Everything is evaluated node-wise at the graph height (u(xi), xi): gradient
function, induced metric and its Christoffel symbols, the second fundamental
form w.r.t. the past directed normal (by the graph formula and, independently,
by the Gauss formula of the embedding), mean and principal curvatures.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np

from app.ambient.background import BackgroundData, christoffels_full, eval_background, metric_components
from app.ambient.models import SpacetimeModel
from app.errors import SpacelikenessLost
from app.geometry.grid import GraphState, GridSpec, gradient, hessian, node_coordinates, partial_first

DEFAULT_MARGIN = 1e-3


@dataclass(frozen=True, eq=False)
class GeometryFields:
    """
    Per-node derived quantities of a graph. Filled progressively: the
    gradient quantities always, the rest by the operations that need them.
    """
    background: BackgroundData
    du: np.ndarray
    du_norm2: np.ndarray
    v: np.ndarray
    vtilde: np.ndarray
    g: Optional[np.ndarray] = None
    g_inv: Optional[np.ndarray] = None
    christoffels: Optional[np.ndarray] = None
    hess_coord: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None
    H: Optional[np.ndarray] = None
    kappa: Optional[np.ndarray] = None
    a_norm2: Optional[np.ndarray] = None
    nu: Optional[np.ndarray] = None

    @property
    def du_up(self) -> np.ndarray:
        """u^i = sigma^{ij} u_j."""
        return np.einsum("ij...,j...->i...", self.background.sigma_inv, self.du)


def gradient_quantities(model: SpacetimeModel, state: GraphState, margin: float = DEFAULT_MARGIN) -> GeometryFields:
    """
    du, |Du|^2 = sigma^{ij} u_i u_j, v = sqrt(1 - |Du|^2) and vtilde = 1/v.

    Raises:
        SpacelikenessLost: if |Du|^2 >= 1 - margin somewhere; reports the worst node.
    """
    grid = state.grid
    background = eval_background(model, state.u, node_coordinates(grid))
    du = gradient(grid, state.u)
    du_norm2 = np.einsum("ij...,i...,j...->...", background.sigma_inv, du, du)

    worst = int(np.argmax(du_norm2))
    worst_value = float(du_norm2.flat[worst])
    if worst_value >= 1.0 - margin:
        node = tuple(int(i) for i in np.unravel_index(worst, du_norm2.shape))
        raise SpacelikenessLost(node=node, value=worst_value, margin=margin)

    v = np.sqrt(1.0 - du_norm2)
    return GeometryFields(background=background, du=du, du_norm2=du_norm2, v=v, vtilde=1.0 / v)


def induced_metric(
    model: SpacetimeModel,
    state: GraphState,
    fields: Optional[GeometryFields] = None,
    margin: float = DEFAULT_MARGIN,
) -> GeometryFields:
    """g_ij = e^{2psi}(-u_i u_j + sigma_ij) and g^ij = e^{-2psi}(sigma^ij + u^i u^j / v^2)."""
    if fields is None:
        fields = gradient_quantities(model, state, margin)
    bg = fields.background
    du, du_up = fields.du, fields.du_up
    g = np.exp(2.0 * bg.psi) * (bg.sigma - np.einsum("i...,j...->ij...", du, du))
    g_inv = np.exp(-2.0 * bg.psi) * (
        bg.sigma_inv + np.einsum("i...,j...->ij...", du_up, du_up) / fields.v ** 2
    )
    return replace(fields, g=g, g_inv=g_inv)


def induced_christoffels(grid: GridSpec, g: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """
    Gamma^k_ij = 1/2 g^{kl}(d_i g_lj + d_j g_li - d_l g_ij), shape (n, n, n, *points),
    with the metric derivatives taken by central differences of the discrete g fields.
    """
    # dg[m, i, j] = d_m g_ij
    dg = np.stack([partial_first(grid, g, m) for m in range(grid.dim)])
    lowered = (
        np.moveaxis(dg, (0, 1, 2), (1, 0, 2))
        + np.moveaxis(dg, (0, 1, 2), (2, 0, 1))
        - dg
    )
    return 0.5 * np.einsum("kl...,lij...->kij...", g_inv, lowered)


def principal_curvatures(g_inv: np.ndarray, h: np.ndarray):
    """
    Eigenvalues of the Weingarten map g^{-1} h, sorted decreasingly, and ||A||^2.

    For n = 2 the characteristic polynomial is solved in closed form.
    """
    weingarten = np.einsum("ik...,kj...->ij...", g_inv, h)
    n = weingarten.shape[0]
    if n == 1:
        kappa = weingarten[0, :1].copy()
    else:
        trace = weingarten[0, 0] + weingarten[1, 1]
        det = weingarten[0, 0] * weingarten[1, 1] - weingarten[0, 1] * weingarten[1, 0]
        # real spectrum: g^{-1} h is self-adjoint w.r.t. g
        disc = np.sqrt(np.maximum(0.25 * trace * trace - det, 0.0))
        kappa = np.stack([0.5 * trace + disc, 0.5 * trace - disc])
    a_norm2 = np.einsum("ij...,ji...->...", weingarten, weingarten)
    return kappa, a_norm2


def second_fundamental(
    model: SpacetimeModel,
    state: GraphState,
    fields: Optional[GeometryFields] = None,
    margin: float = DEFAULT_MARGIN,
    curvatures: bool = True,
) -> GeometryFields:
    """
    h_ij from the graph formula

        e^{-psi} v^{-1} h_ij = -u_ij - G^0_00 u_i u_j - G^0_0j u_i - G^0_0i u_j - G^0_ij,

    with u_ij the Hessian w.r.t. the induced metric, then H = g^{ij} h_ij,
    the principal curvatures and ||A||^2 = h_ij h^ij. With curvatures=False
    kappa and ||A||^2 are left unset (see with_curvatures).
    """
    if fields is None or fields.g is None:
        fields = induced_metric(model, state, fields, margin)
    grid = state.grid
    bg = fields.background
    du = fields.du

    christoffels = induced_christoffels(grid, fields.g, fields.g_inv)
    hess_coord = hessian(grid, state.u)
    hess = hess_coord - np.einsum("kij...,k...->ij...", christoffels, du)

    outer = np.einsum("i...,j...->ij...", du, du)
    mixed = np.einsum("i...,j...->ij...", du, bg.gamma0_0i)
    rhs = -hess - bg.gamma0_00 * outer - mixed - np.swapaxes(mixed, 0, 1) - bg.gamma0_ij
    h = np.exp(bg.psi) * fields.v * rhs

    H = np.einsum("ij...,ij...->...", fields.g_inv, h)
    fields = replace(fields, christoffels=christoffels, hess_coord=hess_coord, hess=hess, h=h, H=H)
    return with_curvatures(fields) if curvatures else fields


def with_curvatures(fields: GeometryFields) -> GeometryFields:
    """Adds kappa and ||A||^2 to fields that already carry h."""
    if fields.kappa is not None:
        return fields
    kappa, a_norm2 = principal_curvatures(fields.g_inv, fields.h)
    return replace(fields, kappa=kappa, a_norm2=a_norm2)


def normal(
    model: SpacetimeModel,
    state: GraphState,
    fields: Optional[GeometryFields] = None,
    margin: float = DEFAULT_MARGIN,
) -> np.ndarray:
    """Past directed unit normal nu^alpha = -v^{-1} e^{-psi} (1, u^i), shape (n+1, *points)."""
    if fields is None:
        fields = gradient_quantities(model, state, margin)
    scale = -fields.vtilde * np.exp(-fields.background.psi)
    return np.concatenate([scale[np.newaxis], scale * fields.du_up])


def compute_geometry(model: SpacetimeModel, state: GraphState, margin: float = DEFAULT_MARGIN) -> GeometryFields:
    """Runs the whole chain and returns fully populated GeometryFields."""
    fields = second_fundamental(model, state, None, margin)
    return replace(fields, nu=normal(model, state, fields, margin))


def tangent_vectors(fields: GeometryFields) -> np.ndarray:
    """x^alpha_i of the embedding xi -> (u(xi), xi), shape (n+1, n, *points)."""
    du = fields.du
    n = du.shape[0]
    tangents = np.zeros((n + 1, n) + du.shape[1:])
    tangents[0] = du
    for k in range(n):
        tangents[k + 1, k] = 1.0
    return tangents


def embedding_oracle(
    model: SpacetimeModel,
    state: GraphState,
    fields: Optional[GeometryFields] = None,
    margin: float = DEFAULT_MARGIN,
) -> np.ndarray:
    """
    Second fundamental form from the Gauss formula x_ij = h_ij nu.

    x^alpha_ij = x^alpha_,ij - Gamma^k_ij x^alpha_k + Gbar^alpha_bc x^b_i x^c_j and, since
    <nu, nu> = -1, h_ij = -gbar_ab x^a_ij nu^b. Independent of the graph formula
    used in second_fundamental.
    """
    if fields is None or fields.christoffels is None:
        fields = second_fundamental(model, state, fields, margin)
    nu = fields.nu if fields.nu is not None else normal(model, state, fields, margin)
    coords = node_coordinates(state.grid)
    gamma_bar = christoffels_full(model, state.u, coords)
    metric = metric_components(model, state.u, coords)

    tangents = tangent_vectors(fields)
    n = state.grid.dim
    second = np.zeros((n + 1, n, n) + state.u.shape)
    second[0] = fields.hess_coord
    second -= np.einsum("kij...,ak...->aij...", fields.christoffels, tangents)
    second += np.einsum("abc...,bi...,cj...->aij...", gamma_bar, tangents, tangents)

    return -np.einsum("ab...,aij...,b...->ij...", metric, second, nu)


def reference_norm_normal(fields: GeometryFields) -> np.ndarray:
    """Norm of nu in the Riemannian reference metric e^{2psi}(dx0^2 + sigma)."""
    bg = fields.background
    nu = fields.nu
    spatial = np.einsum("ij...,i...,j...->...", bg.sigma, nu[1:], nu[1:])
    return np.sqrt(np.exp(2.0 * bg.psi) * (nu[0] ** 2 + spatial))


def identity_residuals(model: SpacetimeModel, state: GraphState, fields: GeometryFields) -> Dict[str, float]:
    """
    Maximal deviation of every per-node algebraic identity of the graph geometry.

    Keys map to the worst absolute violation over all nodes (and index pairs).
    """
    n = state.grid.dim
    eye = np.eye(n).reshape((n, n) + (1,) * state.u.ndim)
    coords = node_coordinates(state.grid)
    metric = metric_components(model, state.u, coords)
    nu = fields.nu if fields.nu is not None else normal(model, state, fields)
    tangents = tangent_vectors(fields)
    bg = fields.background

    kappa_sum = np.sum(fields.kappa, axis=0)
    kappa_sq = np.sum(fields.kappa ** 2, axis=0)
    nu_norm = np.einsum("ab...,a...,b...->...", metric, nu, nu)
    tangency = np.einsum("ab...,a...,bi...->i...", metric, nu, tangents)
    g_norm_du = np.einsum("ij...,i...,j...->...", fields.g_inv, fields.du, fields.du)
    ref_norm = reference_norm_normal(replace(fields, nu=nu))

    residuals = {
        "v2_plus_du2": np.abs(fields.v ** 2 + fields.du_norm2 - 1.0),
        "v_times_vtilde": np.abs(fields.v * fields.vtilde - 1.0),
        "g_inv_g": np.abs(np.einsum("ik...,kj...->ij...", fields.g_inv, fields.g) - eye),
        "h_symmetry": np.abs(fields.h - np.swapaxes(fields.h, 0, 1)),
        "H_trace_kappa": np.abs(fields.H - kappa_sum) / np.maximum(1.0, np.abs(fields.H)),
        "a_norm2_kappa": np.abs(fields.a_norm2 - kappa_sq) / np.maximum(1.0, fields.a_norm2),
        "nu_unit_timelike": np.abs(nu_norm + 1.0),
        "nu_tangency": np.abs(tangency),
        "vtilde_gradient": np.abs(1.0 + np.exp(2.0 * bg.psi) * g_norm_du - fields.vtilde ** 2)
        / fields.vtilde ** 2,
        "reference_norm_normal": np.abs(ref_norm ** 2 - fields.vtilde ** 2 * (1.0 + fields.du_norm2))
        / fields.vtilde ** 2,
    }
    result = {name: float(np.max(values)) for name, values in residuals.items()}
    logging.debug(f"Geometry identity residuals: {result}")
    return result


# tolerance per identity; tangency is only as exact as the discrete gradient
IDENTITY_TOLERANCES: Dict[str, float] = {
    "v2_plus_du2": 1e-14,
    "v_times_vtilde": 1e-14,
    "g_inv_g": 1e-12,
    "h_symmetry": 1e-12,
    "H_trace_kappa": 1e-12,
    "a_norm2_kappa": 1e-12,
    "nu_unit_timelike": 1e-12,
    "nu_tangency": 1e-10,
    "vtilde_gradient": 1e-12,
    "reference_norm_normal": 1e-12,
}


def max_principal_metric_ratio(fields: GeometryFields) -> float:
    """max over nodes of lambda_max(e^{2psi} sigma g^{-1}) / vtilde^2, at most 1 by construction."""
    bg = fields.background
    product = np.exp(2.0 * bg.psi) * np.einsum("ik...,kj...->ij...", bg.sigma, fields.g_inv)
    moved = np.moveaxis(product, (0, 1), (-2, -1))
    eigen = np.linalg.eigvals(moved).real.max(axis=-1)
    return float(np.max(eigen / fields.vtilde ** 2))


def identity_violations(residuals: Dict[str, float]) -> Dict[str, float]:
    """The identities whose worst value exceeds its tolerance, with that value."""
    return {
        name: value
        for name, value in residuals.items()
        if name in IDENTITY_TOLERANCES and not value <= IDENTITY_TOLERANCES[name]
    }

# tests/ambient/test_models.py
import math

import numpy as np
import pytest

from app.ambient.models import MAX_BUMP_AMPLITUDE, ScaleFactor, create_model
from app.errors import ConfigError, DomainError, UnknownModel

MODEL_CASES = [
    ("minkowski_torus", {}),
    ("flrw_torus", {"scale": "gaussian"}),
    ("flrw_torus", {"scale": "cosh"}),
    ("flrw_torus", {"scale": "exponential", "H0": 0.7}),
    ("flrw_torus", {"scale": "power", "p": 0.5}),
    ("conformal_bump", {"A": 0.3, "waves": [1, 2]}),
]


def _random_points(model, count: int, seed: int = 1):
    rng = np.random.default_rng(seed)
    lower = model.lower_time_bound()
    x0 = rng.uniform(lower + 0.1, 3.0, size=count) if lower is not None else rng.uniform(-2.0, 2.0, size=count)
    x = rng.uniform(0.0, 1.0, size=(model.spatial_dim, count))
    return x0, x


def test_unknown_model_is_rejected():
    """An unregistered kind raises UnknownModel naming spacetime.type."""
    # Act
    with pytest.raises(UnknownModel) as err:
        create_model("de_sitter_static")

    # Assert
    assert err.value.paths() == ["spacetime.type"]
    assert "minkowski_torus" in str(err.value)


def test_bump_amplitude_is_capped():
    with pytest.raises(ConfigError) as err:
        create_model("conformal_bump", {"A": MAX_BUMP_AMPLITUDE + 0.1})
    assert err.value.paths() == ["spacetime.params.A"]


def test_unknown_scale_factor_is_rejected():
    with pytest.raises(ConfigError):
        ScaleFactor("radiation")


def test_power_law_outside_temporal_domain_raises():
    # Arrange
    model = create_model("flrw_torus", {"scale": "power", "p": 2.0})

    # Act / Assert
    with pytest.raises(DomainError):
        model.check_domain(np.array([0.5, 0.0]))
    assert model.lower_time_bound() == pytest.approx(0.1)


def test_gaussian_spatial_metric_value():
    model = create_model("flrw_torus", {"scale": "gaussian"})
    sigma = model.sigma(0.7, np.array([0.3]))
    assert sigma.shape == (1, 1)
    assert sigma[0, 0] == pytest.approx(math.exp(-0.49), rel=1e-12)
    assert sigma[0, 0] == pytest.approx(0.612626, abs=1e-6)


def test_minkowski_is_static_and_flat():
    model = create_model("minkowski_torus", spatial_dim=2)
    x0, x = _random_points(model, 50)
    np.testing.assert_array_equal(model.psi(x0, x), 0.0)
    np.testing.assert_array_equal(model.sigma(x0, x), np.broadcast_to(np.eye(2)[:, :, None], (2, 2, 50)))
    np.testing.assert_array_equal(model.sigma_dot(x0, x), 0.0)


@pytest.mark.parametrize("kind, params", MODEL_CASES)
def test_spatial_metric_symmetric_positive_definite(kind, params):
    """sigma is symmetric positive definite and sigma_inv inverts it at 1000 random points."""
    # Arrange
    model = create_model(kind, params, spatial_dim=2)
    x0, x = _random_points(model, 1000)

    # Act
    sigma = model.sigma(x0, x)
    sigma_inv = model.sigma_inv(x0, x)

    # Assert
    np.testing.assert_array_equal(sigma, np.swapaxes(sigma, 0, 1))
    eigenvalues = np.linalg.eigvalsh(np.moveaxis(sigma, (0, 1), (-2, -1)))
    assert np.all(eigenvalues > 0.0)
    product = np.einsum("ik...,kj...->ij...", sigma_inv, sigma)
    np.testing.assert_allclose(product, np.broadcast_to(np.eye(2)[:, :, None], product.shape), atol=1e-12)


def test_bump_conformal_factor_and_gradient():
    # Arrange
    model = create_model("conformal_bump", {"A": 0.1})
    x = np.array([[0.0, 0.25, 0.5]])

    # Act
    psi = model.psi(0.0, x)
    grad = model.psi_grad(0.0, x)

    # Assert
    np.testing.assert_allclose(psi, [0.1, 0.0, -0.1], atol=1e-15)
    np.testing.assert_allclose(grad[0], [0.0, -0.1 * 2 * math.pi, 0.0], atol=1e-15)
    np.testing.assert_array_equal(model.psi_dot(0.0, x), 0.0)


@pytest.mark.parametrize(
    "kind, t, expected",
    [
        ("gaussian", 0.7, -0.7),
        ("cosh", 0.3, math.tanh(0.3)),
        ("exponential", -1.0, 1.0),
        ("power", 2.0, 0.5),
    ],
)
def test_hubble_rate_matches_derivative_over_value(kind, t, expected):
    scale = ScaleFactor(kind, p=1.0, H0=1.0)
    assert float(scale.hubble_rate(t)) == pytest.approx(expected)
    assert float(scale.derivative(t) / scale.value(t)) == pytest.approx(expected)


@pytest.mark.parametrize("kind, params", MODEL_CASES)
def test_spatial_metric_matches_the_separate_accessors(kind, params):
    model = create_model(kind, params, spatial_dim=2)
    x0, x = _random_points(model, 5)
    sigma, sigma_dot, sigma_inv = model.spatial_metric(x0, x)
    np.testing.assert_allclose(sigma, model.sigma(x0, x), rtol=1e-15)
    np.testing.assert_allclose(sigma_dot, model.sigma_dot(x0, x), rtol=1e-15)
    np.testing.assert_allclose(sigma_inv, model.sigma_inv(x0, x), rtol=1e-15)

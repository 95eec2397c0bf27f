import numpy as np
import pytest

from aperiod_sde import DiffusionSpec, DriftSpec, ModelSpec, TimeGrid, sample_ensemble


@pytest.fixture
def ou_model():
    """Autonomous linear model: pure Ornstein-Uhlenbeck, lambda=1, sigma=0.2."""
    return ModelSpec(
        dim_state=1,
        dim_noise=1,
        spectrum=[1.0],
        q_eigenvalues=[1.0],
        drift=DriftSpec(base=[0.0]),
        diffusion=DiffusionSpec(base_sigma=[0.2]),
    )


@pytest.fixture
def catalog_model():
    """Two-mode model exercising every catalog feature, kappa < 1."""
    return ModelSpec(
        dim_state=2,
        dim_noise=2,
        spectrum=[1.0, 2.0],
        q_eigenvalues=[1.0, 0.5],
        drift=DriftSpec(
            base=[0.1, -0.2],
            modes=[(np.array([0.5, 0.0]), 1.0, 0.3), (np.array([0.0, 0.4]), 2.0, -0.1)],
            nonlinearity_gain=0.15,
        ),
        diffusion=DiffusionSpec(
            base_sigma=[0.2, 0.3],
            modes=[(0.25, 1.5, 0.0)],
            state_gain=0.1,
        ),
    )


@pytest.fixture
def small_noise(catalog_model):
    grid = TimeGrid(-6.0, 0.02, 500)
    return sample_ensemble(grid, catalog_model.q_eigenvalues, 64, 2024)

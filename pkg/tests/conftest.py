"""Shared fixtures: one coarse scenario every suite can solve in milliseconds."""

import pytest

from tsecert import (
    Environment,
    Grid,
    InputNormalization,
    PiecewiseConstantProfile,
    TrainConfig,
    lax_hopf_solve,
    sample_dataset,
    train,
)


@pytest.fixture(scope="session")
def env25():
    return Environment(v_f=25.0, rho_m=0.15)


@pytest.fixture(scope="session")
def coarse_grid():
    # 51 x 26 nodes: enough for the wave structure, cheap enough for every test
    return Grid(x_min=0.0, x_max=1000.0, dx=20.0, t_max=25.0, dt=1.0)


@pytest.fixture(scope="session")
def coarse_profile():
    return PiecewiseConstantProfile(
        breakpoints=(0.0, 200.0, 500.0, 1000.0),
        values=(0.13, 0.06, 0.03),
    )


@pytest.fixture(scope="session")
def coarse_truth(coarse_profile, env25, coarse_grid):
    _, rho = lax_hopf_solve(coarse_profile, env25, coarse_grid)
    return rho


@pytest.fixture(scope="session")
def small_model(coarse_truth):
    """A genuinely trained (small) network, shared to keep the suite fast."""
    samples = sample_dataset(coarse_truth, 400, seed=7)
    config = TrainConfig(
        adam_iterations=400, lbfgs_iterations=200,
        hidden_layers=2, hidden_width=12, seed=7,
        input_normalization=InputNormalization.from_grid(coarse_truth.grid))
    params, _ = train(samples, config)
    return params

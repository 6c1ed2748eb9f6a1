"""
Shared fixtures for the hgpcc test suite.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add repository root to path
repo_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(repo_root))

from src.config.settings import reload_settings
from src.inference.dataset import (
    build_dataset,
    regular_grid,
    simulate_observations,
    zero_log_variance,
    zero_mean,
)
from src.inference.hgp import draw_ensemble, fit
from src.models.experiment import ControlConfig
from src.models.kernel import SeKernelParams
from src.utils.logger import configure_logging


CONFIG_DIR = repo_root / "configs"


@pytest.fixture(autouse=True)
def fresh_settings():
    """Reload runtime settings and rebind logging to the current streams."""
    settings = reload_settings()
    configure_logging(log_level=settings.log_level, log_format=settings.log_format)
    yield
    reload_settings()


@pytest.fixture
def unit_kernel():
    """nu = 1, rho = (1, 1)."""
    return SeKernelParams(amplitude=1.0, precision=[1.0, 1.0])


@pytest.fixture
def benchmark_kernels():
    """(kernel_f, kernel_h) of the tracking benchmark."""
    return (
        SeKernelParams(amplitude=407.0, precision=[1.37, 5.55]),
        SeKernelParams(amplitude=2.14, precision=[0.0241, 1.86]),
    )


@pytest.fixture
def small_dataset():
    """Three inputs, two replicates each."""
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    Y = np.array([[0.4, 1.2], [-0.7, -0.1], [1.5, 0.9]])
    return build_dataset(X, Y)


@pytest.fixture
def small_model(small_dataset, unit_kernel):
    return fit(small_dataset, unit_kernel, unit_kernel, jitter=1e-12)


@pytest.fixture
def small_ensemble(small_model):
    return draw_ensemble(small_model, 200, seed=11)


@pytest.fixture
def zero_truth_model(unit_kernel):
    """Model trained on f = 0 with noise variance 0.01 on a 3x3 grid."""
    X = regular_grid(-1.0, 1.0, 3)
    dataset = simulate_observations(zero_mean, zero_log_variance, X, 3, seed=5)
    return fit(dataset, unit_kernel, unit_kernel)


@pytest.fixture
def control_config():
    return ControlConfig(
        time_step=0.005,
        margin=0.1,
        violation_budget=0.01,
        horizon=20,
        gains=[1.0, 0.5, 0.1],
    )

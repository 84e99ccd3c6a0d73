# tests/conftest.py
"""
Common test fixtures for label-uncertainty tests.
"""
import numpy as np
import pytest

from label_uncertainty.discrete_world import build_discrete_world
from label_uncertainty.gaussian_world import GaussianMixtureWorld, gen_gaussian_dataset
from label_uncertainty.models import GradeScale, UncertaintyKind, UncertaintySpec


# Add configuration for test markers
def pytest_configure(config):
    config.addinivalue_line("markers", "slow: mark tests as slow running (full-size experiments)")


# Add command line option for skipping slow tests
def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow",
        action="store_true",
        default=False,
        help="Skip slow running tests",
    )


# Skip marked tests based on command line option
def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-slow"):
        skip_slow = pytest.mark.skip(reason="Test is slow running")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip_slow)


@pytest.fixture
def dr_scale():
    """The 5-point clinical grade scale (grades 1..5, referable from 3)."""
    return GradeScale.five_point()


@pytest.fixture
def world_w2():
    """Two observations with opposite point-mass posteriors hidden behind one x."""
    return build_discrete_world([[0.5, 0.0], [0.0, 0.5]], obscure_map=["x", "x"])


@pytest.fixture
def injective_world():
    """Three observations, identity obscuring map."""
    return build_discrete_world([[0.2, 0.1], [0.1, 0.3], [0.25, 0.05]])


@pytest.fixture
def two_gaussians():
    """Symmetric 1D mixture with centers at -1 and +1."""
    return GaussianMixtureWorld(centers=((-1.0,), (1.0,)), weights=(0.5, 0.5), variance=1.0)


@pytest.fixture
def small_gaussian_dataset(two_gaussians):
    """400 instances from the symmetric two-Gaussian world, disagree@0.3."""
    spec = UncertaintySpec(kind=UncertaintyKind.DISAGREE, threshold=0.3)
    return gen_gaussian_dataset(two_gaussians, 400, 5, spec, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

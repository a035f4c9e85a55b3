import numpy as np
import pytest

from qfedtd.experiments import default_model
from qfedtd.mrp import FeatureMatrix, compute_oracles, validate_mrp


@pytest.fixture(scope="session")
def stock_model():
    """The 20-state / 10-feature reference model with oracles."""
    return default_model()


@pytest.fixture(scope="session")
def two_state():
    """Symmetric two-state chain, tabular features."""
    mrp = validate_mrp([[0.5, 0.5], [0.5, 0.5]], [1.0, 0.0], 0.5)
    phi = FeatureMatrix(Phi=np.eye(2))
    return mrp, phi, compute_oracles(mrp, phi)


@pytest.fixture(scope="session")
def lopsided_two_state():
    """Asymmetric two-state chain with stationary distribution (2/3, 1/3)."""
    mrp = validate_mrp([[0.9, 0.1], [0.2, 0.8]], [1.0, -1.0], 0.9)
    phi = FeatureMatrix(Phi=np.eye(2))
    return mrp, phi, compute_oracles(mrp, phi)

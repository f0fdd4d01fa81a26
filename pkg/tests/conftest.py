import numpy as np
import pytest

from targets.models import TargetModel


@pytest.fixture
def flat_target():
    """U = 0 in 1D: pure diffusion"""
    return TargetModel(
        name='flat',
        dim=1,
        potential=lambda x: np.zeros(np.asarray(x).shape[:-1]),
        gradient=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        laplacian=lambda x: np.zeros(np.asarray(x).shape[:-1]),
        reference_recipe='rejection',
    )

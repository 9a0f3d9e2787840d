# tests/conftest.py
import numpy as np
import pytest
from scipy import special

from src.estimation.structure import from_edge_lists
from src.estimation.vinefit import fit_vine
from src.simulation.targets import ScenarioSpec, sample


def gaussian_copula_pairs(n, rho, seed):
    """n pairs on the unit square from a bivariate Gaussian copula."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, 2))
    z1 = g[:, 0]
    z2 = rho * g[:, 0] + np.sqrt(1.0 - rho * rho) * g[:, 1]
    return np.column_stack([special.ndtr(z1), special.ndtr(z2)])


def gaussian_hfunc(u, v, rho):
    """h(u | v) of the Gaussian copula."""
    return special.ndtr((special.ndtri(u) - rho * special.ndtri(v)) / np.sqrt(1.0 - rho * rho))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def gauss3_sample():
    return sample(ScenarioSpec(kind="gauss", d=3, tau=0.4), 300, seed=7)


@pytest.fixture(scope="session")
def fitted_model3(gauss3_sample):
    return fit_vine(gauss3_sample)


@pytest.fixture(scope="session")
def five_dim_structure():
    # T1: 0-1, 0-2, 2-3, 2-4; the last tree holds the single edge 1,4;0,2,3
    return from_edge_lists(5, [
        [(0, 1), (0, 2), (2, 3), (2, 4)],
        [(0, 1), (1, 2), (2, 3)],
        [(0, 1), (1, 2)],
        [(0, 1)],
    ])

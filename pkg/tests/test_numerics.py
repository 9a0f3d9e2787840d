# tests/test_numerics.py
import numpy as np
import pytest
from scipy import integrate

from src.errors import DomainError, InsufficientDataError
from src.estimation.numerics import (
    COPULA_BANDWIDTH_FACTOR,
    NORMAL_REFERENCE_CONSTANT,
    chunked_rows,
    clamp_probabilities,
    kendalls_tau,
    kernel_cdf,
    kernel_eval,
    pseudo_observations,
    std_normal,
    std_normal_quantile,
)


def brute_force_tau_b(x, y):
    n = len(x)
    s = tx = ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            sx = np.sign(x[i] - x[j])
            sy = np.sign(y[i] - y[j])
            s += sx * sy
            tx += sx == 0
            ty += sy == 0
    n0 = n * (n - 1) / 2
    return s / np.sqrt((n0 - tx) * (n0 - ty))


def test_kernel_is_a_density():
    grid = np.linspace(-1.0, 1.0, 200001)
    assert integrate.trapezoid(kernel_eval(grid), grid) == pytest.approx(1.0, abs=1e-9)
    assert integrate.trapezoid(grid ** 2 * kernel_eval(grid), grid) == pytest.approx(1.0 / 7.0, abs=1e-9)
    assert kernel_eval(1.5) == 0.0
    assert kernel_eval(0.0) == pytest.approx(0.9375)


def test_kernel_is_symmetric_with_flat_edges():
    grid = np.linspace(0.0, 1.5, 301)
    assert np.array_equal(kernel_eval(grid), kernel_eval(-grid))
    h = 1e-6
    for edge in (-1.0, 1.0):
        slope = (kernel_eval(edge + h) - kernel_eval(edge - h)) / (2 * h)
        assert abs(slope) < 1e-5
    assert kernel_cdf(0.3) + kernel_cdf(-0.3) == pytest.approx(1.0)


def test_kernel_cdf_endpoints_and_clipping():
    assert kernel_cdf(-1.0) == pytest.approx(0.0, abs=1e-15)
    assert kernel_cdf(0.0) == pytest.approx(0.5)
    assert kernel_cdf(1.0) == pytest.approx(1.0)
    assert kernel_cdf(-3.0) == kernel_cdf(-1.0)
    assert kernel_cdf(7.0) == kernel_cdf(1.0)
    grid = np.linspace(-1.2, 1.2, 1001)
    assert np.all(np.diff(kernel_cdf(grid)) >= 0)


def test_normal_reference_constant():
    assert NORMAL_REFERENCE_CONSTANT == pytest.approx(2.7779, abs=1e-3)


def test_copula_bandwidth_factor():
    # (35 / R(phi))^(1/5) with R(phi) = 1 / (2 sqrt(pi))
    assert COPULA_BANDWIDTH_FACTOR == pytest.approx((35.0 * 2.0 * np.sqrt(np.pi)) ** 0.2, rel=1e-12)
    assert COPULA_BANDWIDTH_FACTOR == pytest.approx(2.6226, abs=1e-3)


def test_std_normal_values():
    phi, cdf = std_normal(0.0)
    assert phi == pytest.approx(1.0 / np.sqrt(2.0 * np.pi))
    assert cdf == pytest.approx(0.5)
    assert std_normal_quantile(0.25) == pytest.approx(-0.6744897501960817, abs=1e-12)


def test_quantile_round_trip():
    p = np.linspace(1e-6, 1.0 - 1e-6, 1001)
    _, back = std_normal(std_normal_quantile(p))
    assert np.max(np.abs(back - p)) < 1e-9


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.2])
def test_quantile_rejects_boundary(p):
    with pytest.raises(DomainError):
        std_normal_quantile(p)


def test_kendalls_tau_matches_pair_counting_with_ties(rng):
    x = np.round(rng.standard_normal(120), 1)
    y = np.round(0.5 * x + rng.standard_normal(120), 1)
    assert kendalls_tau(x, y) == pytest.approx(brute_force_tau_b(x, y), abs=1e-12)


def test_kendalls_tau_edge_cases():
    x = np.arange(10.0)
    assert kendalls_tau(x, x) == pytest.approx(1.0)
    assert kendalls_tau(x, -x) == pytest.approx(-1.0)
    assert kendalls_tau(x, np.ones(10)) == 0.0
    with pytest.raises(InsufficientDataError):
        kendalls_tau([1.0], [2.0])


def test_pseudo_observations_and_clamp():
    u = pseudo_observations([3.0, 1.0, 2.0, 2.0])
    assert np.allclose(u, [4 / 5, 1 / 5, 2.5 / 5, 2.5 / 5])
    clamped = clamp_probabilities([0.0, 0.5, 1.0], 9)
    assert np.allclose(clamped, [0.1, 0.5, 0.9])


def test_chunked_rows_independent_of_chunk_size(rng):
    points = rng.standard_normal((1000, 2))

    def func(block):
        return np.sin(block).sum(axis=1)

    full = chunked_rows(func, points, chunk_size=1000)
    for size in (1, 7, 128):
        assert np.array_equal(chunked_rows(func, points, chunk_size=size), full)


def test_kendalls_tau_small_example_and_swap():
    x, y = [1.0, 2.0, 3.0], [1.0, 3.0, 2.0]
    assert kendalls_tau(x, y) == pytest.approx(1.0 / 3.0)
    assert kendalls_tau(y, x) == kendalls_tau(x, y)


def test_pseudo_observations_are_scaled_ranks():
    assert np.allclose(pseudo_observations([3.0, 1.0, 2.0]), [0.75, 0.25, 0.5])

# src/estimation/numerics.py
"""
Shared numerical primitives: the biweight kernel, standard-normal helpers,
Kendall's tau and rank pseudo-observations.
"""
from typing import Callable, Tuple

import numpy as np
from scipy import special, stats

from ..errors import DomainError, InsufficientDataError

# Biweight K(x) = 15/16 (1 - x^2)^2 on [-1, 1]
KERNEL_VARIANCE = 1.0 / 7.0  # sigma_K^2 = int x^2 K(x) dx
KERNEL_ROUGHNESS = 5.0 / 7.0  # R(K) = int K(x)^2 dx

# AMISE normal-reference constant [8 sqrt(pi) R(K) / (3 sigma_K^4)]^(1/5)
NORMAL_REFERENCE_CONSTANT = (
    8.0 * np.sqrt(np.pi) * KERNEL_ROUGHNESS / (3.0 * KERNEL_VARIANCE ** 2)
) ** 0.2

GAUSSIAN_ROUGHNESS = 1.0 / (2.0 * np.sqrt(np.pi))  # R(phi)
# Canonical biweight-to-Gaussian bandwidth factor [R(K) / (sigma_K^4 R(phi))]^(1/5), about 2.62.
# Scales a Gaussian-kernel reference bandwidth to the biweight kernel.
COPULA_BANDWIDTH_FACTOR = (
    KERNEL_ROUGHNESS / (KERNEL_VARIANCE ** 2 * GAUSSIAN_ROUGHNESS)
) ** 0.2

DEFAULT_CHUNK_SIZE = 1024


def kernel_eval(x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= 1.0
    return np.where(inside, 0.9375 * (1.0 - x * x) ** 2, 0.0)


def kernel_cdf(x):
    """Integrated kernel J(x) = int_{-inf}^x K(s) ds."""
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    x3 = x * x * x
    return 0.5 + 0.9375 * (x - 2.0 * x3 / 3.0 + x3 * x * x / 5.0)


def std_normal(x) -> Tuple[np.ndarray, np.ndarray]:
    """Return (phi(x), Phi(x))."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi), special.ndtr(x)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def std_normal_quantile(p):
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("Normal quantile requires probabilities strictly inside (0, 1)")
    return special.ndtri(p)


def kendalls_tau(x, y) -> float:
    """Tie-corrected Kendall's tau-b; 0 when either coordinate is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("kendalls_tau expects two 1-d arrays of equal length")
    if x.size < 2:
        raise InsufficientDataError("Kendall's tau needs at least 2 pairs")
    tau = stats.kendalltau(x, y, variant="b").correlation
    if not np.isfinite(tau):
        return 0.0
    return float(np.clip(tau, -1.0, 1.0))


def pseudo_observations(column) -> np.ndarray:
    column = np.asarray(column, dtype=float)
    n = column.size
    return stats.rankdata(column, method="average") / (n + 1.0)


def clamp_probabilities(u, n: int) -> np.ndarray:
    """Clamp to [1/(n+1), n/(n+1)] so that Phi^-1 stays finite."""
    return np.clip(np.asarray(u, dtype=float), 1.0 / (n + 1.0), n / (n + 1.0))


def chunked_rows(
        func: Callable[[np.ndarray], np.ndarray],
        points: np.ndarray,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> np.ndarray:
    """
    Apply func to fixed-size row blocks of points and concatenate.
    Each row is reduced within one block, so results do not depend on how
    blocks are scheduled.
    """
    points = np.asarray(points, dtype=float)
    if points.shape[0] == 0:
        return func(points)
    blocks = [func(points[start:start + chunk_size]) for start in range(0, points.shape[0], chunk_size)]
    return np.concatenate(blocks, axis=0)

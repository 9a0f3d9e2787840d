# src/estimation/marginal.py
"""Univariate kernel density and distribution function estimation."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DegenerateDataError, InsufficientDataError
from .numerics import (
    DEFAULT_CHUNK_SIZE,
    NORMAL_REFERENCE_CONSTANT,
    chunked_rows,
    kernel_cdf,
    kernel_eval,
)


@dataclass(frozen=True)
class MarginalEstimate:
    sample: np.ndarray  # sorted
    bandwidth: float
    bandwidth_multiplier: float = 1.0

    @property
    def n(self) -> int:
        return int(self.sample.size)

    def pdf(self, x, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
        return eval_marginal_density(self, x, chunk_size)

    def cdf(self, x, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
        return eval_marginal_cdf(self, x, chunk_size)


def robust_scale(column) -> float:
    """min(sd, IQR / 1.349)."""
    column = np.asarray(column, dtype=float)
    sd = float(np.std(column, ddof=1))
    q75, q25 = np.percentile(column, [75, 25])
    iqr_scale = float(q75 - q25) / 1.349
    if iqr_scale > 0:
        return min(sd, iqr_scale)
    return sd


def normal_reference_bandwidth(scale: float, n: int, dimension: int = 1) -> float:
    """C_K * scale * n^(-1/(dimension + 4))."""
    return float(NORMAL_REFERENCE_CONSTANT * scale * n ** (-1.0 / (dimension + 4.0)))


def marginal_bandwidth(column) -> float:
    column = np.asarray(column, dtype=float)
    if column.size < 2:
        raise InsufficientDataError("Bandwidth selection needs at least 2 observations")
    scale = robust_scale(column)
    if not scale > 0:
        raise DegenerateDataError("Column has zero variance")
    return normal_reference_bandwidth(scale, column.size)


def fit_marginal(
        column,
        bandwidth_multiplier: float = 1.0,
        bandwidth: Optional[float] = None,
) -> MarginalEstimate:
    column = np.asarray(column, dtype=float)
    if bandwidth is None:
        bandwidth = marginal_bandwidth(column) * bandwidth_multiplier
    if not bandwidth > 0:
        raise DegenerateDataError("Bandwidth must be positive")
    return MarginalEstimate(
        sample=np.sort(column),
        bandwidth=float(bandwidth),
        bandwidth_multiplier=float(bandwidth_multiplier),
    )


def eval_marginal_density(m: MarginalEstimate, x, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    b = m.bandwidth

    def block(points):
        return kernel_eval((m.sample[None, :] - points[:, None]) / b).sum(axis=1) / (m.n * b)

    return chunked_rows(block, x, chunk_size)


def eval_marginal_cdf(m: MarginalEstimate, x, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
    # J((x - X_i) / b): nondecreasing in x
    x = np.atleast_1d(np.asarray(x, dtype=float))
    b = m.bandwidth

    def block(points):
        return kernel_cdf((points[:, None] - m.sample[None, :]) / b).sum(axis=1) / m.n

    return np.clip(chunked_rows(block, x, chunk_size), 0.0, 1.0)

# src/estimation/baseline.py
"""Classical multivariate product-kernel density estimator used as the benchmark competitor."""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DegenerateDataError, DimensionMismatchError, InsufficientDataError, ValidationError
from .marginal import normal_reference_bandwidth, robust_scale
from .numerics import DEFAULT_CHUNK_SIZE, chunked_rows, kernel_eval

MIN_BASELINE_ROWS = 10


@dataclass(frozen=True)
class ProductKernelDensity:
    sample: np.ndarray  # (n, d)
    bandwidths: np.ndarray  # (d,)

    @property
    def n(self) -> int:
        return int(self.sample.shape[0])

    @property
    def d(self) -> int:
        return int(self.sample.shape[1])

    def __call__(self, x, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.d:
            raise DimensionMismatchError(f"Expected points with {self.d} coordinates, got shape {x.shape}")
        scale = self.n * np.prod(self.bandwidths)

        def block(points):
            weights = np.ones((points.shape[0], self.n))
            for j in range(self.d):
                weights *= kernel_eval((points[:, j:j + 1] - self.sample[None, :, j]) / self.bandwidths[j])
            return weights.sum(axis=1) / scale

        return chunked_rows(block, x, chunk_size)


def mvkde_bandwidths(data: np.ndarray) -> np.ndarray:
    """Per-coordinate C_K * scale_j * n^(-1/(d+4))."""
    n, d = data.shape
    bandwidths = np.empty(d)
    for j in range(d):
        scale = robust_scale(data[:, j])
        if not scale > 0:
            raise DegenerateDataError(f"Column {j} is degenerate: zero variance", column=j)
        bandwidths[j] = normal_reference_bandwidth(scale, n, dimension=d)
    return bandwidths


def mvkde_baseline(
        data,
        bandwidths: Optional[Sequence[float]] = None,
        bandwidth_multiplier: float = 1.0,
) -> ProductKernelDensity:
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValidationError("mvkde_baseline expects an (n, d) matrix")
    if bandwidths is None:
        if data.shape[0] < MIN_BASELINE_ROWS:
            raise InsufficientDataError(f"Baseline needs at least {MIN_BASELINE_ROWS} rows")
        bandwidths = mvkde_bandwidths(data) * bandwidth_multiplier
    bandwidths = np.asarray(bandwidths, dtype=float)
    if bandwidths.shape != (data.shape[1],) or np.any(~(bandwidths > 0)):
        raise ValidationError("Bandwidths must be positive, one per column")
    return ProductKernelDensity(sample=data.copy(), bandwidths=bandwidths)

# src/estimation/paircop.py
"""
Transformation kernel estimator for bivariate copula densities and the
h-functions obtained by integrating it.

Data are mapped to standard-normal margins, a product biweight kernel with
bandwidth b * I_2 is applied there, and the estimate is mapped back to the
unit square.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Tuple

import numpy as np

from ..errors import DegenerateDataError, DomainError, InsufficientDataError
from .numerics import (
    COPULA_BANDWIDTH_FACTOR,
    DEFAULT_CHUNK_SIZE,
    chunked_rows,
    kernel_cdf,
    kernel_eval,
    std_normal_pdf,
    std_normal_quantile,
)

logger = logging.getLogger(__name__)


class Direction(str, Enum):
    FIRST_GIVEN_SECOND = "first_given_second"  # h(u | v) = P(U1 <= u | U2 = v)
    SECOND_GIVEN_FIRST = "second_given_first"  # h(v | u) = P(U2 <= v | U1 = u)


@dataclass(frozen=True)
class PairCopulaEstimate:
    z_sample: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    bandwidth: float = 0.0
    is_independence: bool = False

    @property
    def n(self) -> int:
        return int(self.z_sample.shape[0])

    def density(self, u, v, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
        return eval_pair_density(self, u, v, chunk_size)

    def hfunc(self, u, v, direction: Direction = Direction.FIRST_GIVEN_SECOND,
              normalized: bool = True, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
        values, _ = eval_hfunc_counted(self, u, v, direction, normalized, chunk_size)
        return values


def independence_copula() -> PairCopulaEstimate:
    return PairCopulaEstimate(z_sample=np.empty((0, 2)), bandwidth=0.0, is_independence=True)


def copula_bandwidth(z_sample) -> float:
    """
    b = c * mean coordinate sd * n^(-1/6), c being the biweight-to-Gaussian
    factor COPULA_BANDWIDTH_FACTOR.
    """
    z_sample = np.asarray(z_sample, dtype=float)
    n = z_sample.shape[0]
    if n < 2:
        raise InsufficientDataError("Copula bandwidth needs at least 2 pairs")
    sds = np.std(z_sample, axis=0, ddof=1)
    if np.any(~(sds > 0)):
        raise DegenerateDataError("Pair-copula sample has a zero-variance coordinate")
    return float(COPULA_BANDWIDTH_FACTOR * np.mean(sds) * n ** (-1.0 / 6.0))


def _check_open_unit(*arrays: np.ndarray) -> None:
    for a in arrays:
        if np.any(~((a > 0.0) & (a < 1.0))):
            raise DomainError("Copula arguments must lie strictly inside (0, 1)")


def fit_pair_copula(pseudo_pairs) -> PairCopulaEstimate:
    pseudo_pairs = np.asarray(pseudo_pairs, dtype=float)
    if pseudo_pairs.ndim != 2 or pseudo_pairs.shape[1] != 2:
        raise ValueError("fit_pair_copula expects an (n, 2) array")
    if pseudo_pairs.shape[0] < 2:
        raise InsufficientDataError("Pair-copula estimation needs at least 2 pairs")
    _check_open_unit(pseudo_pairs)
    z_sample = std_normal_quantile(pseudo_pairs)
    return PairCopulaEstimate(z_sample=z_sample, bandwidth=copula_bandwidth(z_sample))


def _broadcast_args(u, v) -> Tuple[np.ndarray, np.ndarray]:
    u, v = np.broadcast_arrays(np.atleast_1d(np.asarray(u, dtype=float)),
                               np.atleast_1d(np.asarray(v, dtype=float)))
    _check_open_unit(u, v)
    return u.ravel(), v.ravel()


def kernel_sums(
        p: PairCopulaEstimate,
        z_points: np.ndarray,
        quantities: Iterable[str],
        chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Dict[str, np.ndarray]:
    """
    Sums over the sample of kernel products at z-scale points (m, 2).

    quantities:
      "density"  sum K(d1) K(d2)
      "num_12"   sum J(d1) K(d2)   (h of first given second)
      "den_12"   sum K(d2)
      "num_21"   sum K(d1) J(d2)   (h of second given first)
      "den_21"   sum K(d1)
    with d_j = (z_j - Z_j^(i)) / b. Kernel values are not divided by b.
    """
    quantities = tuple(quantities)
    b = p.bandwidth
    z1 = p.z_sample[:, 0]
    z2 = p.z_sample[:, 1]

    def block(points):
        d1 = (points[:, 0:1] - z1[None, :]) / b
        d2 = (points[:, 1:2] - z2[None, :]) / b
        k1 = kernel_eval(d1)
        k2 = kernel_eval(d2)
        out = []
        for name in quantities:
            if name == "density":
                out.append((k1 * k2).sum(axis=1))
            elif name == "num_12":
                out.append((kernel_cdf(d1) * k2).sum(axis=1))
            elif name == "den_12":
                out.append(k2.sum(axis=1))
            elif name == "num_21":
                out.append((k1 * kernel_cdf(d2)).sum(axis=1))
            elif name == "den_21":
                out.append(k1.sum(axis=1))
            else:
                raise ValueError(f"Unknown kernel quantity: {name}")
        return np.stack(out, axis=1)

    sums = chunked_rows(block, np.asarray(z_points, dtype=float).reshape(-1, 2), chunk_size)
    return {name: sums[:, i] for i, name in enumerate(quantities)}


def eval_pair_density(p: PairCopulaEstimate, u, v, chunk_size: int = DEFAULT_CHUNK_SIZE) -> np.ndarray:
    u, v = _broadcast_args(u, v)
    if p.is_independence:
        return np.ones_like(u)
    zu = std_normal_quantile(u)
    zv = std_normal_quantile(v)
    sums = kernel_sums(p, np.column_stack([zu, zv]), ("density",), chunk_size)
    b = p.bandwidth
    return sums["density"] / (p.n * b * b) / (std_normal_pdf(zu) * std_normal_pdf(zv))


def _finish_hfunc(u, num, den, n, b, z_cond, normalized):
    if normalized:
        empty = den <= 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(empty, u, num / np.where(empty, 1.0, den))
        return np.clip(h, 0.0, 1.0), int(np.count_nonzero(empty))
    # literal form: int_0^u c(s, v) ds with the phi(z_v) denominator
    return num / (n * b) / std_normal_pdf(z_cond), 0


def eval_hfunc_counted(
        p: PairCopulaEstimate,
        u,
        v,
        direction: Direction = Direction.FIRST_GIVEN_SECOND,
        normalized: bool = True,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Tuple[np.ndarray, int]:
    """
    h-function at (u, v); u is always the first copula argument and v the second.
    FIRST_GIVEN_SECOND returns h(u | v), SECOND_GIVEN_FIRST returns h(v | u).
    Returns the values and the number of points that fell back to independence.
    """
    u, v = _broadcast_args(u, v)
    direction = Direction(direction)
    if p.is_independence:
        return (u.copy() if direction == Direction.FIRST_GIVEN_SECOND else v.copy()), 0
    zu = std_normal_quantile(u)
    zv = std_normal_quantile(v)
    points = np.column_stack([zu, zv])
    if direction == Direction.FIRST_GIVEN_SECOND:
        sums = kernel_sums(p, points, ("num_12", "den_12"), chunk_size)
        h, fallbacks = _finish_hfunc(u, sums["num_12"], sums["den_12"], p.n, p.bandwidth, zv, normalized)
    else:
        sums = kernel_sums(p, points, ("num_21", "den_21"), chunk_size)
        h, fallbacks = _finish_hfunc(v, sums["num_21"], sums["den_21"], p.n, p.bandwidth, zu, normalized)
    if fallbacks:
        logger.warning(f"h-function denominator vanished at {fallbacks} point(s); using independence")
    return h, fallbacks


def eval_hfunc(
        p: PairCopulaEstimate,
        u,
        v,
        direction: Direction = Direction.FIRST_GIVEN_SECOND,
        normalized: bool = True,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> np.ndarray:
    values, _ = eval_hfunc_counted(p, u, v, direction, normalized, chunk_size)
    return values


def eval_pair_all(
        p: PairCopulaEstimate,
        u,
        v,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """
    Density and both normalized h-functions at (u, v) from one pass over the sample.
    Returns (density, h(u | v), h(v | u), fallback count).
    """
    u, v = _broadcast_args(u, v)
    if p.is_independence:
        return np.ones_like(u), u.copy(), v.copy(), 0
    zu = std_normal_quantile(u)
    zv = std_normal_quantile(v)
    sums = kernel_sums(
        p, np.column_stack([zu, zv]), ("density", "num_12", "den_12", "num_21", "den_21"), chunk_size
    )
    b = p.bandwidth
    density = sums["density"] / (p.n * b * b) / (std_normal_pdf(zu) * std_normal_pdf(zv))
    h12, fb12 = _finish_hfunc(u, sums["num_12"], sums["den_12"], p.n, b, zv, True)
    h21, fb21 = _finish_hfunc(v, sums["num_21"], sums["den_21"], p.n, b, zu, True)
    fallbacks = fb12 + fb21
    if fallbacks:
        logger.warning(f"h-function denominator vanished at {fallbacks} point(s); using independence")
    return density, h12, h21, fallbacks

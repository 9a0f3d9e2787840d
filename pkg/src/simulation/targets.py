# src/simulation/targets.py
"""
Simulation targets with exact samplers and exact densities, all on
standard-normal margins:

  gauss          equicorrelated Gaussian copula
  gumbel         exchangeable d-dimensional Gumbel copula
  nonsimplified  Gaussian D-vine on 0-1-...-(d-1) whose conditional
                 correlations depend on the conditioning values
"""
import logging
from enum import Enum
from typing import List, Union

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, Field
from scipy import special

from ..errors import DomainError

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]
RHO_LIMIT = 1.0 - 1e-12
LOG_2PI = np.log(2.0 * np.pi)
# smallest -log(u) used by the Gumbel density; points with u rounding to 1 are clamped here
MIN_NEG_LOG_U = 1e-300


class ScenarioKind(str, Enum):
    GAUSS = "gauss"
    GUMBEL = "gumbel"
    NONSIMPLIFIED = "nonsimplified"


class ScenarioSpec(BaseModel):
    kind: ScenarioKind
    d: int = Field(..., ge=2)
    tau: float = 0.4

    class Config:
        frozen = True

    @property
    def param(self) -> float:
        return tau_to_param(self.kind, self.tau)


def tau_to_param(kind, tau: float) -> float:
    """Gaussian rho = sin(pi tau / 2); Gumbel theta = 1 / (1 - tau)."""
    kind = ScenarioKind(kind)
    if kind == ScenarioKind.GUMBEL:
        if not 0.0 <= tau < 1.0:
            raise DomainError(f"Gumbel copula needs tau in [0, 1), got {tau}")
        return 1.0 / (1.0 - tau)
    if kind == ScenarioKind.GAUSS:
        if not -1.0 < tau < 1.0:
            raise DomainError(f"Gaussian copula needs tau in (-1, 1), got {tau}")
        return float(np.sin(np.pi * tau / 2.0))
    # the non-simplified vine fixes its own correlation functions
    return 0.0


def _check_spec(spec: ScenarioSpec) -> None:
    if spec.kind == ScenarioKind.GAUSS:
        rho = spec.param
        if rho <= -1.0 / (spec.d - 1):
            raise DomainError(f"Equicorrelation {rho:.4f} is not positive definite for d={spec.d}")
    else:
        tau_to_param(spec.kind, spec.tau)


def _as_points(spec: ScenarioSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.d:
        raise DomainError(f"Expected points with {spec.d} coordinates, got shape {x.shape}")
    return x


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------- gaussian

def equicorrelation_logdet(rho: float, d: int) -> float:
    return (d - 1) * np.log1p(-rho) + np.log1p((d - 1) * rho)


def _gauss_log_density(x: np.ndarray, rho: float) -> np.ndarray:
    # R^-1 = (I - rho / (1 + (d-1) rho) 11') / (1 - rho)
    d = x.shape[1]
    total = x.sum(axis=1)
    quad = ((x * x).sum(axis=1) - rho / (1.0 + (d - 1) * rho) * total * total) / (1.0 - rho)
    return -0.5 * d * LOG_2PI - 0.5 * equicorrelation_logdet(rho, d) - 0.5 * quad


def equicorrelation_matrix(rho: float, d: int) -> np.ndarray:
    return (1.0 - rho) * np.eye(d) + rho * np.ones((d, d))


def _gauss_sample(rng: np.random.Generator, n: int, d: int, rho: float) -> np.ndarray:
    chol = np.linalg.cholesky(equicorrelation_matrix(rho, d))
    return rng.standard_normal((n, d)) @ chol.T


# ------------------------------------------------------------------ gumbel

def gumbel_polynomials(d: int, theta: float) -> List[Polynomial]:
    """
    P_0..P_d with psi^(k)(t) = psi(t) t^-k P_k(t^(1/theta)) for the
    generator psi(t) = exp(-t^(1/theta)):
      P_0 = 1,  P_{k+1}(s) = alpha s (P_k'(s) - P_k(s)) - k P_k(s),  alpha = 1/theta.
    """
    alpha = 1.0 / theta
    s = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for k in range(d):
        p = polys[-1]
        polys.append(alpha * s * (p.deriv() - p) - k * p)
    return polys


def gumbel_generator_derivative(t, k: int, theta: float) -> np.ndarray:
    """k-th derivative of psi(t) = exp(-t^(1/theta)) for t > 0."""
    t = np.asarray(t, dtype=float)
    s = t ** (1.0 / theta)
    return np.exp(-s) * t ** (-float(k)) * gumbel_polynomials(k, theta)[k](s)


def _gumbel_log_density(x: np.ndarray, theta: float) -> np.ndarray:
    d = x.shape[1]
    w = -special.log_ndtr(x)
    clamped = w < MIN_NEG_LOG_U
    if np.any(clamped):
        logger.warning(f"Gumbel density clamped {int(np.count_nonzero(clamped))} coordinate(s) near u = 1")
        w = np.maximum(w, MIN_NEG_LOG_U)
    t = (w ** theta).sum(axis=1)
    s = t ** (1.0 / theta)
    signed = (-1.0) ** d * gumbel_polynomials(d, theta)[d](s)
    log_copula = -s - d * np.log(t) + np.log(signed)
    log_copula += (np.log(theta) + (theta - 1.0) * np.log(w) + w).sum(axis=1)
    margins = -0.5 * (x * x).sum(axis=1) - 0.5 * d * LOG_2PI
    return log_copula + margins


def positive_stable(rng: np.random.Generator, n: int, alpha: float) -> np.ndarray:
    """Chambers-Mallows-Stuck draws with Laplace transform exp(-s^alpha)."""
    angle = rng.uniform(0.0, np.pi, n)
    expo = rng.standard_exponential(n)
    left = np.sin(alpha * angle) / np.sin(angle) ** (1.0 / alpha)
    right = (np.sin((1.0 - alpha) * angle) / expo) ** ((1.0 - alpha) / alpha)
    return left * right


def _normal_from_neg_log_u(w: np.ndarray) -> np.ndarray:
    # Phi^-1(exp(-w)) without losing the upper tail
    upper = w < np.log(2.0)
    out = np.empty_like(w)
    out[upper] = -special.ndtri(-np.expm1(-w[upper]))
    out[~upper] = special.ndtri(np.exp(-w[~upper]))
    return out


def _gumbel_sample(rng: np.random.Generator, n: int, d: int, theta: float) -> np.ndarray:
    alpha = 1.0 / theta
    v = positive_stable(rng, n, alpha)
    e = rng.standard_exponential((n, d))
    w = (e / v[:, None]) ** alpha
    return _normal_from_neg_log_u(w)


# ----------------------------------------------------------- nonsimplified

def nonsimplified_rho(u_cond) -> np.ndarray:
    """rho(u_D) = 1 - (2/|D|) sum_j u_j, evaluated row-wise on an (m, |D|) array."""
    u_cond = np.asarray(u_cond, dtype=float)
    if u_cond.ndim == 1:
        u_cond = u_cond[None, :]
    rho = 1.0 - 2.0 * u_cond.mean(axis=1)
    return np.clip(rho, -RHO_LIMIT, RHO_LIMIT)


def _gauss_pair_log_density(za: np.ndarray, zb: np.ndarray, rho: np.ndarray) -> np.ndarray:
    one_minus = 1.0 - rho * rho
    return -0.5 * np.log(one_minus) - (rho * rho * (za * za + zb * zb) - 2.0 * rho * za * zb) / (2.0 * one_minus)


def _dvine_rho(u: np.ndarray, i: int, m: int) -> np.ndarray:
    if m == 1:
        return np.zeros(u.shape[0])
    return nonsimplified_rho(u[:, i + 1:i + m])


def _nonsimplified_log_density(x: np.ndarray) -> np.ndarray:
    # conditional CDFs are carried on the normal scale, so no clamping is needed
    n, d = x.shape
    u = special.ndtr(x)
    fwd = [x[:, i].copy() for i in range(d)]
    bwd = [x[:, i].copy() for i in range(d)]
    log_f = -0.5 * (x * x).sum(axis=1) - 0.5 * d * LOG_2PI
    for m in range(1, d):
        new_fwd, new_bwd = [], []
        for i in range(d - m):
            a, b = fwd[i], bwd[i + 1]
            rho = _dvine_rho(u, i, m)
            root = np.sqrt(1.0 - rho * rho)
            log_f = log_f + _gauss_pair_log_density(a, b, rho)
            new_fwd.append((a - rho * b) / root)
            new_bwd.append((b - rho * a) / root)
        fwd, bwd = new_fwd, new_bwd
    return log_f


def _nonsimplified_sample(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.standard_normal((n, d))
    x = np.empty((n, d))
    u = np.empty((n, d))
    # fwd[m][i] = z of F(u_i | u_{i+1..i+m}), bwd[m][i] = z of F(u_{i+m} | u_{i..i+m-1})
    fwd: List[dict] = [dict() for _ in range(d)]
    bwd: List[dict] = [dict() for _ in range(d)]
    for k in range(d):
        v = g[:, k]
        for m in range(k, 0, -1):
            i = k - m
            rho = _dvine_rho(u, i, m)
            v = v * np.sqrt(1.0 - rho * rho) + rho * fwd[m - 1][i]
        x[:, k] = v
        u[:, k] = special.ndtr(v)
        fwd[0][k] = v
        bwd[0][k] = v
        for m in range(1, k + 1):
            i = k - m
            a, b = fwd[m - 1][i], bwd[m - 1][i + 1]
            rho = _dvine_rho(u, i, m)
            root = np.sqrt(1.0 - rho * rho)
            fwd[m][i] = (a - rho * b) / root
            bwd[m][i] = (b - rho * a) / root
    return x


# ----------------------------------------------------------------- public

def log_true_density(spec: ScenarioSpec, x) -> np.ndarray:
    _check_spec(spec)
    x = _as_points(spec, x)
    if spec.kind == ScenarioKind.GAUSS:
        return _gauss_log_density(x, spec.param)
    if spec.kind == ScenarioKind.GUMBEL:
        return _gumbel_log_density(x, spec.param)
    return _nonsimplified_log_density(x)


def true_density(spec: ScenarioSpec, x) -> np.ndarray:
    """Exact joint density (copula times standard-normal margins) at each row of x."""
    return np.exp(log_true_density(spec, x))


def sample(spec: ScenarioSpec, n: int, seed: SeedLike) -> np.ndarray:
    """n draws from the scenario; identical for identical seeds."""
    _check_spec(spec)
    if n < 1:
        raise DomainError(f"Sample size must be at least 1, got {n}")
    rng = _rng(seed)
    if spec.kind == ScenarioKind.GAUSS:
        return _gauss_sample(rng, n, spec.d, spec.param)
    if spec.kind == ScenarioKind.GUMBEL:
        return _gumbel_sample(rng, n, spec.d, spec.param)
    return _nonsimplified_sample(rng, n, spec.d)

# src/evaluation/benchmark.py
"""
Benchmark harness: integrated absolute error by importance sampling,
Mood's median test, and replicate / grid runners comparing the vine
estimator with the classical product-kernel estimator.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy import stats

from ..errors import EstimationError, VineKDEError
from ..estimation.baseline import mvkde_baseline
from ..estimation.vinefit import FitOptions, eval_vine_density, fit_vine
from ..simulation.targets import ScenarioSpec, SeedLike, sample, true_density

logger = logging.getLogger(__name__)

DensityFn = Callable[[np.ndarray], np.ndarray]


class MoodResult(BaseModel):
    statistic: Optional[float]
    p_value: Optional[float]


class ReplicateFailure(BaseModel):
    replicate: int
    seed: int
    message: str


class BenchmarkReport(BaseModel):
    scenario: str
    d: int
    n: int
    tau: float
    replicates: int
    requested_replicates: int
    mc_samples: int
    seed: int
    seeds: List[int]
    iae_vine: List[float]
    iae_mvkde: List[float]
    median_vine: Optional[float]
    median_mvkde: Optional[float]
    mood_statistic: Optional[float]
    mood_p_value: Optional[float]
    significance_level: float
    significant: Optional[bool]
    failures: List[ReplicateFailure] = []
    wall_clock_seconds: Optional[float] = None


def importance_sample(truth: ScenarioSpec, n_mc: int, seed: SeedLike) -> Tuple[np.ndarray, np.ndarray]:
    """Draw evaluation points from the truth; returns (points, true densities)."""
    if n_mc < 1:
        raise EstimationError("Importance sampling needs at least one draw")
    points = sample(truth, n_mc, seed)
    densities = true_density(truth, points)
    if np.any(~(densities > 0)):
        raise EstimationError("True density vanished at a sampled point")
    return points, densities


def iae_from_values(estimates, truths) -> float:
    estimates = np.asarray(estimates, dtype=float)
    truths = np.asarray(truths, dtype=float)
    return float(np.mean(np.abs(estimates / truths - 1.0)))


def iae_importance_sampling(estimate: DensityFn, truth: ScenarioSpec, n_mc: int, seed: SeedLike) -> float:
    """
    IAE = int |f_hat - f| estimated as (1/N) sum |f_hat(X_i) / f(X_i) - 1|
    with X_i drawn from f.
    """
    points, densities = importance_sample(truth, n_mc, seed)
    return iae_from_values(estimate(points), densities)


def moods_median_test(a: Sequence[float], b: Sequence[float]) -> MoodResult:
    """Chi-square test on above/not-above pooled-median counts, no continuity correction."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        return MoodResult(statistic=None, p_value=None)
    try:
        statistic, p_value, _, _ = stats.median_test(a, b, ties="below", correction=False)
    except ValueError:
        # every value on one side of the pooled median
        return MoodResult(statistic=0.0, p_value=1.0)
    return MoodResult(statistic=float(statistic), p_value=float(p_value))


def _median(values: List[float]) -> Optional[float]:
    return float(np.median(values)) if values else None


def replicate_seeds(seed: int, count: int) -> List[int]:
    """Independent 64-bit seeds derived from (seed, replicate index)."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def _run_replicate(
        spec: ScenarioSpec, n: int, mc_samples: int, replicate_seed: int, fit_options: FitOptions
) -> Tuple[float, float]:
    data_seq, mc_seq = np.random.SeedSequence(replicate_seed).spawn(2)
    data = sample(spec, n, data_seq)
    model = fit_vine(data, fit_options)
    baseline = mvkde_baseline(data)
    points, densities = importance_sample(spec, mc_samples, mc_seq)
    iae_vine = iae_from_values(eval_vine_density(model, points, fit_options.chunk_size), densities)
    iae_mvkde = iae_from_values(baseline(points, fit_options.chunk_size), densities)
    return iae_vine, iae_mvkde


def run_scenario(
        spec: ScenarioSpec,
        n: int,
        replicates: int,
        mc_samples: int,
        seed: int,
        fit_options: Optional[FitOptions] = None,
        threads: int = 1,
        significance_level: float = 0.01,
) -> BenchmarkReport:
    """
    Independent replicates of: sample, fit vine and baseline, IAE of both on
    a shared evaluation set. The structure is selected afresh each replicate.
    Replicate errors are recorded as failures and do not abort the run.
    """
    if replicates < 1:
        raise EstimationError("At least one replicate is required")
    fit_options = (fit_options or FitOptions()).copy(update={"threads": 1})
    seeds = replicate_seeds(seed, replicates)
    started = time.perf_counter()

    def run(index: int):
        try:
            result = _run_replicate(spec, n, mc_samples, seeds[index], fit_options)
            logger.info(
                f"Replicate {index + 1}/{replicates} ({spec.kind.value}, d={spec.d}, n={n}): "
                f"IAE vine={result[0]:.4f}, mvkde={result[1]:.4f}"
            )
            return result
        except (VineKDEError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            logger.error(f"Replicate {index + 1}/{replicates} failed (seed {seeds[index]}): {e}")
            return e

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            outcomes = list(executor.map(run, range(replicates)))
    else:
        outcomes = [run(i) for i in range(replicates)]

    iae_vine: List[float] = []
    iae_mvkde: List[float] = []
    completed_seeds: List[int] = []
    failures: List[ReplicateFailure] = []
    for index, outcome in enumerate(outcomes):
        if isinstance(outcome, Exception):
            failures.append(ReplicateFailure(replicate=index, seed=seeds[index], message=str(outcome)))
            continue
        iae_vine.append(outcome[0])
        iae_mvkde.append(outcome[1])
        completed_seeds.append(seeds[index])

    mood = moods_median_test(iae_vine, iae_mvkde)
    return BenchmarkReport(
        scenario=spec.kind.value,
        d=spec.d,
        n=n,
        tau=spec.tau,
        replicates=len(iae_vine),
        requested_replicates=replicates,
        mc_samples=mc_samples,
        seed=seed,
        seeds=completed_seeds,
        iae_vine=iae_vine,
        iae_mvkde=iae_mvkde,
        median_vine=_median(iae_vine),
        median_mvkde=_median(iae_mvkde),
        mood_statistic=mood.statistic,
        mood_p_value=mood.p_value,
        significance_level=significance_level,
        significant=None if mood.p_value is None else mood.p_value < significance_level,
        failures=failures,
        wall_clock_seconds=time.perf_counter() - started,
    )


def run_grid(
        scenarios: Sequence[str],
        dimensions: Sequence[int],
        sample_sizes: Sequence[int],
        replicates: int,
        mc_samples: int,
        seed: int,
        tau: float = 0.4,
        fit_options: Optional[FitOptions] = None,
        threads: int = 1,
        significance_level: float = 0.01,
) -> List[BenchmarkReport]:
    """One report per (scenario, d, n) cell, each with its own derived seed."""
    cells = [(s, d, n) for s in scenarios for d in dimensions for n in sample_sizes]
    cell_seeds = replicate_seeds(seed, len(cells))
    reports = []
    for (scenario, d, n), cell_seed in zip(cells, cell_seeds):
        spec = ScenarioSpec(kind=scenario, d=d, tau=tau)
        logger.info(f"Grid cell: scenario={scenario}, d={d}, n={n}, seed={cell_seed}")
        reports.append(run_scenario(
            spec, n, replicates, mc_samples, cell_seed,
            fit_options=fit_options, threads=threads, significance_level=significance_level,
        ))
    return reports

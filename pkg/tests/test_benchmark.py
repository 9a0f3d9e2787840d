# tests/test_benchmark.py
import numpy as np
import pytest

import src.evaluation.benchmark as benchmark
from src.errors import EstimationError, ValidationError
from src.estimation.baseline import mvkde_bandwidths, mvkde_baseline
from src.estimation.numerics import NORMAL_REFERENCE_CONSTANT
from src.evaluation.benchmark import (
    iae_from_values,
    iae_importance_sampling,
    importance_sample,
    moods_median_test,
    replicate_seeds,
    run_grid,
    run_scenario,
)
from src.simulation.targets import ScenarioSpec, sample, true_density

SMALL = ScenarioSpec(kind="gauss", d=2, tau=0.4)


# IAE

def test_exact_estimate_has_zero_iae():
    assert iae_importance_sampling(lambda x: true_density(SMALL, x), SMALL, 500, seed=1) == 0.0


def test_iae_of_scaled_estimate():
    assert iae_importance_sampling(lambda x: 1.5 * true_density(SMALL, x), SMALL, 500, seed=1) == pytest.approx(0.5)
    assert iae_from_values([1.0, 3.0], [2.0, 2.0]) == pytest.approx(0.5)


def test_importance_sampling_needs_draws():
    with pytest.raises(EstimationError):
        iae_importance_sampling(lambda x: x[:, 0], SMALL, 0, seed=1)


# Mood's median test

def test_moods_test_separated_groups():
    result = moods_median_test([1, 2, 3, 4], [5, 6, 7, 8])
    assert result.statistic == pytest.approx(8.0)
    assert result.p_value == pytest.approx(0.004678, abs=1e-6)


def test_moods_test_is_symmetric():
    a = [0.3, 0.1, 0.5, 0.7, 0.2]
    b = [0.4, 0.9, 0.8, 0.6, 0.35]
    assert moods_median_test(a, b) == moods_median_test(b, a)


def test_moods_test_needs_two_values_per_group():
    result = moods_median_test([0.1], [0.2, 0.3])
    assert result.statistic is None and result.p_value is None


def test_moods_test_with_all_values_tied():
    result = moods_median_test([1.0, 1.0], [1.0, 1.0])
    assert result.statistic == 0.0
    assert result.p_value == 1.0


# baseline

def test_baseline_single_point_gives_kernel_peak():
    kde = mvkde_baseline(np.zeros((1, 3)), bandwidths=[1.0, 1.0, 1.0])
    assert kde(np.zeros(3))[0] == pytest.approx((15 / 16) ** 3)


def test_baseline_near_standard_normal_peak():
    data = np.random.default_rng(3).standard_normal((20000, 2))
    kde = mvkde_baseline(data)
    assert kde([0.0, 0.0])[0] == pytest.approx(1 / (2 * np.pi), abs=0.016)


def test_baseline_bandwidth_rule():
    data = np.random.default_rng(4).standard_normal((500, 3))
    bandwidths = mvkde_bandwidths(data)
    column = data[:, 0]
    q75, q25 = np.percentile(column, [75, 25])
    scale = min(np.std(column, ddof=1), (q75 - q25) / 1.349)
    assert bandwidths[0] == pytest.approx(NORMAL_REFERENCE_CONSTANT * scale * 500 ** (-1 / 7))
    halved = mvkde_baseline(data, bandwidth_multiplier=0.5)
    assert np.allclose(halved.bandwidths, bandwidths / 2)


def test_baseline_rejects_bad_bandwidths():
    with pytest.raises(ValidationError):
        mvkde_baseline(np.zeros((20, 2)), bandwidths=[1.0, 0.0])


# runners

def test_replicate_seeds_are_stable_and_distinct():
    seeds = replicate_seeds(42, 5)
    assert seeds == replicate_seeds(42, 5)
    assert len(set(seeds)) == 5
    assert replicate_seeds(42, 3) == seeds[:3]


def test_single_replicate_report():
    report = run_scenario(SMALL, n=100, replicates=1, mc_samples=200, seed=9)
    assert report.replicates == 1
    assert len(report.iae_vine) == len(report.iae_mvkde) == 1
    assert report.mood_statistic is None
    assert report.significant is None
    assert report.median_vine == report.iae_vine[0]
    assert report.failures == []


def test_run_scenario_is_deterministic_across_thread_counts():
    first = run_scenario(SMALL, n=80, replicates=3, mc_samples=150, seed=21)
    again = run_scenario(SMALL, n=80, replicates=3, mc_samples=150, seed=21, threads=3)
    assert first.iae_vine == again.iae_vine
    assert first.iae_mvkde == again.iae_mvkde
    assert first.seeds == again.seeds == replicate_seeds(21, 3)
    assert first.mood_statistic == again.mood_statistic


def test_failed_replicates_are_recorded(monkeypatch):
    real_fit = benchmark.fit_vine
    calls = {"count": 0}

    def flaky_fit(data, options=None):
        calls["count"] += 1
        if calls["count"] == 1:
            raise EstimationError("synthetic failure")
        return real_fit(data, options)

    monkeypatch.setattr(benchmark, "fit_vine", flaky_fit)
    report = run_scenario(SMALL, n=60, replicates=3, mc_samples=100, seed=2)
    assert report.requested_replicates == 3
    assert report.replicates == 2
    assert [f.replicate for f in report.failures] == [0]
    assert "synthetic failure" in report.failures[0].message
    assert report.seeds == replicate_seeds(2, 3)[1:]


def test_all_replicates_failing(monkeypatch):
    def broken_fit(data, options=None):
        raise EstimationError("nope")

    monkeypatch.setattr(benchmark, "fit_vine", broken_fit)
    report = run_scenario(SMALL, n=60, replicates=2, mc_samples=100, seed=2)
    assert report.replicates == 0
    assert report.median_vine is None
    assert report.mood_p_value is None
    assert len(report.failures) == 2


def test_run_grid_cells():
    reports = run_grid(["gauss", "gumbel"], [2], [60], replicates=1, mc_samples=100, seed=5)
    assert [(r.scenario, r.d, r.n) for r in reports] == [("gauss", 2, 60), ("gumbel", 2, 60)]
    assert reports[0].seed != reports[1].seed


@pytest.mark.slow
def test_nonsimplified_scenario_runs_end_to_end():
    report = run_scenario(ScenarioSpec(kind="nonsimplified", d=3), n=500, replicates=5, mc_samples=1000, seed=7)
    assert report.replicates == 5
    assert all(np.isfinite(report.iae_vine))


@pytest.mark.slow
def test_vine_beats_classical_estimator_in_three_dimensions():
    report = run_scenario(ScenarioSpec(kind="gauss", d=3), n=500, replicates=20, mc_samples=1000, seed=1)
    assert report.replicates == 20
    assert report.median_vine < report.median_mvkde


@pytest.mark.slow
def test_vine_error_grows_slower_with_dimension():
    low = run_scenario(ScenarioSpec(kind="gauss", d=3), n=1000, replicates=10, mc_samples=1000, seed=3)
    high = run_scenario(ScenarioSpec(kind="gauss", d=5), n=1000, replicates=10, mc_samples=1000, seed=3)
    vine_ratio = high.median_vine / low.median_vine
    mvkde_ratio = high.median_mvkde / low.median_mvkde
    assert vine_ratio < 2.0
    assert mvkde_ratio > vine_ratio


@pytest.mark.slow
def test_vine_significantly_better_on_gumbel_in_five_dimensions():
    report = run_scenario(ScenarioSpec(kind="gumbel", d=5), n=1000, replicates=20, mc_samples=1000, seed=1)
    assert report.median_vine < report.median_mvkde
    assert report.mood_p_value < 0.05
    assert report.significant


@pytest.mark.slow
def test_baseline_importance_sampling_mass_is_one():
    spec = ScenarioSpec(kind="gauss", d=3)
    kde = mvkde_baseline(sample(spec, 1000, seed=41))
    points, truth = importance_sample(spec, 2000, seed=42)
    assert np.mean(kde(points) / truth) == pytest.approx(1.0, abs=0.05)

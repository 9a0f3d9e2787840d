# tests/test_vinefit.py
import dataclasses

import numpy as np
import pytest

from src.errors import DegenerateDataError, DimensionMismatchError, InsufficientDataError, ValidationError
from src.estimation.numerics import clamp_probabilities
from src.estimation.paircop import Direction, eval_hfunc, eval_pair_density, independence_copula
from src.estimation.structure import from_edge_lists, validate_structure
from src.estimation.vinefit import FitOptions, describe_model, eval_vine_density, fit_vine, vine_factors
from src.evaluation.benchmark import importance_sample, iae_from_values
from src.simulation.targets import ScenarioSpec, sample

GAUSS3 = ScenarioSpec(kind="gauss", d=3, tau=0.4)


def test_two_dim_fit_has_one_pair_copula():
    data = sample(ScenarioSpec(kind="gauss", d=2), 200, seed=1)
    model = fit_vine(data)
    assert len(model.pair_copulas) == 1
    assert model.n_factors == 3
    assert model.structure.trees[0][0].conditioned == (0, 1)


def test_counts_and_meta(fitted_model3):
    assert len(fitted_model3.margins) == 3
    assert len(fitted_model3.pair_copulas) == 3
    assert validate_structure(fitted_model3.structure) is None
    assert fitted_model3.meta["n"] == 300
    assert fitted_model3.meta["clamp_lower"] == pytest.approx(1 / 301)
    assert fitted_model3.meta["clamp_upper"] == pytest.approx(300 / 301)
    assert all(m.n == 300 for m in fitted_model3.margins)


def test_fit_on_supplied_five_dim_structure(five_dim_structure):
    data = sample(ScenarioSpec(kind="gauss", d=5), 200, seed=3)
    model = fit_vine(data, structure=five_dim_structure)
    assert model.structure == five_dim_structure
    assert len(model.pair_copulas) == 10
    assert vine_factors(model, data[:5]).shape == (5, 15)


def test_independence_test_flags_independent_pairs():
    flagged = []
    for seed in (1, 2, 3):
        data = np.random.default_rng(seed).uniform(size=(2000, 3))
        model = fit_vine(data, FitOptions(independence_test=True))
        flagged.append(sum(p.is_independence for p in model.pair_copulas))
    assert all(count >= 2 for count in flagged)


def test_independence_copulas_reduce_to_product_of_margins(fitted_model3, gauss3_sample):
    independent = dataclasses.replace(
        fitted_model3, pair_copulas=tuple(independence_copula() for _ in fitted_model3.pair_copulas)
    )
    x = gauss3_sample[:20]
    margins = np.prod([m.pdf(x[:, j]) for j, m in enumerate(independent.margins)], axis=0)
    assert np.allclose(eval_vine_density(independent, x), margins, rtol=1e-14, atol=0)


def test_density_is_product_of_hand_composed_factors():
    data = sample(GAUSS3, 400, seed=12)
    path = from_edge_lists(3, [[(0, 1), (1, 2)], [(0, 1)]])
    model = fit_vine(data, structure=path)
    p01, p12, p02 = model.pair_copulas
    assert model.structure.trees[1][0].conditioned == (0, 2)

    x = data[:25] * 0.9
    n = model.n
    u = [clamp_probabilities(m.cdf(x[:, j]), n) for j, m in enumerate(model.margins)]
    a = clamp_probabilities(eval_hfunc(p01, u[0], u[1], Direction.FIRST_GIVEN_SECOND), n)
    b = clamp_probabilities(eval_hfunc(p12, u[1], u[2], Direction.SECOND_GIVEN_FIRST), n)
    expected = (
        eval_pair_density(p01, u[0], u[1])
        * eval_pair_density(p12, u[1], u[2])
        * eval_pair_density(p02, a, b)
        * np.prod([m.pdf(x[:, j]) for j, m in enumerate(model.margins)], axis=0)
    )
    assert np.allclose(eval_vine_density(model, x), expected, rtol=1e-12)


def test_importance_sampling_mass_is_one():
    model = fit_vine(sample(GAUSS3, 1000, seed=31))
    points, truth = importance_sample(GAUSS3, 2000, seed=32)
    assert np.mean(eval_vine_density(model, points) / truth) == pytest.approx(1.0, abs=0.05)


def test_density_positive_on_training_points(fitted_model3, gauss3_sample):
    assert np.all(eval_vine_density(fitted_model3, gauss3_sample) > 0)


def test_pair_factor_vanishes_away_from_the_sample():
    # strongly dependent pairs leave the anti-diagonal corner empty
    data = sample(ScenarioSpec(kind="gauss", d=2, tau=0.8), 500, seed=5)
    model = fit_vine(data)
    factors = vine_factors(model, [2.0, -2.0])
    assert np.all(factors[0, :2] > 0)
    assert factors[0, 2] == 0.0
    assert eval_vine_density(model, [2.0, -2.0])[0] == 0.0


def test_single_point_and_dimension_mismatch(fitted_model3):
    assert eval_vine_density(fitted_model3, [0.1, 0.2, 0.3]).shape == (1,)
    with pytest.raises(DimensionMismatchError):
        eval_vine_density(fitted_model3, [0.1, 0.2])


def test_permuting_columns_leaves_density_unchanged():
    data = sample(ScenarioSpec(kind="gumbel", d=2), 300, seed=5)
    model = fit_vine(data)
    swapped = fit_vine(data[:, ::-1])
    x = data[:30] + 0.05
    assert np.allclose(eval_vine_density(swapped, x[:, ::-1]), eval_vine_density(model, x), rtol=1e-12)


def test_thread_count_does_not_change_results(gauss3_sample):
    serial = fit_vine(gauss3_sample, FitOptions(threads=1))
    parallel = fit_vine(gauss3_sample, FitOptions(threads=3))
    assert serial.structure == parallel.structure
    assert np.array_equal(
        eval_vine_density(serial, gauss3_sample, threads=1),
        eval_vine_density(parallel, gauss3_sample, threads=4),
    )


def test_literal_hfunc_option():
    data = sample(GAUSS3, 200, seed=41)
    model = fit_vine(data, FitOptions(hfunc_normalized=False))
    assert model.meta["hfunc_normalized"] is False
    assert np.all(eval_vine_density(model, data[:20]) > 0)


def test_fit_preconditions():
    with pytest.raises(InsufficientDataError):
        fit_vine(np.random.default_rng(0).standard_normal((9, 3)))
    with pytest.raises(ValidationError):
        fit_vine(np.random.default_rng(0).standard_normal((50, 1)))
    data = np.random.default_rng(0).standard_normal((50, 3))
    data[:, 1] = 4.0
    with pytest.raises(DegenerateDataError) as excinfo:
        fit_vine(data)
    assert excinfo.value.column == 1
    assert "Column 1" in str(excinfo.value)


def test_structure_dimension_must_match(five_dim_structure):
    with pytest.raises(DimensionMismatchError):
        fit_vine(sample(GAUSS3, 50, seed=1), structure=five_dim_structure)


def test_describe_model(fitted_model3):
    summary = describe_model(fitted_model3)
    assert summary["d"] == 3
    assert len(summary["edges"]) == 3
    assert summary["edges"][-1]["tree"] == 2


@pytest.mark.slow
def test_error_shrinks_with_sample_size():
    medians = {}
    for n in (500, 2000):
        errors = []
        for rep in range(10):
            model = fit_vine(sample(GAUSS3, n, seed=1000 + rep))
            points, truth = importance_sample(GAUSS3, 1000, seed=2000 + rep)
            errors.append(iae_from_values(eval_vine_density(model, points), truth))
        medians[n] = np.median(errors)
    assert medians[2000] < medians[500]

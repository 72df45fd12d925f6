import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.chain_model import transition_matrix
from core.cohort_simulator import simulate_panel
from core.exceptions import EstimationInputError, NonConvergenceError
from core.models import AnalysisConfig, PanelDataset, RateVector, SimulationConfig, TransitionCountTable
from core.panel_estimation import fit_panel
from core.panel_likelihood import (
    crude_rates, estimate_interval_likelihood, inverse_information, panel_log_likelihood, score_and_information,
    transition_derivatives,
)


def test_crude_rates_divide_by_gap(nafld_tables):
    theta = crude_rates(nafld_tables[2])
    assert_allclose(theta.as_array(), [30 / 222, 1 / 222, 2 / 78, 13 / 78, 4 / 78])


def test_crude_rates_need_both_rows():
    counts = np.zeros((4, 4), dtype=int)
    counts[0] = [5, 1, 0, 0]
    with pytest.raises(EstimationInputError):
        crude_rates(TransitionCountTable(1, counts))


def test_transition_derivatives_match_finite_differences(theta_hat):
    h = 1e-6
    for t in (0.5, 1.0, 3.0):
        p, dp = transition_derivatives(theta_hat, t)
        assert_allclose(p, transition_matrix(theta_hat, t).p, atol=1e-12)
        base = theta_hat.as_array()
        for k in range(5):
            up, down = base.copy(), base.copy()
            up[k] += h
            down[k] -= h
            numeric = (
                transition_matrix(RateVector.from_array(up), t).p
                - transition_matrix(RateVector.from_array(down), t).p
            ) / (2 * h)
            assert_allclose(dp[k], numeric, atol=1e-7)


def test_log_likelihood_of_impossible_cell():
    counts = np.zeros((4, 4), dtype=int)
    counts[0] = [10, 0, 2, 0]
    counts[1] = [0, 5, 0, 0]
    theta = RateVector(0.0, 0.0, 0.0, 0.0, 0.0)
    assert panel_log_likelihood(theta, TransitionCountTable(1, counts)) == -np.inf


def test_likelihood_estimate_is_a_local_maximum(nafld_tables):
    table = nafld_tables[1]
    theta, iterations, delta_norm = estimate_interval_likelihood(table, crude_rates(table))
    assert delta_norm < 1e-6
    assert iterations <= 50
    best = panel_log_likelihood(theta, table)
    base = theta.as_array()
    for k in range(5):
        for step in (-1e-3, 1e-3):
            moved = base.copy()
            moved[k] += step
            assert panel_log_likelihood(RateVector.from_array(moved), table) < best
    score, _ = score_and_information(theta, table)
    assert np.max(np.abs(score)) < 1.0


def test_likelihood_beats_proportions_on_annual_table(nafld_tables):
    table = nafld_tables[1]
    theta, _, _ = estimate_interval_likelihood(table, crude_rates(table))
    best = panel_log_likelihood(theta, table)
    assert best >= panel_log_likelihood(crude_rates(table), table)
    scaled = fit_panel(PanelDataset((table,))).per_interval[1].theta
    assert best >= panel_log_likelihood(scaled, table)


def test_inverse_information_is_positive_definite(theta_hat, nafld_tables):
    cov = inverse_information(theta_hat, nafld_tables[1])
    assert_allclose(cov, cov.T)
    assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_likelihood_non_convergence(nafld_tables):
    table = nafld_tables[1]
    with pytest.raises(NonConvergenceError) as info:
        estimate_interval_likelihood(table, crude_rates(table), tol=1e-300, max_iter=1)
    assert len(info.value.trace) == 1
    assert "log_likelihood" in info.value.trace[0]


def test_fit_panel_with_likelihood(nafld_dataset):
    result = fit_panel(nafld_dataset, AnalysisConfig(estimator="likelihood"))
    assert result.estimator == "likelihood"
    assert np.all(result.pooled_theta.as_array() > 0)
    assert np.all(np.linalg.eigvalsh(result.pooled_covariance) > 0)
    for estimate in result.per_interval.values():
        assert np.isfinite(estimate.log_likelihood)


@pytest.mark.slow
def test_likelihood_recovers_simulated_rates(theta_hat):
    dataset, _ = simulate_panel(theta_hat, SimulationConfig(subjects=5000, visits=8, seed=11))
    assert dataset.delta_ts == [1]
    result = fit_panel(dataset, AnalysisConfig(estimator="likelihood"))
    sigma = np.sqrt(np.diag(result.pooled_covariance))
    error = np.abs(result.pooled_theta.as_array() - theta_hat.as_array())
    assert np.all(error < 4 * sigma)

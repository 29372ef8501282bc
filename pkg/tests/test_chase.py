"""Pointer-chase baseline: formulas, simulation agreement, comparison rows."""

import math

import pytest

from hbf import (
    ChaseModel,
    HbfQueryStats,
    InvalidArgumentError,
    chase_expected_time,
    chase_expected_time_repeat,
    chase_simulate,
    chase_success_prob,
    compare_report,
)


def test_success_prob_values():
    assert chase_success_prob(ChaseModel(1.0, 7, 1.0)) == 1.0
    assert chase_success_prob(ChaseModel(0.3, 1, 1.0)) == 0.3
    assert chase_success_prob(ChaseModel(0.9, 10, 1.0)) == pytest.approx(
        0.3486784401, abs=1e-10
    )


def test_expected_time_linear():
    assert chase_expected_time(ChaseModel(0.5, 10, 1.0)) == 10.0
    assert chase_expected_time(ChaseModel(0.5, 4, 0.5)) == 2.0
    assert chase_expected_time(ChaseModel(0.5, 8, 1.0)) == 2 * chase_expected_time(
        ChaseModel(0.5, 4, 1.0)
    )


def test_expected_time_repeat_values():
    assert chase_expected_time_repeat(ChaseModel(1.0, 5, 2.0)) == 10.0
    assert chase_expected_time_repeat(ChaseModel(0.9, 10, 1.0)) == pytest.approx(
        28.6797, abs=1e-4
    )


def test_expected_time_repeat_dominates_single():
    for p in (0.2, 0.7, 0.99):
        model = ChaseModel(p, 6, 1.0)
        assert chase_expected_time_repeat(model) > chase_expected_time(model)
    exact = ChaseModel(1.0, 6, 1.0)
    assert chase_expected_time_repeat(exact) == chase_expected_time(exact)


def test_expected_time_repeat_superlinear_in_ell():
    times = [chase_expected_time_repeat(ChaseModel(0.8, ell, 1.0)) for ell in (2, 4, 8)]
    assert times[1] > 2 * times[0]
    assert times[2] > 2 * times[1]


def test_expected_time_repeat_overflow_flag():
    # p^ell underflows to zero: report +inf instead of raising
    assert math.isinf(chase_expected_time_repeat(ChaseModel(1e-300, 2, 1.0)))


def test_model_validation():
    with pytest.raises(InvalidArgumentError):
        ChaseModel(0.0, 5, 1.0)
    with pytest.raises(InvalidArgumentError):
        ChaseModel(1.5, 5, 1.0)
    with pytest.raises(InvalidArgumentError):
        ChaseModel(0.5, 0, 1.0)
    with pytest.raises(InvalidArgumentError):
        ChaseModel(0.5, 5, 0.0)


def test_simulate_certain_success():
    stats = chase_simulate(ChaseModel(1.0, 4, 1.0), trials=500, seed=1)
    assert stats.success_rate == 1.0
    assert stats.mean_attempts == 1.0
    assert stats.mean_total_time == 4.0
    assert stats.truncated_trials == 0


def test_simulate_matches_analytics_within_3_sigma():
    model = ChaseModel(0.9, 10, 1.0)
    trials = 100_000
    stats = chase_simulate(model, trials=trials, seed=17)
    p_walk = chase_success_prob(model)
    se_rate = math.sqrt(p_walk * (1 - p_walk) / trials)
    assert abs(stats.success_rate - p_walk) <= 3 * se_rate
    # attempts are geometric: variance (1-p)/p^2
    se_attempts = math.sqrt((1 - p_walk) / p_walk**2 / trials)
    assert abs(stats.mean_attempts - 1 / p_walk) <= 3 * se_attempts
    expected_time = chase_expected_time_repeat(model)
    assert abs(stats.mean_total_time - expected_time) <= 3 * se_attempts * 10.0


def test_simulate_deterministic_per_seed():
    model = ChaseModel(0.7, 5, 2.0)
    a = chase_simulate(model, trials=2000, seed=5)
    b = chase_simulate(model, trials=2000, seed=5)
    c = chase_simulate(model, trials=2000, seed=6)
    assert a == b
    assert a != c


def test_simulate_truncation_flag():
    model = ChaseModel(0.05, 8, 1.0)  # walk success ~ 4e-11
    stats = chase_simulate(model, trials=200, seed=3, max_attempts=5)
    assert stats.truncated_trials > 0
    assert stats.mean_attempts <= 5.0


def test_simulate_validation():
    with pytest.raises(InvalidArgumentError):
        chase_simulate(ChaseModel(0.5, 2, 1.0), trials=0, seed=1)
    with pytest.raises(InvalidArgumentError):
        chase_simulate(ChaseModel(0.5, 2, 1.0), trials=10, seed=1, max_attempts=0)


def test_compare_report_shape():
    model = ChaseModel(0.99, 20, 1.0)
    stats = chase_simulate(model, trials=5000, seed=9)
    hbf = HbfQueryStats(accuracy=0.999, trials=1000, seed=4)
    rows = compare_report(hbf, model, stats)
    assert [r.system for r in rows] == ["hbf", "pointer-chase"]
    one_shot, baseline = rows
    assert one_shot.ell == 1
    assert baseline.ell == 20
    assert baseline.success_prob == pytest.approx(0.99**20)
    assert baseline.success_prob == pytest.approx(0.8179, abs=5e-4)
    assert one_shot.expected_time == model.hop_time
    assert baseline.measured_success == stats.success_rate
    # one-shot beats the baseline on both axes in this regime
    assert one_shot.success_prob > baseline.success_prob
    assert one_shot.expected_time < baseline.expected_time

import math
from collections import Counter

import numpy as np
import pytest
from scipy.stats import norm

from gazeparallax.psychophysics import (
    DETECTION_ABSOLUTE_D,
    DETECTION_RELATIVE_D,
    DISCRIMINATION_STEPS_D,
    SimulatedObserver,
    TrialCondition,
    binomial_test,
    discrimination_linear_fit,
    fit_psychometric,
    grid_search_fit,
    plan_detection_session,
    plan_discrimination_session,
    proportion_correct,
    psychometric,
    response_probability,
    run_session,
    simulate_response,
    tally_levels,
    threshold_from_params,
)


def detection_condition(relative_d, absolute_d=1.0):
    return TrialCondition("detection", absolute_d, 0.0, relative_d, "first")


# --- session plans -------------------------------------------------------------

def test_detection_plan_has_225_balanced_trials():
    plan = plan_detection_session(seed=42)
    assert len(plan.trials) == 225
    counts = Counter((t.absolute_d, t.relative_d) for t in plan.trials)
    assert set(counts) == {
        (a, r) for a in DETECTION_ABSOLUTE_D for r in DETECTION_RELATIVE_D
    }
    assert all(v == 15 for v in counts.values())
    assert sum(1 for t in plan.trials if t.absolute_d == 2.0) == 75


def test_detection_plan_deterministic_per_seed():
    assert plan_detection_session(7) == plan_detection_session(7)
    assert plan_detection_session(7) != plan_detection_session(8)


def test_detection_plan_randomizes_intervals_and_orbits():
    plan = plan_detection_session(3)
    intervals = {t.interval_with_effect for t in plan.trials}
    directions = {t.fixation_orbit.direction for t in plan.trials}
    phases = {t.fixation_orbit.start_phase_deg for t in plan.trials}
    assert intervals == {"first", "second"}
    assert directions == {"cw", "ccw"}
    assert len(phases) > 200  # essentially unique per trial


def test_discrimination_plan_step_sets():
    plan = plan_discrimination_session(seed=1)
    assert len(plan.trials) == 225
    assert all(t.absolute_d == 0.0 for t in plan.trials)
    assert all(t.experiment == "discrimination" for t in plan.trials)
    for offset, steps in DISCRIMINATION_STEPS_D.items():
        seen = Counter(t.relative_d for t in plan.trials if t.offset_d == offset)
        assert set(seen) == set(steps)
        assert all(v == 15 for v in seen.values())
    assert sum(1 for t in plan.trials if t.offset_d == 3.0 and t.relative_d == 2.8) == 15


def test_orbit_matches_paper_configuration():
    plan = plan_detection_session(0)
    orbit = plan.trials[0].fixation_orbit
    assert orbit.radius_deg == 16.0
    assert orbit.rate_deg_s == 90.0


# --- generative observer ----------------------------------------------------------

def test_response_probability_chance_without_signal():
    obs = SimulatedObserver()
    assert response_probability(detection_condition(0.0), obs) == 0.5


def test_response_probability_threshold_is_75_when_lapse_free():
    obs = SimulatedObserver(detection_threshold_d=0.36, lapse_rate=0.0)
    assert response_probability(detection_condition(0.36), obs) == pytest.approx(0.75, abs=1e-12)


def test_response_probability_asymptote():
    obs = SimulatedObserver(lapse_rate=0.0)
    assert response_probability(detection_condition(50.0), obs) == pytest.approx(1.0, abs=1e-9)


def test_discrimination_alpha_grows_with_pedestal():
    obs = SimulatedObserver(detection_threshold_d=0.38, weber_fraction=0.11, lapse_rate=0.0)
    cond = TrialCondition("discrimination", 0.0, 2.0, 0.38 + 0.11 * 2.0, "second")
    assert response_probability(cond, obs) == pytest.approx(0.75, abs=1e-12)


def test_simulate_response_interval_consistency():
    obs = SimulatedObserver()
    rng = np.random.default_rng(0)
    for interval in ("first", "second"):
        cond = TrialCondition("detection", 1.0, 0.0, 1.0, interval)
        for _ in range(20):
            r = simulate_response(cond, obs, rng)
            if r.correct:
                assert r.chosen_interval == interval
            else:
                assert r.chosen_interval != interval


def test_simulate_response_frequency_tracks_probability():
    obs = SimulatedObserver(detection_threshold_d=0.36, psychometric_slope=0.15, lapse_rate=0.02)
    cond = detection_condition(0.5)
    rng = np.random.default_rng(123)
    n = 20000
    hits = sum(simulate_response(cond, obs, rng).correct for _ in range(n))
    p = response_probability(cond, obs)
    assert hits / n == pytest.approx(p, abs=4.0 * math.sqrt(p * (1 - p) / n))


def test_observer_validation():
    with pytest.raises(ValueError):
        SimulatedObserver(lapse_rate=0.2)
    with pytest.raises(ValueError):
        SimulatedObserver(detection_threshold_d=-1.0)


# --- fitting ------------------------------------------------------------------------

def exact_probability_data(alpha, beta, lapse, levels, n):
    """Counts placed exactly at the generative probabilities (x=0 is chance)."""
    data = []
    for x in levels:
        p = 0.5 if x <= 0 else float(psychometric(x, alpha, beta, lapse))
        data.append((x, n, p * n))
    return data


def test_fit_recovers_threshold_from_exact_large_n_data():
    data = exact_probability_data(0.36, 0.15, 0.02, DETECTION_RELATIVE_D, 100000)
    fit = fit_psychometric(data)
    assert fit.reliable
    assert fit.threshold75 == pytest.approx(0.36, abs=0.01)


def test_fit_threshold75_satisfies_definition():
    data = exact_probability_data(0.4, 0.2, 0.01, (0.0, 0.2, 0.4, 0.6, 0.8, 1.0), 5000)
    fit = fit_psychometric(data)
    assert float(psychometric(fit.threshold75, fit.alpha, fit.beta, fit.lapse)) == pytest.approx(
        0.75, abs=1e-9
    )
    assert fit.threshold75 == threshold_from_params(fit.alpha, fit.beta, fit.lapse)


def test_fit_flags_pure_chance_data_unreliable():
    data = [(x, 100, 50) for x in DETECTION_RELATIVE_D]
    fit = fit_psychometric(data)
    assert not fit.reliable


def test_fit_flags_saturated_data_unreliable():
    data = [(x, 100, 100) for x in DETECTION_RELATIVE_D]
    fit = fit_psychometric(data)
    assert not fit.reliable


def test_fit_threshold_invariant_to_row_duplication():
    data = exact_probability_data(0.3, 0.12, 0.0, DETECTION_RELATIVE_D, 2000)
    fit_once = fit_psychometric(data)
    fit_twice = fit_psychometric(data + data)
    assert fit_twice.threshold75 == pytest.approx(fit_once.threshold75, abs=1e-6)


def test_fit_matches_grid_search_oracle():
    rng = np.random.default_rng(17)
    obs = SimulatedObserver()
    for seed in range(4):
        ks = rng.binomial(200, [response_probability(detection_condition(x), obs)
                                for x in DETECTION_RELATIVE_D])
        data = [(x, 200, int(k)) for x, k in zip(DETECTION_RELATIVE_D, ks)]
        fit = fit_psychometric(data)
        oracle = grid_search_fit(data, n_alpha=100, n_beta=100, n_lapse=13)
        assert fit.log_likelihood >= oracle.log_likelihood - 1e-6


def test_fit_input_validation():
    with pytest.raises(ValueError, match="3 distinct"):
        fit_psychometric([(0.0, 50, 25), (0.5, 50, 40)])
    with pytest.raises(ValueError, match="30 trials"):
        fit_psychometric([(0.0, 5, 2), (0.5, 5, 4), (1.0, 5, 5)])
    with pytest.raises(ValueError):
        fit_psychometric([(0.0, 10, 12), (0.5, 10, 4), (1.0, 10, 5)])


def test_fit_error_shrinks_with_sample_size():
    obs = SimulatedObserver(lapse_rate=0.0)
    errors = []
    for n in (100, 1000, 10000):
        errs = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            ks = rng.binomial(n, [response_probability(detection_condition(x), obs)
                                  for x in DETECTION_RELATIVE_D])
            data = [(x, n, int(k)) for x, k in zip(DETECTION_RELATIVE_D, ks)]
            errs.append(abs(fit_psychometric(data).threshold75 - 0.36))
        errors.append(np.median(errs))
    assert errors[0] > errors[2]


def test_session_monte_carlo_recovery_small_n():
    obs = SimulatedObserver(detection_threshold_d=0.36, psychometric_slope=0.15, lapse_rate=0.02)
    recovered = []
    for seed in range(30):
        plan = plan_detection_session(seed)
        results = run_session(plan, obs, np.random.default_rng(seed))
        for absolute in DETECTION_ABSOLUTE_D:
            data = tally_levels(r for r in results if r.condition.absolute_d == absolute)
            recovered.append(fit_psychometric(data).threshold75)
    assert abs(float(np.median(recovered)) - 0.36) < 0.08


# --- discrimination linear fit ---------------------------------------------------------

def test_linear_fit_exact_line():
    points = [(p, 0.11 * p + 0.38) for p in (1.0, 2.0, 3.0)]
    slope, intercept = discrimination_linear_fit(points)
    assert slope == pytest.approx(0.11, abs=1e-12)
    assert intercept == pytest.approx(0.38, abs=1e-12)


def test_linear_fit_flat_thresholds():
    slope, intercept = discrimination_linear_fit([(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)])
    assert slope == pytest.approx(0.0, abs=1e-12)
    assert intercept == pytest.approx(0.5, abs=1e-12)


def test_linear_fit_requires_two_pedestals():
    with pytest.raises(ValueError):
        discrimination_linear_fit([(1.0, 0.5), (1.0, 0.6)])


def test_weber_recovery_from_exact_data():
    obs = SimulatedObserver(detection_threshold_d=0.38, weber_fraction=0.11, lapse_rate=0.0)
    thresholds = []
    for offset, steps in DISCRIMINATION_STEPS_D.items():
        data = []
        for x in steps:
            cond = TrialCondition("discrimination", 0.0, offset, x, "first")
            p = response_probability(cond, obs)
            data.append((x, 50000, p * 50000))
        thresholds.append((offset, fit_psychometric(data).threshold75))
    slope, intercept = discrimination_linear_fit(thresholds)
    assert slope == pytest.approx(0.11, abs=0.03)
    assert intercept == pytest.approx(0.38, abs=0.05)


# --- proportions and binomial test ------------------------------------------------------

def test_proportion_correct():
    assert proportion_correct([True, True, False, True]) == 0.75
    with pytest.raises(ValueError):
        proportion_correct([])


def test_binomial_test_exact_values():
    assert binomial_test(10, 20) == pytest.approx(0.5880985260009766, abs=1e-12)
    assert binomial_test(20, 20) == pytest.approx(2.0**-20, abs=1e-18)
    assert binomial_test(0, 20) == 1.0


def test_binomial_test_monotone_in_successes():
    values = [binomial_test(k, 30) for k in range(0, 31)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_binomial_test_validation():
    with pytest.raises(ValueError):
        binomial_test(5, 0)
    with pytest.raises(ValueError):
        binomial_test(25, 20)

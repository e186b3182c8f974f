import warnings

import numpy as np
import pytest

from app.core.errors import ModelValidityWarning, ParameterInconsistencyError
from app.core.scenario import validate
from app.models import fairness
from app.schemas.schemas import ScenarioConfig, VehicleParams


def same_lane_scenario(speeds, **overrides):
    config = ScenarioConfig(num_vehicles=len(speeds), **overrides)
    vehicles = [VehicleParams(id=i, speed=v, lane_index=0) for i, v in enumerate(speeds)]
    return validate(config, vehicles)


def test_dwell_time():
    assert fairness.dwell_time(200, 20) == 10.0
    assert fairness.dwell_time(200, 25) == 8.0
    with pytest.raises(ParameterInconsistencyError):
        fairness.dwell_time(200, 0)


def test_overlap_probability_examples():
    assert fairness.overlap_probability(0, 0, 0, 100) == pytest.approx(1e-5)
    assert fairness.overlap_probability(20, 20, 0, 100) == pytest.approx(4.1e-4)
    # numerology 1 doubles the frame
    assert fairness.overlap_probability(20, 20, 1, 100) == pytest.approx(2.05e-4)


def test_overlap_probability_rejects_values_above_one():
    with pytest.raises(ParameterInconsistencyError):
        fairness.overlap_probability(150, 150, 0, 0.1)


def test_overlap_probability_increases_with_windows():
    values = [fairness.overlap_probability(w, 20, 0, 100) for w in range(20, 151, 10)]
    assert np.all(np.diff(values) > 0)


def test_shared_resources():
    assert fairness.shared_resources(0, 0) == 1.0
    assert fairness.shared_resources(20, 150) == pytest.approx(3171 / 171)


def test_shared_selection_prob():
    assert fairness.shared_selection_prob(10, 10, 100) == 1.0
    assert fairness.shared_selection_prob(10, 0, 100) == 0.0
    assert fairness.shared_selection_prob(10, 5, 100) == pytest.approx(0.25)


def test_shared_selection_prob_is_clamped_with_warning():
    with pytest.warns(ModelValidityWarning):
        assert fairness.shared_selection_prob(10, 20, 100) == 1.0


def test_shared_selection_prob_at_one_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fairness.shared_selection_prob(10, 10, 100)


def test_collision_probability_reference_scenario(reference_config):
    # P_Sh clamps to 1 for N_Sc = 10
    with pytest.warns(ModelValidityWarning):
        assert fairness.collision_probability(20, 20, reference_config) == pytest.approx(4.1e-5)


def test_collision_probability_single_subchannel(reference_config):
    config = reference_config.model_copy(update={"num_subchannels": 1})
    expected = 4.1e-4 * (441 / 41 / 100) ** 2 * 0.1
    assert fairness.collision_probability(20, 20, config) == pytest.approx(expected)


def test_collision_needs_common_candidates(reference_config):
    config = reference_config.model_copy(update={"shared_candidates": 0})
    assert fairness.collision_probability(20, 20, config) == 0.0


def test_collision_matrix_is_symmetric(reference_config):
    config = reference_config.model_copy(update={"num_subchannels": 1})
    delta = fairness.collision_matrix([20, 80, 150], config)
    assert np.all(np.diag(delta) == 0)
    assert np.allclose(delta, delta.T)


def test_half_duplex_probability():
    assert fairness.half_duplex_probability(0) == 0.0
    assert fairness.half_duplex_probability(10) == 0.01
    assert fairness.half_duplex_probability(1000) == 1.0
    with pytest.raises(ParameterInconsistencyError):
        fairness.half_duplex_probability(1001)
    with pytest.raises(ParameterInconsistencyError):
        fairness.half_duplex_probability(-1)


def test_prr_without_interference():
    config = ScenarioConfig(num_vehicles=2, shared_candidates=0)
    vehicles = [VehicleParams(id=i, speed=25, packet_rate=0) for i in range(2)]
    assert fairness.prr(0, [20, 20], validate(config, vehicles)) == 1.0


def test_prr_with_saturated_half_duplex():
    config = ScenarioConfig(num_vehicles=2)
    vehicles = [VehicleParams(id=0, speed=25), VehicleParams(id=1, speed=25, packet_rate=1000)]
    assert fairness.prr(0, [20, 20], validate(config, vehicles)) == 0.0


def test_prr_reference_scenario(reference_scenario):
    expected = (1 - 4.1e-5) ** 2 * (1 - 0.01) ** 2
    assert fairness.prr(0, [20, 20, 20], reference_scenario) == pytest.approx(expected)


def test_prr_does_not_increase_with_window(reference_scenario):
    values = [fairness.prr(0, [w, 20, 20], reference_scenario) for w in range(20, 151, 10)]
    assert np.all(np.diff(values) <= 0)


def test_fairness_index_symmetry():
    scenario = same_lane_scenario([25, 25])
    assert fairness.fairness_index(0, [40, 40], scenario) == fairness.fairness_index(1, [40, 40], scenario)


def test_fairness_index_halves_with_double_speed():
    scenario = same_lane_scenario([20, 40])
    slow = fairness.fairness_index(0, [40, 40], scenario)
    fast = fairness.fairness_index(1, [40, 40], scenario)
    assert fast == pytest.approx(slow / 2, rel=1e-12)


def test_fairness_index_decreases_with_speed(reference_scenario):
    report = fairness.fairness_report([20, 20, 20], reference_scenario)
    assert np.all(np.diff(report.per_vehicle_index) < 0)


def test_fairness_report(reference_scenario):
    report = fairness.fairness_report([20, 85, 150], reference_scenario)

    assert report.network_index == pytest.approx(np.mean(report.per_vehicle_index))
    assert np.allclose(report.per_vehicle_deviation, np.abs(report.network_index - report.per_vehicle_index))
    assert report.max_deviation > 0
    assert report.per_pair_collision.shape == (3, 3)
    assert np.all((report.per_vehicle_prr > 0) & (report.per_vehicle_prr <= 1))
    assert np.all(report.expected_bits > 0)


def test_identical_vehicles_have_zero_deviation():
    scenario = same_lane_scenario([25, 25, 25])
    report = fairness.fairness_report([50, 50, 50], scenario)
    assert report.max_deviation == pytest.approx(0.0, abs=1e-15 * report.network_index)


def test_single_vehicle_has_zero_deviation():
    report = fairness.fairness_report([50], same_lane_scenario([25]))
    assert report.max_deviation == 0.0
    assert report.per_vehicle_prr[0] == 1.0


def test_expected_bits():
    assert fairness.expected_bits(1e6, 8.0, 0.5) == 4e6


def test_collision_oracle_is_reproducible(reference_config):
    config = reference_config.model_copy(update={"num_subchannels": 1})
    a = fairness.simulate_collision(20, 80, config, trials=10_000, seed=3)
    b = fairness.simulate_collision(20, 80, config, trials=10_000, seed=3)
    assert a == b


def test_collision_oracle_rejects_shared_probability_above_one(reference_config):
    with pytest.raises(ParameterInconsistencyError):
        fairness.simulate_collision(20, 20, reference_config, trials=10)


@pytest.mark.slow
@pytest.mark.parametrize("w_i", [20, 80, 150])
@pytest.mark.parametrize("w_j", [20, 80, 150])
def test_collision_matches_monte_carlo(reference_config, w_i, w_j):
    config = reference_config.model_copy(update={"num_subchannels": 1})
    closed = fairness.collision_probability(w_i, w_j, config)
    estimate = fairness.simulate_collision(w_i, w_j, config, trials=10_000_000, seed=w_i * 1000 + w_j)
    assert estimate == pytest.approx(closed, rel=0.05)

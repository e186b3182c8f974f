import pytest

from app.core.scenario import build_highway, validate
from app.schemas.schemas import OptimizerConfig, ScenarioConfig

REFERENCE_SCENARIO = {
    "num_vehicles": 3,
    "bandwidth": 20e6,
    "path_loss_exponent": 3,
    "noise_db": 9,
    "rsu_coverage": 200,
    "numerology": 0,
    "rri": 100,
    "num_subchannels": 10,
    "total_resources": 100,
    "avg_candidates": 10,
    "packet_bits": 500,
    "t_fa": 0.468,
    "window_bounds": [20, 150],
}


@pytest.fixture
def reference_raw():
    return dict(REFERENCE_SCENARIO)


@pytest.fixture
def reference_config():
    return ScenarioConfig.model_validate(REFERENCE_SCENARIO)


@pytest.fixture
def reference_scenario(reference_config):
    return validate(reference_config, build_highway(reference_config, [20, 24, 28]))


@pytest.fixture
def small_optimizer():
    # 4 objectives, 3 partitions -> 20 subproblems
    return OptimizerConfig(generations=5, partitions=3, neighborhood_size=5, rng_seed=11)

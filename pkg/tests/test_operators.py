import numpy as np
import pytest

from app.core.errors import OperatorUnavailableError
from app.optim.operators import DeOperator, SbxOperator, de_rand_1_bin, polynomial_mutation, sbx_crossover
from app.optim.registry import OPERATORS, build_operator
from app.schemas.schemas import LlmConfig, OptimizerConfig

BOUNDS = (20.0, 150.0)


def test_sbx_children_stay_in_bounds():
    crossover = sbx_crossover(eta=2.0, bounds=BOUNDS)
    rng = np.random.default_rng(0)
    for _ in range(200):
        child = crossover(np.array([20.0, 150.0, 60.0]), np.array([150.0, 20.0, 140.0]), rng)
        assert np.all((child >= 20) & (child <= 150))


def test_sbx_identical_parents_give_the_parent():
    crossover = sbx_crossover(bounds=BOUNDS)
    parent = np.array([33.0, 77.0, 121.0])
    child = crossover(parent, parent.copy(), np.random.default_rng(1))
    assert np.allclose(child, parent)


def test_polynomial_mutation_stays_in_bounds():
    mutate = polynomial_mutation(eta=5.0, prob=1.0, bounds=BOUNDS)
    rng = np.random.default_rng(2)
    for _ in range(200):
        assert np.all((mutate(np.array([20.0, 150.0, 85.0]), rng) >= 20))


def test_polynomial_mutation_with_zero_probability_is_identity():
    mutate = polynomial_mutation(prob=0.0, bounds=BOUNDS)
    x = np.array([25.0, 50.0])
    assert np.array_equal(mutate(x, np.random.default_rng(3)), x)


def test_de_keeps_at_least_one_mutant_component():
    crossover = de_rand_1_bin(scale=0.5, crossover_rate=0.0, bounds=BOUNDS)
    base = np.array([50.0, 50.0, 50.0])
    child = crossover(base, np.array([70.0, 70.0, 70.0]), np.array([50.0, 50.0, 50.0]), np.random.default_rng(4))
    assert np.count_nonzero(child != base) == 1
    assert np.max(child) == 60.0


@pytest.mark.parametrize("operator", [SbxOperator(BOUNDS), DeOperator(BOUNDS)])
def test_operator_is_reproducible(operator):
    parents = np.array([[20.0, 90.0, 150.0], [60.0, 30.0, 100.0], [140.0, 140.0, 20.0]])[: operator.n_parents]
    values = np.ones((operator.n_parents, 4))
    a = operator(parents, values, np.random.default_rng(7))
    b = operator(parents, values, np.random.default_rng(7))
    assert np.array_equal(a, b)
    assert np.all((a >= 20) & (a <= 150))


@pytest.mark.parametrize("name", ["sbx", "de", "mock-llm"])
def test_registry_builds_offline_operators(name, reference_scenario):
    operator = build_operator(name, reference_scenario, OptimizerConfig())
    assert operator.name == name
    assert name in OPERATORS


def test_registry_requires_llm_endpoint(reference_scenario):
    with pytest.raises(OperatorUnavailableError, match="LLM_ENDPOINT"):
        build_operator("llm", reference_scenario, OptimizerConfig(), llm_config=LlmConfig(endpoint_url=""))


def test_registry_rejects_unknown_operator(reference_scenario):
    with pytest.raises(OperatorUnavailableError):
        build_operator("pso", reference_scenario, OptimizerConfig())

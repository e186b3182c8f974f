import logging

from ..api.llm_operator import ChatCompletionsClient, CompletionClient, LlmOperator, MockClient
from ..core.errors import OperatorUnavailableError
from ..schemas.schemas import LlmConfig, OptimizerConfig, Scenario
from .operators import DeOperator, SbxOperator, VariationOperator

logger = logging.getLogger(__name__)

OPERATORS = ("sbx", "de", "mock-llm", "llm")


def build_operator(
    name: str,
    scenario: Scenario,
    optimizer: OptimizerConfig,
    llm_config: LlmConfig | None = None,
    client: CompletionClient | None = None,
) -> VariationOperator:
    """Instantiate a variation operator by CLI name.

    Raises OperatorUnavailableError for ``llm`` without a configured endpoint.
    """
    bounds = scenario.config.window_bounds
    sbx = SbxOperator(bounds, eta=optimizer.crossover_eta, mutation_eta=optimizer.mutation_eta)
    if name == "sbx":
        return sbx
    if name == "de":
        return DeOperator(
            bounds,
            scale=optimizer.de_scale,
            crossover_rate=optimizer.de_crossover_rate,
            mutation_eta=optimizer.mutation_eta,
        )
    if name == "mock-llm":
        return LlmOperator(
            client or MockClient(seed=optimizer.rng_seed),
            fallback=sbx,
            bounds=bounds,
            n_parents=optimizer.llm_parents,
            name="mock-llm",
        )
    if name == "llm":
        if client is None:
            llm_config = llm_config or LlmConfig.from_env()
            if not llm_config.endpoint_url:
                raise OperatorUnavailableError("operator 'llm' needs LLM_ENDPOINT to be set")
            client = ChatCompletionsClient(llm_config)
        max_retries = llm_config.max_retries if llm_config is not None else 3
        logger.info("Using live LLM operator")
        return LlmOperator(client, fallback=sbx, bounds=bounds, n_parents=optimizer.llm_parents, max_retries=max_retries)
    raise OperatorUnavailableError(f"unknown operator {name!r}; choose from {', '.join(OPERATORS)}")

"""LLM-guided crossover.

Parents are normalized to [0, 1], rendered into a prompt that asks for new
vectors between ``<start>`` and ``<end>`` delimiters, and the first valid
vector of the completion is mapped back to window sizes. A mating event
makes at most ``max_retries`` completion calls; after that the fallback
operator produces the child.
"""

import logging
import os
import re
import threading
import time
import zlib
from typing import Protocol, Sequence

import numpy as np
import requests

from ..core.errors import LlmParseError, LlmTransportError, ParameterInconsistencyError
from ..models.models import PromptBundle
from ..optim.operators import VariationOperator
from ..schemas.schemas import LlmConfig

logger = logging.getLogger(__name__)

SPAN = re.compile(r"<start>(.*?)<end>", re.DOTALL)
VECTOR_LINE = re.compile(r"^vector:\s*<start>(.*?)<end>", re.MULTILINE)

# components outside this band mean the protocol was misunderstood
REJECT_BELOW = -0.5
REJECT_ABOVE = 1.5

NUMBER_WORDS = {
    1: "one", 2: "two", 3: "three", 4: "four", 5: "five", 6: "six",
    7: "seven", 8: "eight", 9: "nine", 10: "ten", 11: "eleven", 12: "twelve",
}


def _word(n: int) -> str:
    return NUMBER_WORDS.get(n, str(n))


def _bounds(bounds) -> tuple[np.ndarray, np.ndarray]:
    lower, upper = (np.asarray(b, dtype=float) for b in bounds)
    if np.any(upper <= lower):
        raise ParameterInconsistencyError("degenerate bounds: upper bound must exceed lower bound")
    return lower, upper


def normalize(w: Sequence[float], bounds) -> np.ndarray:
    lower, upper = _bounds(bounds)
    return (np.asarray(w, dtype=float) - lower) / (upper - lower)


def denormalize(o_norm: Sequence[float], bounds) -> np.ndarray:
    lower, upper = _bounds(bounds)
    o = np.asarray(o_norm, dtype=float)
    clipped = np.clip(o, 0.0, 1.0)
    if np.any(clipped != o):
        logger.debug("Clamped out-of-range normalized components %s", np.round(o, 4).tolist())
    return clipped * (upper - lower) + lower


def _render(values: Sequence[float]) -> str:
    return ",".join(f"{v:.3f}" for v in values)


def build_prompt(parents_norm: np.ndarray, values: np.ndarray, dim: int | None = None) -> PromptBundle:
    parents_norm = np.atleast_2d(np.asarray(parents_norm, dtype=float))
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if len(parents_norm) < 2:
        raise ParameterInconsistencyError("build_prompt needs at least two parents")
    if len(values) != len(parents_norm):
        raise ParameterInconsistencyError("one objective vector is required per parent")
    dim = parents_norm.shape[1] if dim is None else dim
    n_obj = values.shape[1]

    lines = [
        f"We are minimizing a {_word(n_obj)} objective task. Every candidate solution is a vector of "
        f"normalized decision variables in [0, 1] and the dimension of each variable is {_word(dim)}.",
        f"Here are {_word(len(parents_norm))} candidate solutions with their objective values:",
    ]
    for parent, value in zip(parents_norm, values):
        lines.append(f"vector: <start>{_render(parent)}<end>")
        lines.append(f"value: <start>{_render(value)}<end>")
    lines += [
        "Combine them into a new vector whose objective values are smaller than the smallest value among them.",
        f"Each new vector must begin with <start> and end with <end>, holding {dim} comma-separated numbers.",
        "Output only the new vectors. Do not write code and do not give any explanation.",
    ]
    return PromptBundle(
        rendered_text="\n".join(lines),
        parent_vectors_normalized=parents_norm,
        parent_objective_values=values,
        expected_dimension=dim,
    )


def parse_response(text: str | None, dim: int) -> list[np.ndarray]:
    """All valid ``<start>...<end>`` vectors in ``text``, in order.

    Raises LlmParseError when none is valid, including for a missing or non-text completion.
    """
    if not isinstance(text, str):
        raise LlmParseError(f"completion is not text: {type(text).__name__}")
    vectors = []
    for span in SPAN.findall(text):
        parts = [part.strip() for part in span.split(",")]
        try:
            vector = np.array([float(part) for part in parts])
        except ValueError:
            continue
        if vector.size != dim or not np.all(np.isfinite(vector)):
            continue
        if np.any(vector < REJECT_BELOW) or np.any(vector > REJECT_ABOVE):
            logger.debug("Rejected vector far outside [0, 1]: %s", span)
            continue
        vectors.append(vector)
    if not vectors:
        raise LlmParseError(f"no valid {dim}-dimensional vector in completion: {text[:120]!r}")
    return vectors


# ==================== CLIENTS ====================

class CompletionClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class ChatCompletionsClient:
    """Chat-completions style HTTP client with a global concurrency and pacing limit."""

    def __init__(self, config: LlmConfig, session: requests.Session | None = None):
        if not config.endpoint_url:
            raise ParameterInconsistencyError("LLM endpoint is not configured")
        self.config = config
        self.session = session or requests.Session()
        self.calls = 0
        self._slots = threading.BoundedSemaphore(config.max_concurrent)
        self._pace_lock = threading.Lock()
        self._last_request = 0.0

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.getenv(self.config.api_key_source)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _pace(self) -> None:
        if self.config.min_interval <= 0:
            return
        with self._pace_lock:
            wait = self._last_request + self.config.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        with self._slots:
            self._pace()
            self.calls += 1
            try:
                response = self.session.post(
                    self.config.endpoint_url, json=payload, headers=self._headers(), timeout=self.config.timeout
                )
                response.raise_for_status()
                content = response.json()["choices"][0]["message"]["content"]
            except requests.RequestException as exc:
                raise LlmTransportError(f"request to {self.config.endpoint_url} failed: {exc}") from exc
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise LlmTransportError(f"malformed completion envelope: {exc}") from exc
        # content is null for refusals and tool-call replies
        return content if isinstance(content, str) else ""


class MockClient:
    """Offline stand-in: answers with the mean of the prompt's parent vectors plus seeded jitter.

    The jitter stream is keyed by the seed and the prompt text, so answers do
    not depend on call order.
    """

    def __init__(self, seed: int = 0, jitter: float = 0.05):
        self.seed = seed
        self.jitter = jitter
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
        parents = [np.array([float(x) for x in span.split(",")]) for span in VECTOR_LINE.findall(prompt)]
        if not parents:
            return "no parents found"
        mean = np.mean(parents, axis=0)
        if self.jitter > 0:
            rng = np.random.default_rng([self.seed, zlib.crc32(prompt.encode())])
            mean = mean + rng.uniform(-self.jitter, self.jitter, size=mean.size)
        return "<start>" + ",".join(format(x, ".17g") for x in mean) + "<end>"


# ==================== OPERATOR ====================

def llm_mate(
    parents: np.ndarray,
    values: np.ndarray,
    client: CompletionClient,
    fallback_operator: VariationOperator,
    rng: np.random.Generator,
    bounds,
    max_retries: int = 3,
) -> tuple[np.ndarray, bool]:
    """One offspring from the LLM; returns (child, used_fallback)."""
    parents = np.atleast_2d(np.asarray(parents, dtype=float))
    dim = parents.shape[1]
    bundle = build_prompt(normalize(parents, bounds), values, dim)
    for attempt in range(1, max_retries + 1):
        try:
            text = client.complete(bundle.rendered_text)
            vectors = parse_response(text, dim)
            lower, upper = _bounds(bounds)
            return np.clip(denormalize(vectors[0], bounds), lower, upper), False
        except (LlmTransportError, LlmParseError) as exc:
            logger.warning("LLM attempt %d/%d failed: %s", attempt, max_retries, exc)
        except Exception as exc:
            # a faulty client must not abort the run
            logger.warning("LLM attempt %d/%d raised %s: %s", attempt, max_retries, type(exc).__name__, exc)
    logger.info("LLM retries exhausted, using %s fallback", getattr(fallback_operator, "name", "fallback"))
    child = fallback_operator(parents, values, rng)
    lower, upper = _bounds(bounds)
    return np.clip(child, lower, upper), True


class LlmOperator:
    def __init__(
        self,
        client: CompletionClient,
        fallback: VariationOperator,
        bounds,
        n_parents: int = 2,
        max_retries: int = 3,
        name: str = "llm",
    ):
        if max_retries < 1:
            raise ParameterInconsistencyError("max_retries must be at least 1")
        self.client = client
        self.fallback = fallback
        self.bounds = bounds
        self.n_parents = n_parents
        self.max_retries = max_retries
        self.name = name
        self.matings = 0
        self.fallbacks = 0
        self._lock = threading.Lock()

    def __call__(self, parents: np.ndarray, values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        child, used_fallback = llm_mate(parents, values, self.client, self.fallback, rng, self.bounds, self.max_retries)
        with self._lock:
            self.matings += 1
            self.fallbacks += int(used_fallback)
        return child

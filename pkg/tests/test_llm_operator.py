import logging

import numpy as np
import pytest
import requests

from app.api import llm_operator
from app.api.llm_operator import (
    ChatCompletionsClient,
    LlmOperator,
    MockClient,
    build_prompt,
    denormalize,
    llm_mate,
    normalize,
    parse_response,
)
from app.core.errors import LlmParseError, LlmTransportError, ParameterInconsistencyError
from app.optim.operators import SbxOperator
from app.schemas.schemas import LlmConfig

BOUNDS = (20.0, 150.0)
ENDPOINT = "http://llm.test/v1/chat/completions"


class ScriptedClient:
    """Replays canned completions (or raises canned exceptions) in order."""

    def __init__(self, *replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, prompt):
        reply = self.replies[min(self.calls, len(self.replies) - 1)]
        self.calls += 1
        if isinstance(reply, Exception):
            raise reply
        return reply


class FakeResponse:
    def __init__(self, body, status=200):
        self.body = body
        self.status = status

    def raise_for_status(self):
        if self.status >= 400:
            raise requests.HTTPError(f"{self.status} error")

    def json(self):
        return self.body


class FakeSession:
    def __init__(self, response):
        self.response = response
        self.requests = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.requests.append({"url": url, "json": json, "headers": headers, "timeout": timeout})
        if isinstance(self.response, Exception):
            raise self.response
        return self.response


def envelope(content):
    return {"choices": [{"message": {"role": "assistant", "content": content}}]}


# ==================== NORMALIZATION ====================

def test_normalize():
    assert np.allclose(normalize([20, 150, 85], BOUNDS), [0.0, 1.0, 0.5])


def test_denormalize():
    assert np.allclose(denormalize([0.0, 0.5, 1.0], BOUNDS), [20.0, 85.0, 150.0])


def test_denormalize_clamps_and_logs_quietly(caplog):
    with caplog.at_level(logging.DEBUG, logger=llm_operator.__name__):
        assert np.allclose(denormalize([1.2, -0.2], BOUNDS), [150.0, 20.0])
    clamped = [r for r in caplog.records if "Clamped" in r.getMessage()]
    assert clamped and all(r.levelno == logging.DEBUG for r in clamped)


def test_normalization_round_trip():
    w = np.random.default_rng(0).uniform(20, 150, 50)
    assert np.allclose(denormalize(normalize(w, BOUNDS), BOUNDS), w, atol=1e-12)


def test_degenerate_bounds_are_rejected():
    with pytest.raises(ParameterInconsistencyError):
        normalize([20], (20, 20))


# ==================== PROMPT ====================

def test_prompt_structure():
    parents = np.array([[0.137, 0.572, 0.671], [0.9, 0.1, 0.25]])
    values = np.array([[0.01, 0.02, 0.03, 41.5], [0.02, 0.01, 0.0, 43.25]])
    bundle = build_prompt(parents, values)
    lines = bundle.rendered_text.splitlines()

    assert sum(line.startswith("vector:") for line in lines) == 2
    assert sum(line.startswith("value:") for line in lines) == 2
    assert "<start>0.137,0.572,0.671<end>" in bundle.rendered_text
    assert "<start>0.010,0.020,0.030,41.500<end>" in bundle.rendered_text
    assert "the dimension of each variable is three" in bundle.rendered_text
    assert "four objective" in bundle.rendered_text
    assert "Do not write code" in bundle.rendered_text
    assert bundle.expected_dimension == 3


def test_prompt_needs_two_parents():
    with pytest.raises(ParameterInconsistencyError):
        build_prompt(np.array([[0.1, 0.2]]), np.array([[1.0, 2.0]]))


# ==================== PARSING ====================

def test_parse_single_vector():
    assert np.allclose(parse_response("<start>0.2,0.3,0.4<end>", 3)[0], [0.2, 0.3, 0.4])


def test_parse_keeps_order_and_skips_noise():
    text = "Sure!\n<start>0.1, 0.2, 0.3<end>\nand also <start>0.4,0.5,0.6<end>"
    vectors = parse_response(text, 3)
    assert len(vectors) == 2
    assert np.allclose(vectors[1], [0.4, 0.5, 0.6])


def test_parse_rejects_wrong_arity():
    with pytest.raises(LlmParseError):
        parse_response("<start>0.2,0.3<end>", 3)


def test_parse_rejects_vectors_far_outside_unit_box():
    with pytest.raises(LlmParseError):
        parse_response("<start>2.0,0.1,0.1<end>", 3)


def test_parse_keeps_mildly_out_of_range_vectors():
    vector = parse_response("<start>1.2,-0.2,0.5<end>", 3)[0]
    assert np.allclose(denormalize(vector, BOUNDS), [150.0, 20.0, 85.0])


def test_parse_rejects_garbage():
    with pytest.raises(LlmParseError):
        parse_response("<start>a,b,c<end>", 3)
    with pytest.raises(LlmParseError):
        parse_response("", 3)


def test_parse_rejects_missing_completion():
    with pytest.raises(LlmParseError, match="not text"):
        parse_response(None, 3)


# ==================== MATING ====================

def test_mock_client_answers_with_parent_mean():
    parents = np.array([[20.0, 150.0, 85.0], [150.0, 20.0, 85.0]])
    child, used_fallback = llm_mate(
        parents, np.ones((2, 4)), MockClient(jitter=0.0), SbxOperator(BOUNDS), np.random.default_rng(0), BOUNDS
    )
    assert not used_fallback
    assert np.allclose(child, [85.0, 85.0, 85.0])


def test_mock_client_is_order_independent():
    bundle = build_prompt(np.array([[0.1, 0.2], [0.3, 0.4]]), np.ones((2, 3)))
    first = MockClient(seed=4)
    second = MockClient(seed=4)
    second.complete("warm-up prompt")
    assert first.complete(bundle.rendered_text) == second.complete(bundle.rendered_text)


def test_injected_vector_round_trips():
    v = np.array([0.123456789, 0.5, 0.987654321])
    client = ScriptedClient("<start>" + ",".join(repr(float(x)) for x in v) + "<end>")
    parents = np.array([[30.0, 40.0, 50.0], [60.0, 70.0, 80.0]])
    child, _ = llm_mate(parents, np.ones((2, 4)), client, SbxOperator(BOUNDS), np.random.default_rng(0), BOUNDS)
    assert np.allclose(normalize(child, BOUNDS), v, atol=1e-12)


def test_persistent_garbage_falls_back_after_three_calls():
    client = ScriptedClient("I am sorry, I cannot help with that.")
    parents = np.array([[30.0, 40.0, 50.0], [60.0, 70.0, 80.0]])
    child, used_fallback = llm_mate(
        parents, np.ones((2, 4)), client, SbxOperator(BOUNDS), np.random.default_rng(0), BOUNDS, max_retries=3
    )
    assert used_fallback
    assert client.calls == 3
    assert np.all((child >= 20) & (child <= 150))


def test_transport_errors_count_as_attempts():
    client = ScriptedClient(LlmTransportError("timeout"), LlmTransportError("timeout"), "<start>0.5,0.5<end>")
    child, used_fallback = llm_mate(
        np.array([[30.0, 40.0], [60.0, 70.0]]), np.ones((2, 3)), client,
        SbxOperator(BOUNDS), np.random.default_rng(0), BOUNDS,
    )
    assert not used_fallback
    assert client.calls == 3
    assert np.allclose(child, [85.0, 85.0])


@pytest.mark.parametrize("reply", [None, RuntimeError("client bug"), 42])
def test_any_client_failure_falls_back(reply):
    client = ScriptedClient(reply)
    parents = np.array([[30.0, 40.0, 50.0], [60.0, 70.0, 80.0]])
    child, used_fallback = llm_mate(
        parents, np.ones((2, 4)), client, SbxOperator(BOUNDS), np.random.default_rng(0), BOUNDS, max_retries=2
    )
    assert used_fallback
    assert client.calls == 2
    assert np.all((child >= 20) & (child <= 150))


def test_operator_counts_fallbacks():
    operator = LlmOperator(ScriptedClient("nothing useful"), SbxOperator(BOUNDS), BOUNDS, max_retries=2)
    operator(np.array([[30.0, 40.0], [60.0, 70.0]]), np.ones((2, 3)), np.random.default_rng(1))
    assert operator.matings == 1
    assert operator.fallbacks == 1
    assert operator.client.calls == 2


# ==================== HTTP CLIENT ====================

def test_chat_client_request_and_reply(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "secret")
    session = FakeSession(FakeResponse(envelope("<start>0.1,0.2<end>")))
    config = LlmConfig(endpoint_url=ENDPOINT, model_name="test-model", api_key_source="TEST_LLM_KEY", temperature=0.3)
    client = ChatCompletionsClient(config, session=session)

    assert client.complete("hello") == "<start>0.1,0.2<end>"
    sent = session.requests[0]
    assert sent["url"] == ENDPOINT
    assert sent["json"]["model"] == "test-model"
    assert sent["json"]["messages"] == [{"role": "user", "content": "hello"}]
    assert sent["json"]["temperature"] == 0.3
    assert sent["headers"]["Authorization"] == "Bearer secret"
    assert client.calls == 1


def test_chat_client_null_content_is_empty_text():
    session = FakeSession(FakeResponse(envelope(None)))
    client = ChatCompletionsClient(LlmConfig(endpoint_url=ENDPOINT), session=session)
    assert client.complete("hi") == ""


def test_null_content_reply_falls_back_without_error():
    session = FakeSession(FakeResponse(envelope(None)))
    operator = LlmOperator(
        ChatCompletionsClient(LlmConfig(endpoint_url=ENDPOINT), session=session), SbxOperator(BOUNDS), BOUNDS
    )
    child = operator(np.array([[30.0, 40.0], [60.0, 70.0]]), np.ones((2, 3)), np.random.default_rng(5))
    assert operator.fallbacks == 1
    assert len(session.requests) == 3
    assert np.all((child >= 20) & (child <= 150))


def test_chat_client_without_key_sends_no_authorization(monkeypatch):
    monkeypatch.delenv("LLM_API_KEY", raising=False)
    session = FakeSession(FakeResponse(envelope("ok")))
    ChatCompletionsClient(LlmConfig(endpoint_url=ENDPOINT), session=session).complete("hi")
    assert "Authorization" not in session.requests[0]["headers"]


@pytest.mark.parametrize(
    "response",
    [
        FakeResponse(envelope("x"), status=500),
        FakeResponse({"unexpected": True}),
        requests.Timeout("read timed out"),
    ],
)
def test_chat_client_errors_become_transport_errors(response):
    client = ChatCompletionsClient(LlmConfig(endpoint_url=ENDPOINT), session=FakeSession(response))
    with pytest.raises(LlmTransportError):
        client.complete("hi")


def test_chat_client_uses_requests_session(monkeypatch):
    captured = {}

    def fake_post(self, url, **kwargs):
        captured.update(kwargs, url=url)
        return FakeResponse(envelope("<start>0.5,0.5<end>"))

    monkeypatch.setattr(requests.Session, "post", fake_post)
    client = ChatCompletionsClient(LlmConfig(endpoint_url=ENDPOINT, timeout=12.5))
    assert client.complete("ping") == "<start>0.5,0.5<end>"
    assert captured["url"] == ENDPOINT
    assert captured["timeout"] == 12.5


def test_chat_client_needs_endpoint():
    with pytest.raises(ParameterInconsistencyError):
        ChatCompletionsClient(LlmConfig(endpoint_url=""))

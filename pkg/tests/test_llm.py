import json

import pytest
import requests
from langchain_core.language_models import FakeListChatModel

from llm import (
    Conversation,
    ConversationError,
    HttpBackend,
    LiteLLMBackend,
    LlmError,
    LlmHttpError,
    LlmTransportError,
    ReplayBackend,
    ReplayMissError,
    load_litellm_config,
    record_transcript,
    request_digest,
    send,
)
from llm.conversation import Message


class _FakeResponse:
    def __init__(self, status_code=200, json_data=None, text=""):
        self.status_code = status_code
        self._json_data = json_data
        self.text = text or json.dumps(json_data)

    def json(self):
        if self._json_data is None:
            raise ValueError("no JSON body")
        return self._json_data


def _reply(content):
    return _FakeResponse(json_data={"choices": [{"message": {"content": content}}]})


def _conversation(text="Describe the process."):
    conversation = Conversation(model_id="gpt-4", temperature=0.0)
    conversation.add_user(text)
    return conversation


@pytest.fixture
def sleeps(monkeypatch):
    recorded = []
    monkeypatch.setattr("llm.backends.time.sleep", recorded.append)
    return recorded


def _fake_post(responses, calls):
    def _post(url, headers=None, json=None, timeout=None):
        calls.append({"url": url, "headers": headers, "json": json})
        response = responses.pop(0)
        if isinstance(response, Exception):
            raise response
        return response

    return _post


def test_http_backend_retries_rate_limit_then_succeeds(monkeypatch, sleeps):
    calls = []
    monkeypatch.setattr(
        "llm.backends.requests.post",
        _fake_post([_FakeResponse(429, text="slow down"), _reply("It is a fine process.")], calls),
    )
    backend = HttpBackend(base_url="https://llm.example/v1/", max_retries=3, backoff_s=1.0)

    reply = send(_conversation(), backend)

    assert reply == "It is a fine process."
    assert sleeps == [1.0]
    assert len(calls) == 2
    assert calls[0]["url"] == "https://llm.example/v1/chat/completions"
    assert calls[0]["json"] == {
        "model": "gpt-4",
        "messages": [{"role": "user", "content": "Describe the process."}],
        "temperature": 0.0,
    }
    assert backend.diagnostics == ["attempt 1/3 failed: HTTP 429"]


def test_http_backend_gives_up_after_max_retries(monkeypatch, sleeps):
    calls = []
    monkeypatch.setattr(
        "llm.backends.requests.post",
        _fake_post([_FakeResponse(503, text="busy") for _ in range(3)], calls),
    )
    backend = HttpBackend(max_retries=3, backoff_s=1.0)

    with pytest.raises(LlmHttpError) as info:
        backend.complete(_conversation())

    assert info.value.status == 503
    assert info.value.body == "busy"
    assert sleeps == [1.0, 2.0]
    assert len(calls) == 3
    assert len(backend.diagnostics) == 3


def test_http_backend_does_not_retry_client_errors(monkeypatch, sleeps):
    calls = []
    monkeypatch.setattr(
        "llm.backends.requests.post",
        _fake_post([_FakeResponse(400, text="bad request")], calls),
    )

    with pytest.raises(LlmHttpError, match="HTTP 400"):
        HttpBackend().complete(_conversation())

    assert sleeps == []
    assert len(calls) == 1


def test_http_backend_retries_connection_errors(monkeypatch, sleeps):
    calls = []
    monkeypatch.setattr(
        "llm.backends.requests.post",
        _fake_post([requests.ConnectionError("refused"), _reply("ok")], calls),
    )

    assert HttpBackend(backoff_s=0.5).complete(_conversation()) == "ok"
    assert sleeps == [0.5]


def test_http_backend_raises_transport_error_when_unreachable(monkeypatch, sleeps):
    monkeypatch.setattr(
        "llm.backends.requests.post",
        _fake_post([requests.Timeout("slow"), requests.Timeout("slow")], []),
    )

    with pytest.raises(LlmTransportError, match="after 2 attempts"):
        HttpBackend(max_retries=2).complete(_conversation())


def test_http_backend_rejects_unexpected_body(monkeypatch, sleeps):
    monkeypatch.setattr(
        "llm.backends.requests.post",
        _fake_post([_FakeResponse(json_data={"error": "nope"})], []),
    )

    with pytest.raises(LlmTransportError, match="unexpected chat response"):
        HttpBackend().complete(_conversation())


def test_http_backend_sends_bearer_token_from_environment(monkeypatch, sleeps):
    calls = []
    monkeypatch.setenv("PMLLM_TEST_KEY", "  secret-token ")
    monkeypatch.setattr("llm.backends.requests.post", _fake_post([_reply("ok")], calls))

    HttpBackend(credential_env="PMLLM_TEST_KEY").complete(_conversation())

    assert calls[0]["headers"]["Authorization"] == "Bearer secret-token"


def test_http_backend_includes_max_tokens_when_set(monkeypatch, sleeps):
    calls = []
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    monkeypatch.setattr("llm.backends.requests.post", _fake_post([_reply("ok")], calls))
    conversation = Conversation(model_id="gpt-4", max_tokens=256)
    conversation.add_user("hi")

    HttpBackend().complete(conversation)

    assert calls[0]["json"]["max_tokens"] == 256
    assert "Authorization" not in calls[0]["headers"]


def test_litellm_backend_passes_conversation_settings():
    seen = []

    def factory(**config):
        seen.append(config)
        return FakeListChatModel(responses=["The process handles fines."])

    backend = LiteLLMBackend(
        llm_config={"api_base": "http://localhost:4000"},
        langfuse_context={"trace_id": "t-1"},
        llm_factory=factory,
    )
    conversation = Conversation(model_id="openrouter/openai/gpt-4o", temperature=0.2)
    conversation.add_system("You are a process analyst.")
    conversation.add_user("Describe the process.")

    assert send(conversation, backend) == "The process handles fines."
    assert seen == [
        {
            "api_base": "http://localhost:4000",
            "model": "openrouter/openai/gpt-4o",
            "temperature": 0.2,
            "model_kwargs": {"metadata": {"trace_id": "t-1"}},
        }
    ]
    assert conversation.last_role == "assistant"


def test_litellm_backend_wraps_failures():
    def factory(**config):
        raise RuntimeError("provider down")

    backend = LiteLLMBackend(llm_factory=factory)

    with pytest.raises(LlmTransportError):
        backend.complete(_conversation())


def test_load_litellm_config():
    assert load_litellm_config("") == {}
    assert load_litellm_config('{"api_base": "http://x"}') == {"api_base": "http://x"}
    with pytest.raises(LlmError, match="invalid JSON"):
        load_litellm_config("{nope")
    with pytest.raises(LlmError, match="JSON object"):
        load_litellm_config("[1, 2]")


def test_conversation_enforces_alternation():
    conversation = Conversation(model_id="gpt-4")
    conversation.add_system("be brief")

    with pytest.raises(ConversationError):
        conversation.add_assistant("too early")
    conversation.add_user("hello")
    with pytest.raises(ConversationError):
        conversation.add_user("again")
    with pytest.raises(ConversationError, match="unknown role"):
        conversation.append("tool", "x")


def test_conversation_rejects_invalid_initial_messages():
    with pytest.raises(ConversationError):
        Conversation(model_id="gpt-4", messages=[Message("assistant", "hi")])


def test_send_requires_pending_user_message():
    conversation = Conversation(model_id="gpt-4")

    with pytest.raises(ConversationError, match="role user"):
        send(conversation, object())


def test_record_then_replay_returns_same_replies(tmp_path):
    conversation = _conversation()
    conversation.add_assistant("first answer")
    conversation.add_user("and the anomalies?")
    conversation.add_assistant("second answer")
    fixture = tmp_path / "fixture.jsonl"

    record_transcript(conversation, fixture)

    backend = ReplayBackend(fixture)
    replayed = _conversation()
    assert send(replayed, backend) == "first answer"
    replayed.add_user("and the anomalies?")
    assert send(replayed, backend) == "second answer"
    assert replayed.to_dict() == conversation.to_dict()
    assert backend.is_live is False


def test_replay_miss_when_prompt_changes(tmp_path):
    conversation = _conversation()
    conversation.add_assistant("answer")
    fixture = tmp_path / "fixture.jsonl"
    record_transcript(conversation, fixture)

    with pytest.raises(ReplayMissError) as info:
        ReplayBackend(fixture).complete(_conversation("Describe the process!"))

    expected = request_digest("gpt-4", [Message("user", "Describe the process!")], 0.0)
    assert info.value.digest == expected


def test_request_digest_depends_on_temperature_and_model():
    messages = [Message("user", "q")]

    base = request_digest("gpt-4", messages, 0.0)

    assert base == request_digest("gpt-4", list(messages), 0.0)
    assert base != request_digest("gpt-4", messages, 0.7)
    assert base != request_digest("gpt-4o", messages, 0.0)


def test_empty_conversation_records_empty_fixture(tmp_path):
    fixture = tmp_path / "empty.jsonl"

    record_transcript(Conversation(model_id="gpt-4"), fixture)

    assert fixture.read_text(encoding="utf-8") == ""
    assert ReplayBackend(fixture).entries == {}


def test_bad_fixture_line_reports_location(tmp_path):
    fixture = tmp_path / "bad.jsonl"
    fixture.write_text('{"digest": "x", "response": "y"}\nnot json\n', encoding="utf-8")

    with pytest.raises(LlmError, match="bad.jsonl:2"):
        ReplayBackend(fixture)

"""
Live chat-completion backends.

HttpBackend speaks OpenAI-compatible JSON over requests; LiteLLMBackend goes
through ChatLiteLLM for any provider litellm supports. Credentials are only
ever referenced by environment variable name.
"""

import json
import logging
import os
import time

import requests
from langchain_core.messages import AIMessage, HumanMessage, SystemMessage
from langchain_core.output_parsers import StrOutputParser
from langchain_litellm import ChatLiteLLM

from llm.conversation import ASSISTANT, SYSTEM, LlmError

logger = logging.getLogger("LlmClient")

DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_CREDENTIAL_ENV = "OPENAI_API_KEY"
LITELLM_CONFIG_ENV = "PMLLM_LITELLM_CONFIG"

RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


class LlmHttpError(LlmError):
    def __init__(self, status, body):
        super().__init__(f"chat endpoint returned HTTP {status}: {body}")
        self.status = status
        self.body = body


class LlmTransportError(LlmError):
    pass


class HttpBackend:
    is_live = True

    def __init__(
        self,
        base_url=DEFAULT_BASE_URL,
        credential_env=DEFAULT_CREDENTIAL_ENV,
        timeout_s=60.0,
        max_retries=3,
        backoff_s=1.0,
    ):
        if max_retries < 1:
            raise ValueError("max_retries must be at least 1")
        self.base_url = base_url.rstrip("/")
        self.credential_env = credential_env
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.diagnostics = []

    def _headers(self):
        token = os.environ.get(self.credential_env, "").strip()
        headers = {"Content-Type": "application/json", "Accept": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        else:
            logger.warning(f"LLM: {self.credential_env} is not set, sending without credentials.")
        return headers

    def _payload(self, conversation):
        payload = {
            "model": conversation.model_id,
            "messages": conversation.payload(),
            "temperature": conversation.temperature,
        }
        if conversation.max_tokens:
            payload["max_tokens"] = conversation.max_tokens
        return payload

    def _retry(self, attempt, reason):
        self.diagnostics.append(f"attempt {attempt}/{self.max_retries} failed: {reason}")
        if attempt == self.max_retries:
            return False
        delay = self.backoff_s * 2 ** (attempt - 1)
        logger.warning(
            f"LLM: attempt {attempt}/{self.max_retries} failed ({reason}). "
            f"Retrying in {delay:g}s..."
        )
        time.sleep(delay)
        return True

    def complete(self, conversation):
        endpoint = f"{self.base_url}/chat/completions"
        payload = self._payload(conversation)
        for attempt in range(1, self.max_retries + 1):
            try:
                resp = requests.post(
                    endpoint, headers=self._headers(), json=payload, timeout=self.timeout_s
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                if self._retry(attempt, exc):
                    continue
                raise LlmTransportError(
                    f"chat endpoint unreachable after {self.max_retries} attempts: {exc}"
                ) from exc

            if resp.status_code in RETRY_STATUSES:
                if self._retry(attempt, f"HTTP {resp.status_code}"):
                    continue
                raise LlmHttpError(resp.status_code, resp.text)
            if resp.status_code >= 400:
                raise LlmHttpError(resp.status_code, resp.text)

            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise LlmTransportError(f"unexpected chat response: {resp.text[:200]}") from exc
        raise LlmTransportError("no attempts were made")


def load_litellm_config(raw=None):
    """Parse the ChatLiteLLM keyword arguments from PMLLM_LITELLM_CONFIG (JSON)."""
    raw = raw if raw is not None else os.environ.get(LITELLM_CONFIG_ENV)
    if not raw:
        return {}
    try:
        config = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LlmError(f"invalid JSON in {LITELLM_CONFIG_ENV}: {exc}") from exc
    if not isinstance(config, dict):
        raise LlmError(f"{LITELLM_CONFIG_ENV} must be a JSON object")
    return config


def _to_langchain(messages):
    converted = []
    for message in messages:
        if message.role == SYSTEM:
            converted.append(SystemMessage(content=message.content))
        elif message.role == ASSISTANT:
            converted.append(AIMessage(content=message.content))
        else:
            converted.append(HumanMessage(content=message.content))
    return converted


class LiteLLMBackend:
    """
    Provider-agnostic backend over ChatLiteLLM.

    The model id and temperature come from the conversation; anything in
    llm_config (api_base, max_retries, model_kwargs ...) is passed through.
    """

    is_live = True

    def __init__(self, llm_config=None, langfuse_context=None, llm_factory=ChatLiteLLM):
        self.llm_config = dict(llm_config or {})
        self.langfuse_context = langfuse_context
        self.llm_factory = llm_factory
        self.diagnostics = []

    def _llm(self, conversation):
        config = dict(self.llm_config)
        config["model"] = conversation.model_id
        config["temperature"] = conversation.temperature
        if conversation.max_tokens:
            config["max_tokens"] = conversation.max_tokens
        if self.langfuse_context:
            config.setdefault("model_kwargs", {})["metadata"] = self.langfuse_context
        return self.llm_factory(**config)

    def complete(self, conversation):
        try:
            chain = self._llm(conversation) | StrOutputParser()
            return chain.invoke(_to_langchain(conversation.messages))
        except Exception as exc:
            self.diagnostics.append(f"litellm call failed: {exc}")
            logger.error(f"LLM: LiteLLM call failed: {exc}")
            raise LlmTransportError(f"LiteLLM call failed: {exc}") from exc

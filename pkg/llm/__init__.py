from llm.backends import (
    HttpBackend,
    LiteLLMBackend,
    LlmHttpError,
    LlmTransportError,
    load_litellm_config,
)
from llm.conversation import Conversation, ConversationError, LlmError, Message, send
from llm.replay import ReplayBackend, ReplayMissError, record_transcript, request_digest

"""
Multi-turn chat state.

A Conversation is an optional leading system message followed by strictly
alternating user/assistant messages. Every mutation checks that shape.
"""

import logging
from dataclasses import dataclass, field

logger = logging.getLogger("LlmClient")

SYSTEM = "system"
USER = "user"
ASSISTANT = "assistant"
ROLES = (SYSTEM, USER, ASSISTANT)


class LlmError(Exception):
    """Base class for LLM transport, replay and conversation errors."""


class ConversationError(LlmError):
    pass


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def to_dict(self):
        return {"role": self.role, "content": self.content}


@dataclass
class Conversation:
    model_id: str
    temperature: float = 0.0
    max_tokens: int | None = None
    messages: list = field(default_factory=list)

    def __post_init__(self):
        messages, self.messages = list(self.messages), []
        for message in messages:
            self.append(message.role, message.content)

    def _expected_roles(self):
        if not self.messages:
            return (SYSTEM, USER)
        last = self.messages[-1].role
        return (USER,) if last in (SYSTEM, ASSISTANT) else (ASSISTANT,)

    def append(self, role, content):
        if role not in ROLES:
            raise ConversationError(f"unknown role {role!r}")
        expected = self._expected_roles()
        if role not in expected:
            raise ConversationError(
                f"cannot append {role} message after "
                f"{self.messages[-1].role if self.messages else 'nothing'}; "
                f"expected {' or '.join(expected)}"
            )
        self.messages.append(Message(role, content))

    def add_system(self, content):
        self.append(SYSTEM, content)

    def add_user(self, content):
        self.append(USER, content)

    def add_assistant(self, content):
        self.append(ASSISTANT, content)

    @property
    def last_role(self):
        return self.messages[-1].role if self.messages else None

    def payload(self):
        return [m.to_dict() for m in self.messages]

    def exchanges(self):
        """Yield (messages before the reply, reply) for each assistant message."""
        for i, message in enumerate(self.messages):
            if message.role == ASSISTANT:
                yield self.messages[:i], message.content

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "messages": self.payload(),
        }


def send(conversation, backend):
    """Ask backend for the next assistant reply, append it and return it."""
    if conversation.last_role != USER:
        raise ConversationError("the last message must have role user before sending")
    reply = backend.complete(conversation)
    conversation.add_assistant(reply)
    logger.debug(
        f"LLM: received {len(reply)} chars; conversation has "
        f"{len(conversation.messages)} messages."
    )
    return reply

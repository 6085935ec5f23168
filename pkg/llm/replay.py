"""
Deterministic replay of recorded conversations.

A fixture is JSON lines, one {"digest": ..., "response": ...} object per
recorded assistant reply. The digest covers model id, the full message list
sent and the temperature, so any prompt drift is a loud ReplayMissError.
"""

import hashlib
import json
import logging
import os

from llm.conversation import LlmError

logger = logging.getLogger("LlmClient")


class ReplayMissError(LlmError):
    def __init__(self, digest, path):
        super().__init__(f"no recorded response for request digest {digest} in {path}")
        self.digest = digest


def request_digest(model_id, messages, temperature):
    payload = {
        "model": model_id,
        "messages": [m.to_dict() for m in messages],
        "temperature": temperature,
    }
    encoded = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def load_fixture(path):
    entries = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entries[record["digest"]] = record["response"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise LlmError(f"{path}:{lineno}: bad replay record ({exc})") from exc
    return entries


class ReplayBackend:
    """Serves recorded responses keyed by request digest. Never touches the network."""

    is_live = False

    def __init__(self, path):
        self.path = str(path)
        self.entries = load_fixture(path)
        self.diagnostics = []
        logger.info(f"LLM: replay fixture {self.path} with {len(self.entries)} responses.")

    def complete(self, conversation):
        digest = request_digest(
            conversation.model_id, conversation.messages, conversation.temperature
        )
        if digest not in self.entries:
            raise ReplayMissError(digest, self.path)
        return self.entries[digest]


def transcript_records(conversation):
    return [
        {
            "digest": request_digest(conversation.model_id, sent, conversation.temperature),
            "response": reply,
        }
        for sent, reply in conversation.exchanges()
    ]


def record_transcript(conversation, path, records=None):
    """
    Write a replay fixture for conversation (temp file + rename).

    records, when given, are extra {digest, response} entries written first,
    so several conversations can share one fixture.
    """
    lines = list(records or []) + transcript_records(conversation)
    path = str(path)
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8") as f:
            for record in lines:
                f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
        os.replace(tmp, path)
    except Exception as exc:
        logger.error(f"LLM: failed to write transcript {path}: {exc}")
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.info(f"LLM: recorded {len(lines)} responses to {path}.")

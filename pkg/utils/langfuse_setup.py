"""
Optional Langfuse tracing.

Tracing is on when LANGFUSE_ENABLED=true or both LANGFUSE_PUBLIC_KEY and
LANGFUSE_SECRET_KEY are set. Without it every helper here is a no-op, so
sessions run the same with or without a Langfuse account.
"""

import inspect
import logging
import os
from contextlib import contextmanager
from functools import lru_cache

logger = logging.getLogger("Session")

CALLBACK = "langfuse"


def _to_bool(value):
    return str(value).strip().lower() in {"1", "true", "yes", "on"}


def _with_callback(current):
    if current is None:
        return [CALLBACK]
    if isinstance(current, str):
        return [current] if current == CALLBACK else [current, CALLBACK]
    if isinstance(current, list) and CALLBACK not in current:
        current.append(CALLBACK)
    return current


def _compatible(langfuse_cls):
    # litellm passes sdk_integration, which langfuse>=3 no longer accepts
    try:
        return "sdk_integration" in inspect.signature(langfuse_cls.__init__).parameters
    except (TypeError, ValueError) as exc:
        logger.warning(f"Langfuse: cannot inspect client signature: {exc}")
        return False


@lru_cache(maxsize=1)
def initialize_langfuse():
    """Return a Langfuse client with litellm callbacks registered, or None."""
    public_key = os.getenv("LANGFUSE_PUBLIC_KEY")
    secret_key = os.getenv("LANGFUSE_SECRET_KEY")
    if not (_to_bool(os.getenv("LANGFUSE_ENABLED", "false")) or (public_key and secret_key)):
        return None
    if not public_key or not secret_key:
        logger.warning("Langfuse: enabled but LANGFUSE_PUBLIC_KEY / LANGFUSE_SECRET_KEY are missing.")
        return None

    try:
        import litellm
        from langfuse import Langfuse
    except Exception as exc:
        logger.warning(f"Langfuse: dependency import failed: {exc}")
        return None
    if not _compatible(Langfuse):
        logger.warning("Langfuse: incompatible langfuse package, install langfuse<3.")
        return None

    for name in ("callbacks", "success_callback", "failure_callback"):
        setattr(litellm, name, _with_callback(getattr(litellm, name, None)))
    logger.info("Langfuse: tracing enabled for session stages and LiteLLM calls.")
    return Langfuse()


def start_trace(name, metadata=None):
    langfuse = initialize_langfuse()
    if not langfuse:
        return None
    return langfuse.trace(name=name, metadata=metadata or {})


@contextmanager
def span(parent, name, metadata=None):
    """Yield a child span of parent, or None when tracing is off."""
    if not parent:
        yield None
        return
    child = parent.span(name=name, metadata=metadata or {})
    try:
        yield child
    finally:
        child.end()

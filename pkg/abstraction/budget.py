import logging
import math
from dataclasses import dataclass

logger = logging.getLogger("Abstraction")

DEFAULT_CHARS_PER_TOKEN = 4


class AbstractionError(Exception):
    """Base class for abstraction and rendering errors."""


class BudgetTooSmallError(AbstractionError):
    def __init__(self, max_chars, minimum):
        super().__init__(
            f"budget of {max_chars} chars cannot fit a single line; "
            f"minimum feasible budget is {minimum} chars"
        )
        self.max_chars = max_chars
        self.minimum = minimum


@dataclass(frozen=True)
class RenderBudget:
    max_chars: int
    chars_per_token: float = DEFAULT_CHARS_PER_TOKEN

    def __post_init__(self):
        if self.max_chars <= 0:
            raise ValueError("max_chars must be positive")
        if self.chars_per_token <= 0:
            raise ValueError("chars_per_token must be positive")

    @classmethod
    def from_tokens(cls, max_tokens, chars_per_token=DEFAULT_CHARS_PER_TOKEN):
        return cls(max_chars=int(max_tokens * chars_per_token), chars_per_token=chars_per_token)

    @property
    def max_tokens(self):
        return int(self.max_chars // self.chars_per_token)


def estimate_tokens(text, chars_per_token=DEFAULT_CHARS_PER_TOKEN):
    """Rough token count: ceil(chars / chars_per_token)."""
    if not text:
        return 0
    return math.ceil(len(text) / chars_per_token)


def fit_lines(lines, max_chars):
    """
    Longest prefix of lines whose newline-joined length is <= max_chars.

    Lines must already be in priority order; whole lines are dropped from the
    end, never split.
    """
    if max_chars is None:
        return list(lines)
    kept = []
    used = 0
    for line in lines:
        cost = len(line) + (1 if kept else 0)
        if used + cost > max_chars:
            break
        kept.append(line)
        used += cost
    if lines and not kept:
        raise BudgetTooSmallError(max_chars, len(lines[0]))
    if len(kept) < len(lines):
        logger.info(
            f"Abstraction: budget {max_chars} chars kept {len(kept)}/{len(lines)} lines."
        )
    return kept

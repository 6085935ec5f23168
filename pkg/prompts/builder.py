"""Prompt assembly: abstraction text + question (+ schema guidance) under a token budget."""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from langchain_core.prompts import PromptTemplate

from abstraction.budget import DEFAULT_CHARS_PER_TOKEN, estimate_tokens
from eventlog.model import ColumnMapping
from prompts.catalog import PromptError, question as lookup_question

logger = logging.getLogger("PromptBuilder")

GUIDANCE_TEMPLATE = Path(__file__).with_name("hypothesis.txt")

ABSTRACTION_HEADERS = {
    "variants": "If I have a process with the following process variants:",
    "attributes": "and the log of the process contains the following attributes:",
}

DEFAULT_TABLE_NAME = "dataframe"


class PromptBudgetError(PromptError):
    def __init__(self, deficit, max_tokens):
        super().__init__(
            f"prompt exceeds the budget of {max_tokens} tokens by {deficit} tokens "
            f"even after truncating the abstraction"
        )
        self.deficit = deficit
        self.max_tokens = max_tokens


@dataclass(frozen=True)
class PromptBundle:
    system_preamble: str
    abstraction_text: str
    question_text: str
    schema_guidance: str | None
    estimated_tokens: int

    @property
    def text(self):
        """The user message sent to the model."""
        body = f"{self.abstraction_text}\n\n{self.question_text}"
        if self.schema_guidance:
            body = f"{body} {self.schema_guidance}"
        return body


@lru_cache(maxsize=1)
def _guidance_template():
    with open(GUIDANCE_TEMPLATE, "r", encoding="utf-8") as f:
        return PromptTemplate.from_template(f.read().strip())


def schema_guidance(schema=None, table_name=DEFAULT_TABLE_NAME):
    schema = schema or ColumnMapping()
    return _guidance_template().format(
        case_id=schema.case_id,
        activity=schema.activity,
        timestamp=schema.timestamp,
        resource=schema.resource,
        table_name=table_name,
    )


def _tokens(preamble, body, budget):
    ratio = budget.chars_per_token if budget else DEFAULT_CHARS_PER_TOKEN
    return estimate_tokens(preamble, ratio) + estimate_tokens(body, ratio)


def _fit(preamble, make_body, parts, budget):
    """
    Drop trailing lines of the abstraction parts until the prompt fits.

    parts is a list of line lists, trimmed in order (first part first); each
    keeps at least one line. Returns (body, tokens) or raises PromptBudgetError.
    """
    parts = [list(p) for p in parts]
    body = make_body(parts)
    tokens = _tokens(preamble, body, budget)
    if budget is None or tokens <= budget.max_tokens:
        return body, tokens

    original = sum(len(p) for p in parts)
    for part in parts:
        while len(part) > 1 and tokens > budget.max_tokens:
            part.pop()
            body = make_body(parts)
            tokens = _tokens(preamble, body, budget)
    if tokens > budget.max_tokens:
        raise PromptBudgetError(tokens - budget.max_tokens, budget.max_tokens)
    kept = sum(len(p) for p in parts)
    logger.info(
        f"PromptBuilder: abstraction truncated to {kept}/{original} lines "
        f"to fit {budget.max_tokens} tokens."
    )
    return body, tokens


def build_direct_prompt(abstraction_text, question, budget=None, system_preamble=""):
    """Abstraction followed by the question text, nothing in between but a blank line."""
    if question.is_hypothesis:
        raise PromptError(f"question {question.id} needs build_hypothesis_prompt")
    if not abstraction_text:
        raise PromptError("abstraction text is empty")

    def make_body(parts):
        return "\n".join(parts[0]) + "\n\n" + question.text

    body, tokens = _fit(system_preamble, make_body, [abstraction_text.splitlines()], budget)
    abstraction = body[: -len(question.text) - 2]
    return PromptBundle(
        system_preamble=system_preamble,
        abstraction_text=abstraction,
        question_text=question.text,
        schema_guidance=None,
        estimated_tokens=tokens,
    )


def _hypothesis_abstraction(variant_lines, attribute_lines):
    variants = "\n".join(f" {line}" for line in variant_lines)
    attributes = "\n".join(attribute_lines)
    return (
        f"{ABSTRACTION_HEADERS['variants']}\n{variants}\n\n"
        f"{ABSTRACTION_HEADERS['attributes']}\n{attributes}"
    )


def build_hypothesis_prompt(
    variants_text,
    attributes_text,
    schema=None,
    table_name=DEFAULT_TABLE_NAME,
    budget=None,
    question=None,
    system_preamble="",
):
    """
    Hypothesis prompt: indented variants, attribute summaries,
    the hypothesis question and the schema guidance paragraph. Variant lines
    are trimmed before attribute lines when over budget.
    """
    if not variants_text or not attributes_text:
        raise PromptError("hypothesis prompt needs both variants and attributes text")
    question = question or lookup_question("HYP")

    guidance = schema_guidance(schema, table_name)
    suffix = f"\n\n{question.text} {guidance}"

    def make_body(parts):
        return _hypothesis_abstraction(parts[0], parts[1]) + suffix

    body, tokens = _fit(
        system_preamble,
        make_body,
        [variants_text.splitlines(), attributes_text.splitlines()],
        budget,
    )
    return PromptBundle(
        system_preamble=system_preamble,
        abstraction_text=body[: -len(suffix)],
        question_text=question.text,
        schema_guidance=guidance,
        estimated_tokens=tokens,
    )

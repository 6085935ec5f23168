"""
Question catalog.

Questions are data: they live in a plain-text file (questions.txt next to
this module) so new ones can be added without touching code. See
load_catalog for the record format.
"""

import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

logger = logging.getLogger("PromptBuilder")

DESCRIPTIVE = "descriptive"
CONFORMANCE = "conformance"
IMPROVEMENT = "improvement"
HYPOTHESIS = "hypothesis"
CATEGORIES = (DESCRIPTIVE, CONFORMANCE, IMPROVEMENT, HYPOTHESIS)

ABSTRACTION_KINDS = ("dfg", "variants", "petri_net", "attributes")

BUILTIN_CATALOG = Path(__file__).with_name("questions.txt")

_SATISFACTORY = "satisfactory"
_UNSATISFACTORY = "unsatisfactory"


class PromptError(Exception):
    """Base class for prompt catalog and prompt assembly errors."""


class QuestionCatalogError(PromptError):
    pass


@dataclass(frozen=True)
class RubricCriterion:
    satisfactory: bool
    text: str


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    category: str
    rubric: tuple = ()
    compatible_abstractions: frozenset = frozenset()

    def __post_init__(self):
        if not self.id:
            raise QuestionCatalogError("question id must be non-empty")
        if self.category not in CATEGORIES:
            raise QuestionCatalogError(
                f"question {self.id}: unknown category {self.category!r}"
            )
        if not self.compatible_abstractions:
            raise QuestionCatalogError(
                f"question {self.id}: compatible_abstractions must be non-empty"
            )
        unknown = set(self.compatible_abstractions) - set(ABSTRACTION_KINDS)
        if unknown:
            raise QuestionCatalogError(
                f"question {self.id}: unknown abstractions {sorted(unknown)}"
            )

    @property
    def is_hypothesis(self):
        return self.category == HYPOTHESIS

    def rubric_text(self):
        lines = []
        for criterion in self.rubric:
            label = "satisfactory" if criterion.satisfactory else "unsatisfactory"
            lines.append(f"- [{label}] {criterion.text}")
        return "\n".join(lines)


def _records(text):
    record = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if not line:
            if record:
                yield record
                record = []
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise QuestionCatalogError(f"line {lineno}: expected 'key: value', got {raw!r}")
        record.append((lineno, key.strip().lower(), value.strip()))
    if record:
        yield record


def _question(record):
    fields = {}
    rubric = []
    for lineno, key, value in record:
        if key in (_SATISFACTORY, _UNSATISFACTORY):
            rubric.append(RubricCriterion(key == _SATISFACTORY, value))
        elif key in ("id", "category", "text", "abstractions"):
            if key in fields:
                raise QuestionCatalogError(f"line {lineno}: duplicate key {key!r}")
            fields[key] = value
        else:
            raise QuestionCatalogError(f"line {lineno}: unknown key {key!r}")

    first_line = record[0][0]
    missing = [k for k in ("id", "category", "text", "abstractions") if k not in fields]
    if missing:
        raise QuestionCatalogError(
            f"record at line {first_line}: missing {', '.join(missing)}"
        )
    abstractions = frozenset(
        a.strip() for a in fields["abstractions"].split(",") if a.strip()
    )
    return Question(
        id=fields["id"],
        text=fields["text"],
        category=fields["category"],
        rubric=tuple(rubric),
        compatible_abstractions=abstractions,
    )


def parse_catalog(text):
    """
    Parse catalog text into Questions.

    Records are blank-line separated blocks of "key: value" lines with keys
    id, category, abstractions (comma separated), text, and any number of
    satisfactory / unsatisfactory rubric lines. Lines starting with # are
    comments.
    """
    questions = []
    seen = set()
    for record in _records(text):
        question = _question(record)
        if question.id in seen:
            raise QuestionCatalogError(f"duplicate question id {question.id!r}")
        seen.add(question.id)
        questions.append(question)
    return questions


def load_catalog(path):
    with open(path, "r", encoding="utf-8") as f:
        questions = parse_catalog(f.read())
    logger.info(f"PromptBuilder: loaded {len(questions)} questions from {path}.")
    return questions


def format_catalog(questions):
    blocks = []
    for q in questions:
        lines = [
            f"id: {q.id}",
            f"category: {q.category}",
            f"abstractions: {', '.join(k for k in ABSTRACTION_KINDS if k in q.compatible_abstractions)}",
            f"text: {q.text}",
        ]
        for criterion in q.rubric:
            key = _SATISFACTORY if criterion.satisfactory else _UNSATISFACTORY
            lines.append(f"{key}: {criterion.text}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def export_catalog(questions, path):
    """Write questions in the catalog file format (temp file + rename)."""
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "w", encoding="utf-8") as f:
        f.write(format_catalog(questions))
    os.replace(tmp_path, path)


@lru_cache(maxsize=1)
def _builtin():
    return tuple(load_catalog(BUILTIN_CATALOG))


def catalog():
    """The built-in questions: DQ1, CQ1, IQ1, IQ2 and HYP."""
    return list(_builtin())


def question(question_id, questions=None):
    for q in questions if questions is not None else _builtin():
        if q.id == question_id:
            return q
    raise QuestionCatalogError(f"unknown question id {question_id!r}")

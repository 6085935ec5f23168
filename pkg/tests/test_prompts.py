import pytest

from abstraction.budget import RenderBudget
from eventlog.model import ColumnMapping
from prompts import (
    ABSTRACTION_HEADERS,
    PromptBudgetError,
    PromptError,
    Question,
    QuestionCatalogError,
    RubricCriterion,
    build_direct_prompt,
    build_hypothesis_prompt,
    catalog,
    export_catalog,
    load_catalog,
    question,
)
from prompts.builder import schema_guidance
from prompts.catalog import parse_catalog

GUIDANCE_START = "I mean, can you provide me a DuckDB SQL query that I can execute"


def _transcribed(fixtures_dir):
    entries = {}
    for line in (fixtures_dir / "questions_transcribed.txt").read_text(encoding="utf-8").splitlines():
        qid, text = line.split("\t", 1)
        entries[qid] = text
    return entries


def test_builtin_question_texts_match_transcription(fixtures_dir):
    expected = _transcribed(fixtures_dir)

    assert [q.id for q in catalog()] == ["DQ1", "CQ1", "IQ1", "IQ2", "HYP"]
    for qid, text in expected.items():
        assert question(qid).text == text


def test_builtin_catalog_categories_and_abstractions():
    assert question("DQ1").category == "descriptive"
    assert question("CQ1").category == "conformance"
    assert question("IQ2").compatible_abstractions == {"petri_net"}
    assert question("HYP").is_hypothesis
    assert question("HYP").compatible_abstractions == {"variants", "attributes"}
    assert all(q.rubric for q in catalog())


def test_rubric_text_labels_each_criterion():
    text = question("DQ1").rubric_text()

    lines = text.splitlines()
    assert lines[0].startswith("- [satisfactory] GPT-4 should provide the name/category")
    assert lines[1].startswith("- [unsatisfactory] If GPT-4 does not correctly understand")


def test_unknown_question_id():
    with pytest.raises(QuestionCatalogError, match="unknown question id"):
        question("ZZ9")


def test_export_and_load_round_trip(tmp_path):
    path = tmp_path / "questions.txt"

    export_catalog(catalog(), path)

    assert load_catalog(path) == catalog()
    assert not (tmp_path / "questions.txt.tmp").exists()


def test_custom_catalog_extends_questions(tmp_path):
    extra = Question(
        id="DQ2",
        text="Which activities are the bottlenecks?",
        category="descriptive",
        rubric=(RubricCriterion(True, "names activities with long waiting times"),),
        compatible_abstractions=frozenset({"dfg"}),
    )
    path = tmp_path / "custom.txt"

    export_catalog(catalog() + [extra], path)
    loaded = load_catalog(path)

    assert question("DQ2", loaded) == extra


@pytest.mark.parametrize(
    "text, message",
    [
        ("id: A\ncategory: descriptive\nabstractions: dfg\n", "missing text"),
        ("id: A\ncategory: odd\nabstractions: dfg\ntext: q\n", "unknown category"),
        ("id: A\ncategory: descriptive\nabstractions: graph\ntext: q\n", "unknown abstractions"),
        ("id: A\ncategory: descriptive\nabstractions: dfg\ntext: q\nscore: 1\n", "unknown key"),
        (
            "id: A\ncategory: descriptive\nabstractions: dfg\ntext: q\n\n"
            "id: A\ncategory: descriptive\nabstractions: dfg\ntext: r\n",
            "duplicate question id",
        ),
        ("just words\n", "expected 'key: value'"),
    ],
)
def test_parse_catalog_rejects_bad_records(text, message):
    with pytest.raises(QuestionCatalogError, match=message):
        parse_catalog(text)


def test_direct_prompt_is_abstraction_then_question():
    abstraction = "A -> B ( frequency = 2  performance = 5400.0 )"

    bundle = build_direct_prompt(abstraction, question("DQ1"))

    assert bundle.text == abstraction + "\n\nCan you describe the process contained in this data?"
    assert bundle.schema_guidance is None
    assert bundle.estimated_tokens > 0


def test_direct_prompt_rejects_hypothesis_question():
    with pytest.raises(PromptError, match="build_hypothesis_prompt"):
        build_direct_prompt("A -> B ( frequency = 1  performance = 1.0 )", question("HYP"))


def test_direct_prompt_truncates_abstraction_to_budget():
    lines = [f"a{i} -> b{i} ( frequency = {100 - i}  performance = 1.0 )" for i in range(100)]
    budget = RenderBudget.from_tokens(200, 4)

    bundle = build_direct_prompt("\n".join(lines), question("DQ1"), budget)

    assert bundle.estimated_tokens <= 200
    kept = bundle.abstraction_text.splitlines()
    assert 1 <= len(kept) < 100
    assert kept == lines[: len(kept)]


def test_prompt_budget_error_reports_deficit():
    budget = RenderBudget.from_tokens(5, 4)

    with pytest.raises(PromptBudgetError) as info:
        build_direct_prompt("A -> B ( frequency = 1  performance = 1.0 )", question("IQ1"), budget)

    assert info.value.deficit > 0
    assert info.value.max_tokens == 5


def test_hypothesis_prompt_layout():
    variants = "A -> B ( frequency = 2  performance = 5.0 )\nA ( frequency = 1  performance = 0.0 )"
    attributes = "amount  empty: 1  quantiles: {0.0: 1, 0.25: 1, 0.5: 2, 0.75: 3, 1.0: 3}"

    bundle = build_hypothesis_prompt(variants, attributes)

    expected_head = (
        f"{ABSTRACTION_HEADERS['variants']}\n"
        " A -> B ( frequency = 2  performance = 5.0 )\n"
        " A ( frequency = 1  performance = 0.0 )\n\n"
        f"{ABSTRACTION_HEADERS['attributes']}\n"
        f"{attributes}\n\n"
        "Can you provide some hypothesis between the execution of the process and its attributes? "
        + GUIDANCE_START
    )
    assert bundle.text.startswith(expected_head)
    assert bundle.text.endswith(
        'Also, the dataframe is called "dataframe". '
        "You should use the EPOCH function of DuckDB to get the timestamp from the date."
    )


def test_schema_guidance_uses_column_mapping():
    mapping = ColumnMapping(case_id="case", activity="step", timestamp="when", resource="who")

    text = schema_guidance(mapping, table_name="events")

    assert 'the case identifier is called "case"' in text
    assert 'the activity is stored inside the attribute "step"' in text
    assert 'the timestamp is stored inside the attribute "when"' in text
    assert 'the resource is stored inside the attribute "who"' in text
    assert 'the dataframe is called "events"' in text


def test_default_schema_guidance_names_standard_columns():
    text = schema_guidance()

    assert text.startswith(GUIDANCE_START)
    assert 'the case identifier is called "case:concept:name"' in text


def test_hypothesis_prompt_trims_variants_before_attributes():
    variants = "\n".join(f"V{i} -> W ( frequency = {50 - i}  performance = 1.0 )" for i in range(50))
    attributes = "\n".join(f"attr{i}  empty: 0  quantiles: {{0.0: 1}}" for i in range(3))
    budget = RenderBudget.from_tokens(400, 4)

    bundle = build_hypothesis_prompt(variants, attributes, budget=budget)

    assert bundle.estimated_tokens <= 400
    assert " V0 -> W" in bundle.abstraction_text
    assert " V49 -> W" not in bundle.abstraction_text
    for i in range(3):
        assert f"attr{i}  empty: 0" in bundle.abstraction_text

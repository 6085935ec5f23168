from prompts.builder import (
    ABSTRACTION_HEADERS,
    PromptBudgetError,
    PromptBundle,
    build_direct_prompt,
    build_hypothesis_prompt,
)
from prompts.catalog import (
    PromptError,
    Question,
    QuestionCatalogError,
    RubricCriterion,
    catalog,
    export_catalog,
    load_catalog,
    question,
)

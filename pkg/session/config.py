"""
Session configuration.

Values are layered: built-in defaults < config file (dotenv key=value syntax,
keys are field names) < PMLLM_<FIELD> environment variables < CLI flags.
"""

import logging
import os
from dataclasses import asdict, dataclass, fields, replace

from dotenv import dotenv_values

from abstraction import KINDS, PETRI_NET, VARIANTS
from abstraction.dfg import AGGREGATIONS, MEAN
from prompts.catalog import QuestionCatalogError, question

logger = logging.getLogger("Session")

ENV_PREFIX = "PMLLM_"

REPLAY = "replay"
HTTP = "http"
LITELLM = "litellm"
BACKENDS = (REPLAY, HTTP, LITELLM)


class SessionError(Exception):
    """Base class for session configuration and orchestration errors."""


class ConfigError(SessionError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    log_path: str | None = None
    log_format: str | None = None
    pnml_path: str | None = None
    # csv column mapping
    case_column: str = "case:concept:name"
    activity_column: str = "concept:name"
    timestamp_column: str = "time:timestamp"
    resource_column: str = "org:resource"
    timestamp_format: str = "ISO8601"
    assume_utc: bool = True
    lifecycle_filter: str | None = None

    question: str = "DQ1"
    abstraction: str | None = None
    aggregation: str = MEAN
    decimals: int | None = None
    budget_tokens: int = 8000
    chars_per_token: float = 4
    system_preamble: str = ""
    table_name: str = "dataframe"
    max_rounds: int = 5
    max_result_rows: int = 30
    confirm: bool | None = None

    backend: str = REPLAY
    replay_path: str | None = None
    base_url: str = "https://api.openai.com/v1"
    credential_env: str = "OPENAI_API_KEY"
    model: str = "gpt-4"
    temperature: float = 0.0
    max_tokens: int | None = None
    timeout_s: float = 60.0
    max_retries: int = 3

    output_dir: str | None = "sessions"
    record_path: str | None = None
    emit_sql: str | None = None
    result_csv: str | None = None

    def snapshot(self):
        return asdict(self)

    @property
    def question_entry(self):
        return question(self.question)

    @property
    def resolved_abstraction(self):
        """The chosen abstraction, or the first one compatible with the question."""
        if self.abstraction:
            return self.abstraction
        q = self.question_entry
        if q.is_hypothesis:
            return VARIANTS
        return next(kind for kind in KINDS if kind in q.compatible_abstractions)

    def confirm_queries(self, backend):
        if self.confirm is not None:
            return self.confirm
        return bool(getattr(backend, "is_live", False))


_INT_FIELDS = {"decimals", "budget_tokens", "max_rounds", "max_result_rows", "max_tokens", "max_retries"}
_FLOAT_FIELDS = {"chars_per_token", "temperature", "timeout_s"}
_BOOL_FIELDS = {"assume_utc", "confirm"}
_OPTIONAL = {f.name for f in fields(SessionConfig) if f.default is None} | {"output_dir"}
FIELD_NAMES = tuple(f.name for f in fields(SessionConfig))


def _to_bool(name, raw):
    text = str(raw).strip().lower()
    if text in {"1", "true", "yes", "on"}:
        return True
    if text in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(f"{name}: expected a boolean, got {raw!r}")


def _coerce(name, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    if raw.strip() == "" and name in _OPTIONAL:
        return None
    try:
        if name in _INT_FIELDS:
            return int(raw)
        if name in _FLOAT_FIELDS:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: expected a number, got {raw!r}") from exc
    if name in _BOOL_FIELDS:
        return _to_bool(name, raw)
    return raw


def read_config_file(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file {path} does not exist")
    try:
        values = dotenv_values(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    unknown = sorted(set(values) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    return values


def read_environment(environ=None):
    environ = os.environ if environ is None else environ
    values = {}
    for name in FIELD_NAMES:
        key = f"{ENV_PREFIX}{name.upper()}"
        if key in environ:
            values[name] = environ[key]
    return values


def load_config(path=None, environ=None, overrides=None):
    """Build a validated SessionConfig from file, environment and CLI overrides."""
    values = {}
    if path:
        values.update(read_config_file(path))
    values.update(read_environment(environ))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(values) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown settings {', '.join(unknown)}")
    config = replace(SessionConfig(), **{k: _coerce(k, v) for k, v in values.items()})
    validate_config(config)
    logger.debug(
        f"Session: config question={config.question} "
        f"abstraction={config.resolved_abstraction} backend={config.backend}"
    )
    return config


def check_pair(question_id, abstraction, has_petri_net=True):
    """Raise ConfigError unless abstraction is allowed for the question."""
    try:
        q = question(question_id)
    except QuestionCatalogError as exc:
        raise ConfigError(str(exc)) from exc
    if abstraction not in KINDS:
        raise ConfigError(f"unknown abstraction {abstraction!r}, expected one of {', '.join(KINDS)}")
    if abstraction not in q.compatible_abstractions:
        allowed = ", ".join(k for k in KINDS if k in q.compatible_abstractions)
        raise ConfigError(
            f"question {q.id} cannot be asked with the {abstraction} abstraction "
            f"(compatible: {allowed})"
        )
    if abstraction == PETRI_NET and not has_petri_net:
        raise ConfigError(f"{q.id} requires a Petri net")


def needs_log(config):
    """Only a direct question over the Petri net runs without an event log."""
    try:
        q = config.question_entry
    except QuestionCatalogError as exc:
        raise ConfigError(str(exc)) from exc
    return q.is_hypothesis or config.resolved_abstraction != PETRI_NET


def validate_config(config):
    if not config.question:
        raise ConfigError("question is required")
    if not config.log_path and needs_log(config):
        raise ConfigError("log_path is required")
    check_pair(
        config.question,
        config.resolved_abstraction,
        has_petri_net=bool(config.pnml_path),
    )
    if config.aggregation not in AGGREGATIONS:
        raise ConfigError(
            f"unknown aggregation {config.aggregation!r}, expected one of {', '.join(AGGREGATIONS)}"
        )
    if config.backend not in BACKENDS:
        raise ConfigError(f"unknown backend {config.backend!r}, expected one of {', '.join(BACKENDS)}")
    if config.backend == REPLAY and not config.replay_path:
        raise ConfigError("the replay backend needs replay_path")
    if config.budget_tokens <= 0:
        raise ConfigError("budget_tokens must be positive")
    if config.chars_per_token <= 0:
        raise ConfigError("chars_per_token must be positive")
    if config.max_rounds < 1:
        raise ConfigError("max_rounds must be at least 1")
    if config.max_result_rows < 1:
        raise ConfigError("max_result_rows must be at least 1")
    if config.max_retries < 1:
        raise ConfigError("max_retries must be at least 1")
    if config.decimals is not None and config.decimals < 0:
        raise ConfigError("decimals must be non-negative")
    return config

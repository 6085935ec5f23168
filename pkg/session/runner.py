"""
Session orchestration: load -> abstract -> prompt -> LLM (-> SQL loop).

Every stage runs inside _Run.stage(), which wraps module errors in StageError
naming the stage, opens a Langfuse span when tracing is on and records
timings for live backends.
"""

import logging
import os
import time
from contextlib import contextmanager

from abstraction import (
    ATTRIBUTES,
    DFG,
    PETRI_NET,
    VARIANTS,
    abstract_attributes,
    abstract_dfg,
    abstract_petri_net,
    abstract_variants,
)
from abstraction.budget import AbstractionError, RenderBudget
from eventlog import load_log
from eventlog.model import ColumnMapping, EventLogError
from llm import Conversation, HttpBackend, LiteLLMBackend, ReplayBackend, load_litellm_config, send
from llm.conversation import LlmError
from llm.replay import record_transcript
from petrinet.model import PetriNetError, validate
from petrinet.pnml import load_pnml
from prompts import build_direct_prompt, build_hypothesis_prompt
from prompts.catalog import PromptError
from query import QueryError, SqlNotFoundError, evaluate, extract_sql, format_result, parse_sql, result_to_csv
from session.config import HTTP, LITELLM, SessionError, validate_config
from session.records import (
    ANSWERED,
    DECLINED,
    MAX_ROUNDS,
    NO_QUERY_VERDICT,
    QUERY_FAILED,
    VERDICT,
    SessionRecord,
    query_record,
    save_record,
)
from utils.langfuse_setup import span, start_trace

logger = logging.getLogger("Session")

DIRECT = "direct"
HYPOTHESIS = "hypothesis"

MAX_CONSECUTIVE_QUERY_FAILURES = 2

RESULTS_MESSAGE = (
    "These are the results of the query:\n\n{table}\n\n"
    "Do these results confirm or reject the hypothesis?"
)
QUERY_ERROR_MESSAGE = (
    "The query could not be executed: {error}\n\n"
    "Please provide a corrected query, using only the columns described above."
)

_MODULE_ERRORS = (EventLogError, PetriNetError, AbstractionError, PromptError, LlmError, QueryError, OSError)


class StageError(SessionError):
    def __init__(self, stage, cause):
        super().__init__(f"{stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


def make_backend(config, langfuse_context=None):
    if config.backend == HTTP:
        return HttpBackend(
            base_url=config.base_url,
            credential_env=config.credential_env,
            timeout_s=config.timeout_s,
            max_retries=config.max_retries,
        )
    if config.backend == LITELLM:
        llm_config = load_litellm_config()
        llm_config.setdefault("max_retries", config.max_retries)
        return LiteLLMBackend(llm_config, langfuse_context=langfuse_context)
    return ReplayBackend(config.replay_path)


def column_mapping(config):
    return ColumnMapping(
        case_id=config.case_column,
        activity=config.activity_column,
        timestamp=config.timestamp_column,
        resource=config.resource_column,
    )


def load_event_log(config):
    options = {"assume_utc": config.assume_utc, "lifecycle_filter": config.lifecycle_filter}
    if (config.log_format or os.path.splitext(config.log_path)[1].lstrip(".")).lower() == "csv":
        options["mapping"] = column_mapping(config)
        options["timestamp_format"] = config.timestamp_format
    log = load_log(config.log_path, config.log_format, **options)
    logger.info(
        f"Session: loaded {len(log)} cases / {log.event_count} events "
        f"from {config.log_path} ({log.report.summary()})."
    )
    return log


def load_petri_net(path):
    net, initial, final = load_pnml(path)
    for diagnostic in validate(net, initial, final):
        logger.warning(f"Session: Petri net {path}: {diagnostic}")
    return net, initial, final


def render_budget(config):
    return RenderBudget.from_tokens(config.budget_tokens, config.chars_per_token)


def build_abstraction(config, kind, log=None, petri_net=None):
    budget = render_budget(config)
    if kind == DFG:
        decimals = 2 if config.decimals is None else config.decimals
        return abstract_dfg(log, config.aggregation, budget, decimals)
    if kind == VARIANTS:
        return abstract_variants(log, config.aggregation, budget, config.decimals)
    if kind == ATTRIBUTES:
        return abstract_attributes(log)
    if kind == PETRI_NET:
        return abstract_petri_net(*petri_net)
    raise SessionError(f"unknown abstraction {kind!r}")


class _Run:
    """State shared by the stages of one session."""

    def __init__(self, config, mode, backend=None, trace=None):
        validate_config(config)
        self.config = config
        self.mode = mode
        self.trace = trace
        self.question = config.question_entry
        self.record = SessionRecord(
            mode=mode,
            question_id=self.question.id,
            abstraction=config.resolved_abstraction,
            config=config.snapshot(),
            rubric=[
                {"satisfactory": c.satisfactory, "text": c.text} for c in self.question.rubric
            ],
        )
        self.backend = backend
        self.conversation = None

    @property
    def live(self):
        return bool(getattr(self.backend, "is_live", False))

    @contextmanager
    def stage(self, name):
        started = time.perf_counter()
        with span(self.trace, name) as sp:
            try:
                yield sp
            except _MODULE_ERRORS as exc:
                logger.error(f"Session: stage '{name}' failed: {exc}")
                raise StageError(name, exc) from exc
            finally:
                if self.live:
                    self.record.add_timing(name, time.perf_counter() - started)

    def open_backend(self):
        if self.backend is None:
            context = {"existing_trace_id": self.trace.id} if self.trace else None
            with self.stage("backend"):
                self.backend = make_backend(self.config, context)

    def start_conversation(self, bundle):
        config = self.config
        self.record.estimated_tokens = bundle.estimated_tokens
        self.conversation = Conversation(
            model_id=config.model, temperature=config.temperature, max_tokens=config.max_tokens
        )
        if bundle.system_preamble:
            self.conversation.add_system(bundle.system_preamble)
        self.conversation.add_user(bundle.text)

    def ask(self, stage_name):
        with self.stage(stage_name) as sp:
            reply = send(self.conversation, self.backend)
            if sp:
                sp.update(metadata={"reply_chars": len(reply)})
        self.record.conversation = self.conversation.to_dict()
        return reply

    def finish(self, status):
        self.record.status = status
        self.record.conversation = self.conversation.to_dict() if self.conversation else {}
        self.record.diagnostics = list(getattr(self.backend, "diagnostics", []))
        config = self.config
        if config.record_path and self.conversation is not None:
            with self.stage("record transcript"):
                record_transcript(self.conversation, config.record_path)
        if config.output_dir:
            with self.stage("save record"):
                save_record(self.record, config.output_dir)
        logger.info(f"Session: {self.mode} session for {self.question.id} finished ({status}).")
        return self.record


def run_direct(config, backend=None, echo=print, trace=None):
    """Ask one catalog question about one abstraction; print answer and rubric."""
    trace = trace if trace is not None else start_trace("pmllm ask", {"question": config.question})
    run = _Run(config, DIRECT, backend, trace)
    if run.question.is_hypothesis:
        raise SessionError(f"question {run.question.id} needs the hypothesize command")
    kind = config.resolved_abstraction

    with run.stage("load"):
        log = load_event_log(config) if kind != PETRI_NET else None
        petri_net = load_petri_net(config.pnml_path) if kind == PETRI_NET else None
    with run.stage("abstraction"):
        text = build_abstraction(config, kind, log, petri_net)
    with run.stage("prompt"):
        bundle = build_direct_prompt(
            text, run.question, render_budget(config), config.system_preamble
        )

    run.open_backend()
    run.start_conversation(bundle)
    answer = run.ask("llm")

    echo(answer)
    echo("")
    echo(f"Rubric for {run.question.id}:")
    echo(run.question.rubric_text())
    return run.finish(ANSWERED)


def console_confirm(sql, echo=print, read=input):
    echo("The model proposes this query:\n")
    echo(sql)
    try:
        return read("\nRun it against the event log? [y/N] ").strip().lower() in {"y", "yes"}
    except EOFError:
        return False


def _emit_sql(path, sql, round_number):
    # latest query wins
    if not path:
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(sql.rstrip() + "\n")
    logger.info(f"Session: query of round {round_number} written to {path}.")


def run_hypothesis(config, max_rounds=None, backend=None, echo=print, confirm=None, trace=None):
    """
    Hypothesis formulation and verification loop.

    Each round sends the conversation, extracts SQL from the reply, evaluates
    it against the whole log and relays the (row-capped) result. Stops on a
    reply without SQL, on max_rounds, when the user declines a query, or after
    two consecutive failing queries.
    """
    if max_rounds is None:
        max_rounds = config.max_rounds
    if max_rounds < 1:
        raise SessionError("max_rounds must be at least 1")
    trace = trace if trace is not None else start_trace("pmllm hypothesize", {"question": config.question})
    run = _Run(config, HYPOTHESIS, backend, trace)
    if not run.question.is_hypothesis:
        raise SessionError(f"question {run.question.id} needs the ask command")

    with run.stage("load"):
        log = load_event_log(config)
    with run.stage("abstraction"):
        variants_text = build_abstraction(config, VARIANTS, log)
        attributes_text = build_abstraction(config, ATTRIBUTES, log)
    with run.stage("prompt"):
        bundle = build_hypothesis_prompt(
            variants_text,
            attributes_text,
            schema=log.column_mapping,
            table_name=config.table_name,
            budget=render_budget(config),
            question=run.question,
            system_preamble=config.system_preamble,
        )

    run.open_backend()
    if confirm is None and config.confirm_queries(run.backend):
        confirm = console_confirm
    run.start_conversation(bundle)

    round_number = 1
    failures = 0
    reply = run.ask("llm round 1")
    while True:
        echo(reply)
        try:
            sql = extract_sql(reply)
        except SqlNotFoundError:
            status = VERDICT if run.record.queries else NO_QUERY_VERDICT
            break

        with run.stage("emit sql"):
            _emit_sql(config.emit_sql, sql, round_number)
        if confirm and not confirm(sql):
            run.record.add_query(query_record(round_number, sql, declined=True))
            status = DECLINED
            break

        started = time.perf_counter()
        with span(run.trace, f"query round {round_number}"):
            try:
                result = evaluate(parse_sql(sql), log, config.table_name)
            except QueryError as exc:
                logger.warning(f"Session: query of round {round_number} failed: {exc}")
                run.record.add_query(query_record(round_number, sql, error=exc))
                failures += 1
                message = QUERY_ERROR_MESSAGE.format(error=exc)
            else:
                table = format_result(result, config.max_result_rows)
                run.record.add_query(query_record(round_number, sql, result, table))
                failures = 0
                message = RESULTS_MESSAGE.format(table=table)
                echo(table)
                if config.result_csv:
                    with run.stage("result csv"):
                        result_to_csv(result, config.result_csv)
        if run.live:
            run.record.add_timing(f"query round {round_number}", time.perf_counter() - started)

        if failures >= MAX_CONSECUTIVE_QUERY_FAILURES:
            status = QUERY_FAILED
            break
        if round_number >= max_rounds:
            status = MAX_ROUNDS
            break

        run.conversation.add_user(message)
        round_number += 1
        reply = run.ask(f"llm round {round_number}")

    return run.finish(status)

import argparse
import logging
import sys
from dataclasses import replace

from dotenv import load_dotenv

from abstraction import KINDS, PETRI_NET
from abstraction.budget import AbstractionError
from abstraction.dfg import AGGREGATIONS
from eventlog.model import EventLogError
from llm.conversation import LlmError
from petrinet.model import PetriNetError
from prompts.catalog import PromptError, catalog, export_catalog, load_catalog
from query import QueryError, format_result, result_to_csv, run_sql
from session.config import BACKENDS, ConfigError, SessionConfig, SessionError, load_config
from session.runner import (
    build_abstraction,
    load_event_log,
    load_petri_net,
    run_direct,
    run_hypothesis,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

RUNTIME_ERRORS = (
    EventLogError,
    PetriNetError,
    AbstractionError,
    PromptError,
    LlmError,
    QueryError,
    SessionError,
    OSError,
)


def _safe_print(text=""):
    """Print text without crashing on consoles with narrow encodings."""
    try:
        print(text)
    except UnicodeEncodeError:
        if hasattr(sys.stdout, "reconfigure"):
            try:
                sys.stdout.reconfigure(encoding="utf-8")
                print(text)
                return
            except Exception:
                pass
        encoding = getattr(sys.stdout, "encoding", None) or "utf-8"
        print(str(text).encode(encoding, errors="replace").decode(encoding))


class UsageError(Exception):
    def __init__(self, parser, message):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    """argparse parser that raises instead of exiting, so main() owns exit codes."""

    def error(self, message):
        raise UsageError(self, message)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _log_options(parser, required=True):
    group = parser.add_argument_group("event log")
    group.add_argument("--log", dest="log_path", required=required, help="Event log (.xes or .csv).")
    group.add_argument("--format", dest="log_format", choices=("xes", "csv"), help="Override format detection.")
    group.add_argument("--case-column", help="CSV case id column.")
    group.add_argument("--activity-column", help="CSV activity column.")
    group.add_argument("--timestamp-column", help="CSV timestamp column.")
    group.add_argument("--resource-column", help="CSV resource column.")
    group.add_argument("--timestamp-format", help="strptime format or ISO8601 (default).")
    group.add_argument("--lifecycle", dest="lifecycle_filter", help="Keep only events with this lifecycle:transition.")


def _abstraction_options(parser):
    group = parser.add_argument_group("abstraction")
    group.add_argument("--pnml", dest="pnml_path", help="Petri net (.pnml) for the petri_net abstraction.")
    group.add_argument("--agg", dest="aggregation", choices=AGGREGATIONS, help="Performance aggregation.")
    group.add_argument("--decimals", type=int, help="Round performance values to this many decimals.")
    group.add_argument("--budget", dest="budget_tokens", type=int, help="Token budget (default 8000).")
    group.add_argument("--chars-per-token", type=float, help="Token estimator ratio (default 4).")


def _session_options(parser):
    group = parser.add_argument_group("session")
    group.add_argument("--question", help="Catalog question id (see the catalog command).")
    group.add_argument("--backend", choices=BACKENDS, help="LLM backend (default replay).")
    group.add_argument("--replay", dest="replay_path", help="Replay fixture (JSON lines).")
    group.add_argument("--record", dest="record_path", help="Write the conversation as a replay fixture.")
    group.add_argument("--model", help="Model id sent to the backend.")
    group.add_argument("--temperature", type=float)
    group.add_argument("--max-tokens", type=int)
    group.add_argument("--base-url", help="OpenAI-compatible endpoint for the http backend.")
    group.add_argument("--credential-env", help="Environment variable holding the API key.")
    group.add_argument("--output-dir", help="Directory for session records (default sessions/).")
    group.add_argument("--system", dest="system_preamble", help="Optional system message.")


def build_parser():
    parser = _Parser(prog="pmllm", description="Textual process-mining abstractions for LLMs")
    parser.add_argument("--config", help="Session config file (KEY=value lines).")
    parser.add_argument("--verbose", action="store_true", help="Debug logging and tracebacks.")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    abstract = commands.add_parser("abstract", help="Print an abstraction of a log or Petri net.")
    _log_options(abstract, required=False)
    _abstraction_options(abstract)
    abstract.add_argument("--kind", choices=KINDS, required=True)

    ask = commands.add_parser("ask", help="Ask a catalog question about one abstraction.")
    _log_options(ask, required=False)
    _abstraction_options(ask)
    _session_options(ask)
    ask.add_argument("--abstraction", choices=KINDS, help="Defaults to the first compatible one.")

    hypothesize = commands.add_parser("hypothesize", help="Hypothesis generation and SQL verification loop.")
    _log_options(hypothesize)
    _abstraction_options(hypothesize)
    _session_options(hypothesize)
    hypothesize.add_argument("--max-rounds", type=int)
    hypothesize.add_argument("--max-rows", dest="max_result_rows", type=int, help="Result rows sent back per round.")
    hypothesize.add_argument("--table", dest="table_name", help="Table name used in the prompt (default dataframe).")
    hypothesize.add_argument(
        "--confirm", action=argparse.BooleanOptionalAction, help="Ask before running each query."
    )
    hypothesize.add_argument("--emit-sql", help="Write the latest extracted query to this file.")
    hypothesize.add_argument("--result-csv", help="Write the latest query result as CSV.")

    query = commands.add_parser("query", help="Run a SQL file against an event log, offline.")
    _log_options(query)
    query.add_argument("--sql", required=True, help="File containing one SELECT query.")
    query.add_argument("--table", dest="table_name", default="dataframe")
    query.add_argument("--max-rows", type=int, default=None, help="Rows to print (default all).")
    query.add_argument("--csv", dest="result_csv", help="Also write the full result as CSV.")

    listing = commands.add_parser("catalog", help="List the question catalog.")
    listing.add_argument("--file", help="Read this catalog instead of the built-in one.")
    listing.add_argument("--export", help="Write the catalog to this file.")

    return parser


def _overrides(args):
    names = set(SessionConfig.__dataclass_fields__)
    return {k: v for k, v in vars(args).items() if k in names and v is not None}


def _log_config(args):
    # abstract/query need no question or backend, so skip session validation
    values = _overrides(args)
    values["question"] = None
    return replace(SessionConfig(), **values)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_abstract(args):
    config = _log_config(args)
    net = log = None
    if args.kind == PETRI_NET:
        if not config.pnml_path:
            raise ConfigError("--kind petri_net needs --pnml")
        net = load_petri_net(config.pnml_path)
    else:
        if not config.log_path:
            raise ConfigError(f"--kind {args.kind} needs --log")
        log = load_event_log(config)
    _safe_print(build_abstraction(config, args.kind, log, net))


def cmd_ask(args):
    config = load_config(args.config, overrides=_overrides(args))
    run_direct(config, echo=_safe_print)


def cmd_hypothesize(args):
    overrides = _overrides(args)
    overrides.setdefault("question", "HYP")
    config = load_config(args.config, overrides=overrides)
    record = run_hypothesis(config, echo=_safe_print)
    _safe_print(f"\nSession ended: {record.status} after {len(record.queries)} queries.")


def cmd_query(args):
    config = _log_config(args)
    with open(args.sql, "r", encoding="utf-8") as f:
        text = f.read()
    log = load_event_log(config)
    result = run_sql(text, log, args.table_name)
    _safe_print(format_result(result, args.max_rows or max(len(result), 1)))
    if args.result_csv:
        result_to_csv(result, args.result_csv)
        logging.info(f"Result written to {args.result_csv}.")


def cmd_catalog(args):
    questions = load_catalog(args.file) if args.file else catalog()
    for q in questions:
        kinds = ", ".join(k for k in KINDS if k in q.compatible_abstractions)
        _safe_print(f"{q.id}  [{q.category}; {kinds}]")
        _safe_print(f"  {q.text}")
    if args.export:
        export_catalog(questions, args.export)
        logging.info(f"Catalog exported to {args.export}.")


COMMANDS = {
    "abstract": cmd_abstract,
    "ask": cmd_ask,
    "hypothesize": cmd_hypothesize,
    "query": cmd_query,
    "catalog": cmd_catalog,
}


# ---------------------------------------------------------------------------
# Main
# ---------------------------------------------------------------------------


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        exc.parser.print_help(sys.stderr)
        print(f"\nerror: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    load_dotenv()

    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        logging.error(f"Configuration error: {exc}")
        return EXIT_USAGE
    except RUNTIME_ERRORS as exc:
        logging.error(f"{args.command} failed: {exc}", exc_info=args.verbose)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

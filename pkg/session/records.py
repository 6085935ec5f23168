"""
Session records: everything needed to audit or replay a run.

The JSON layout is documented in docs/session.md. Records hold no wall-clock
data except stage timings of live runs, so replayed sessions serialize
byte-identically.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from query.formatting import format_cell

logger = logging.getLogger("Session")

RECORD_FILE = "session.json"

# hypothesis-loop outcomes
ANSWERED = "answered"
VERDICT = "verdict"
NO_QUERY_VERDICT = "no-query verdict"
MAX_ROUNDS = "max-rounds"
DECLINED = "declined"
QUERY_FAILED = "query-failed"

QUERY_OK = "ok"
QUERY_ERROR = "error"
QUERY_DECLINED = "declined"


@dataclass
class QueryRecord:
    round: int
    sql: str
    status: str
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    row_count: int = 0
    result_text: str | None = None
    error: str | None = None


@dataclass
class SessionRecord:
    mode: str
    question_id: str
    abstraction: str
    config: dict
    estimated_tokens: int = 0
    rubric: list = field(default_factory=list)
    conversation: dict = field(default_factory=dict)
    queries: list = field(default_factory=list)
    status: str | None = None
    timings: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def add_query(self, query):
        self.queries.append(query)

    def add_timing(self, stage, seconds):
        self.timings[stage] = round(seconds, 6)

    @property
    def answer(self):
        messages = self.conversation.get("messages", [])
        for message in reversed(messages):
            if message["role"] == "assistant":
                return message["content"]
        return None

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def query_record(round_number, sql, result=None, result_text=None, error=None, declined=False):
    if declined:
        return QueryRecord(round=round_number, sql=sql, status=QUERY_DECLINED)
    if error is not None:
        return QueryRecord(round=round_number, sql=sql, status=QUERY_ERROR, error=str(error))
    return QueryRecord(
        round=round_number,
        sql=sql,
        status=QUERY_OK,
        columns=list(result.columns),
        rows=[[format_cell(v) for v in row] for row in result.rows],
        row_count=len(result),
        result_text=result_text,
    )


def _run_dir(output_dir, now):
    stamp = now.astimezone(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    path = os.path.join(output_dir, stamp)
    suffix = 1
    while os.path.exists(path):
        suffix += 1
        path = os.path.join(output_dir, f"{stamp}-{suffix}")
    return path


def save_record(record, output_dir, now=None):
    """Write record to <output_dir>/<UTC timestamp>/session.json (temp file + rename)."""
    run_dir = _run_dir(output_dir, now or datetime.now(timezone.utc))
    os.makedirs(run_dir, exist_ok=True)
    path = os.path.join(run_dir, RECORD_FILE)
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(record.to_json())
        os.replace(tmp, path)
    except Exception as exc:
        logger.error(f"Session: failed to write record {path}: {exc}")
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.info(f"Session: record saved to {path}.")
    return path


def load_record(path):
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    data["queries"] = [QueryRecord(**q) for q in data.get("queries", [])]
    return SessionRecord(**data)

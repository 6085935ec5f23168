"""
CSV importer/exporter for flat event tables (RFC-4180, UTF-8, header row).

Cells are read as raw text and typed per column: a column is integer, real,
boolean (true/false, any case) or timestamp only when every non-empty cell
parses as such, otherwise text. Empty cells are missing values.
"""

import io
import logging
import re
from datetime import datetime

import pandas as pd

from eventlog.model import (
    CASE_PREFIX,
    ColumnMapping,
    Event,
    EventLogError,
    ParseReport,
    build_log,
    ensure_utc,
    flat_rows,
    parse_iso_timestamp,
)
from eventlog.xes import LIFECYCLE_KEY

logger = logging.getLogger("CsvImporter")

ISO_FORMAT = "ISO8601"

_INT_RE = re.compile(r"^[+-]?\d+$")
_REAL_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_BOOLEANS = {"true": True, "false": False}


class CsvSchemaError(EventLogError):
    pass


def _timestamp_parser(timestamp_format, assume_utc):
    if not timestamp_format or timestamp_format.upper() == ISO_FORMAT:
        return lambda cell: parse_iso_timestamp(cell, assume_utc)

    def _parse(cell):
        try:
            parsed = datetime.strptime(cell.strip(), timestamp_format)
        except ValueError:
            return None
        return ensure_utc(parsed, assume_utc)

    return _parse


def _to_bool(cell):
    return _BOOLEANS[cell.lower()]


def _infer_converter(cells, parse_timestamp):
    """Pick a converter for a column from all of its non-empty cells."""
    values = [cell for cell in cells if cell != ""]
    if not values:
        return str
    if all(_INT_RE.match(v) for v in values):
        return int
    if all(_REAL_RE.match(v) for v in values):
        return float
    if all(v.lower() in _BOOLEANS for v in values):
        return _to_bool
    if all(parse_timestamp(v) is not None for v in values):
        return parse_timestamp
    return str


def _read_frame(source):
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    try:
        return pd.read_csv(
            source,
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        return None


def parse_csv(
    source,
    mapping=None,
    timestamp_format=ISO_FORMAT,
    assume_utc=True,
    lifecycle_filter=None,
):
    """Parse a flat CSV event table into an EventLog."""
    mapping = mapping or ColumnMapping()
    report = ParseReport()
    frame = _read_frame(source)
    if frame is None:
        logger.info("CSV: empty file, returning an empty log.")
        return build_log({}, {}, mapping, report)

    columns = list(frame.columns)
    for role, name in (
        ("case id", mapping.case_id),
        ("activity", mapping.activity),
        ("timestamp", mapping.timestamp),
    ):
        if name not in columns:
            raise CsvSchemaError(f"CSV: {role} column {name!r} not found in {columns}")

    parse_timestamp = _timestamp_parser(timestamp_format, assume_utc)
    has_resource = mapping.resource in columns
    standard = set(mapping.standard_columns())
    extra_columns = [c for c in columns if c not in standard]
    converters = {
        name: _infer_converter(frame[name].tolist(), parse_timestamp)
        for name in extra_columns
    }

    case_events = {}
    for record in frame.to_dict(orient="records"):
        case_id = record[mapping.case_id]
        activity = record[mapping.activity]
        timestamp = parse_timestamp(record[mapping.timestamp])
        if not case_id or not activity or timestamp is None:
            report.rejected_events += 1
            continue
        extras = {
            name: converters[name](record[name])
            for name in extra_columns
            if record[name] != ""
        }
        transition = extras.get(LIFECYCLE_KEY)
        if lifecycle_filter and transition is not None:
            if str(transition).lower() != lifecycle_filter.lower():
                report.filtered_events += 1
                continue
        resource = record[mapping.resource] if has_resource else ""
        case_events.setdefault(case_id, []).append(
            Event(
                activity=activity,
                timestamp=timestamp,
                resource=resource or None,
                extras=extras,
            )
        )

    log = build_log(case_events, {}, mapping, report)
    if report.rejected_events:
        logger.warning(f"CSV: parse report {report.summary()}")
    logger.info(f"CSV: loaded {len(log)} cases, {log.event_count} events.")
    return log


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_csv(log):
    """Write the flat event view as CSV text; parse_csv reads it back."""
    mapping = log.column_mapping
    columns = [mapping.case_id, mapping.activity, mapping.timestamp]
    if mapping.resource in log.attribute_catalog:
        columns.append(mapping.resource)
    columns += sorted(
        name
        for name in log.attribute_catalog
        if name not in columns
        and name not in mapping.standard_columns()
        and not name.startswith(CASE_PREFIX)
    )
    columns += sorted(
        name
        for name in log.attribute_catalog
        if name.startswith(CASE_PREFIX) and name not in mapping.standard_columns()
    )
    rows = [[_cell(row.get(name)) for name in columns] for row in flat_rows(log)]
    frame = pd.DataFrame(rows, columns=columns, dtype=str)
    return frame.to_csv(index=False, lineterminator="\n")

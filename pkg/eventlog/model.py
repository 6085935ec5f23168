"""
In-memory event log.

A log is built once by an importer (xes.py / csv_log.py) and never mutated
afterwards. Attribute values are plain Python values:
str | int | float | bool | datetime (UTC-aware) | None (missing).
"""

from dataclasses import dataclass, field
from datetime import datetime, timezone

CASE_PREFIX = "case:"

TYPE_INTEGER = "integer"
TYPE_REAL = "real"
TYPE_TIMESTAMP = "timestamp"
TYPE_BOOLEAN = "boolean"
TYPE_TEXT = "text"

NUMERIC_TYPES = (TYPE_INTEGER, TYPE_REAL)


class EventLogError(Exception):
    """Base class for event-log ingestion and statistics errors."""


@dataclass(frozen=True)
class ColumnMapping:
    case_id: str = "case:concept:name"
    activity: str = "concept:name"
    timestamp: str = "time:timestamp"
    resource: str = "org:resource"

    def standard_columns(self):
        return (self.case_id, self.activity, self.timestamp, self.resource)


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: datetime
    resource: str | None = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Case:
    case_id: str
    events: tuple
    case_attributes: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AttributeInfo:
    type: str
    empty_count: int
    total_count: int


@dataclass
class ParseReport:
    rejected_events: int = 0
    dropped_cases: int = 0
    filtered_events: int = 0
    warnings: list = field(default_factory=list)

    def summary(self):
        return (
            f"rejected={self.rejected_events} dropped_cases={self.dropped_cases} "
            f"filtered={self.filtered_events} warnings={len(self.warnings)}"
        )


@dataclass(frozen=True)
class EventLog:
    cases: tuple = ()
    attribute_catalog: dict = field(default_factory=dict)
    column_mapping: ColumnMapping = field(default_factory=ColumnMapping)
    report: ParseReport = field(default_factory=ParseReport, compare=False)

    def __len__(self):
        return len(self.cases)

    @property
    def event_count(self):
        return sum(len(case.events) for case in self.cases)

    def case(self, case_id):
        for case in self.cases:
            if case.case_id == case_id:
                return case
        raise KeyError(case_id)


def value_type(value):
    """Catalog type of a single non-missing value."""
    # bool before int: bool is an int subclass
    if isinstance(value, bool):
        return TYPE_BOOLEAN
    if isinstance(value, int):
        return TYPE_INTEGER
    if isinstance(value, float):
        return TYPE_REAL
    if isinstance(value, datetime):
        return TYPE_TIMESTAMP
    return TYPE_TEXT


def _merge_types(types):
    if not types:
        return TYPE_TEXT
    if len(types) == 1:
        return next(iter(types))
    if types <= set(NUMERIC_TYPES):
        return TYPE_REAL
    return TYPE_TEXT


def ensure_utc(ts, assume_utc=True):
    """Return ts as an aware UTC datetime, or None if it is naive and assume_utc is off."""
    if ts.tzinfo is None:
        if not assume_utc:
            return None
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def parse_iso_timestamp(text, assume_utc=True):
    """Parse an ISO-8601 string into an aware UTC datetime; None when unparseable."""
    if text is None:
        return None
    raw = str(text).strip()
    if not raw:
        return None
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(raw)
    except ValueError:
        return None
    return ensure_utc(parsed, assume_utc)


def sort_events(events):
    """Stable sort by timestamp; ties keep their input order."""
    return tuple(sorted(events, key=lambda event: event.timestamp))


def flat_columns(log):
    """Column names of the one-row-per-event view, standard columns first."""
    mapping = log.column_mapping
    standard = list(mapping.standard_columns())
    others = sorted(name for name in log.attribute_catalog if name not in standard)
    return standard + others


def flat_rows(log):
    """Yield one dict per event, case attributes repeated with the case: prefix."""
    mapping = log.column_mapping
    for case in log.cases:
        case_values = {
            f"{CASE_PREFIX}{key}": value for key, value in case.case_attributes.items()
        }
        for event in case.events:
            row = {
                mapping.case_id: case.case_id,
                mapping.activity: event.activity,
                mapping.timestamp: event.timestamp,
                mapping.resource: event.resource,
            }
            row.update(case_values)
            row.update(event.extras)
            yield row


def flat_table(log):
    """Return (columns, rows) where rows are tuples aligned with columns."""
    columns = flat_columns(log)
    rows = [tuple(row.get(name) for name in columns) for row in flat_rows(log)]
    return columns, rows


def build_catalog(cases, mapping):
    """Type, empty and total counts for every flat column over all events."""
    total = sum(len(case.events) for case in cases)
    present = {}
    types = {}

    def observe(name, value):
        if value is None:
            return
        present[name] = present.get(name, 0) + 1
        types.setdefault(name, set()).add(value_type(value))

    seen = set(mapping.standard_columns())
    for case in cases:
        n_events = len(case.events)
        for key, value in case.case_attributes.items():
            name = f"{CASE_PREFIX}{key}"
            seen.add(name)
            for _ in range(n_events):
                observe(name, value)
        for event in case.events:
            observe(mapping.case_id, case.case_id)
            observe(mapping.activity, event.activity)
            observe(mapping.timestamp, event.timestamp)
            observe(mapping.resource, event.resource)
            for key, value in event.extras.items():
                seen.add(key)
                observe(key, value)

    catalog = {}
    for name in sorted(seen):
        count = present.get(name, 0)
        if name == mapping.resource and count == 0:
            continue
        catalog[name] = AttributeInfo(
            type=_merge_types(types.get(name, set())),
            empty_count=total - count,
            total_count=total,
        )
    return catalog


def build_log(case_events, case_attributes, mapping, report):
    """Assemble an EventLog from ordered {case_id: [Event]} groups."""
    cases = []
    for case_id, events in case_events.items():
        if not events:
            report.dropped_cases += 1
            report.warnings.append(f"case {case_id!r} has no valid events, dropped")
            continue
        cases.append(
            Case(
                case_id=case_id,
                events=sort_events(events),
                case_attributes=dict(case_attributes.get(case_id, {})),
            )
        )
    cases = tuple(cases)
    return EventLog(
        cases=cases,
        attribute_catalog=build_catalog(cases, mapping),
        column_mapping=mapping,
        report=report,
    )

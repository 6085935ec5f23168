"""
XES importer (IEEE 1849 subset: log -> trace -> event with
string/date/int/float/boolean/id attributes).

Extensions, globals and classifiers are ignored with a warning. Nested
list/container attributes are skipped.
"""

import logging
import xml.etree.ElementTree as ET

from eventlog.model import (
    ColumnMapping,
    Event,
    EventLogError,
    ParseReport,
    build_log,
    parse_iso_timestamp,
)

logger = logging.getLogger("XesImporter")

LIFECYCLE_KEY = "lifecycle:transition"
_IGNORED_SECTIONS = ("extension", "global", "classifier")
_SCALAR_TAGS = ("string", "date", "int", "float", "boolean", "id")


class XesParseError(EventLogError):
    def __init__(self, message, line=None, column=None):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


def _local(tag):
    return tag.rsplit("}", 1)[-1] if isinstance(tag, str) else ""


def _convert(tag, raw, assume_utc):
    """Convert a typed XES attribute value; raises ValueError when malformed."""
    if tag in ("string", "id"):
        return raw
    if tag == "int":
        return int(raw)
    if tag == "float":
        return float(raw)
    if tag == "boolean":
        lowered = raw.strip().lower()
        if lowered not in ("true", "false"):
            raise ValueError(f"not a boolean: {raw!r}")
        return lowered == "true"
    if tag == "date":
        parsed = parse_iso_timestamp(raw, assume_utc)
        if parsed is None:
            raise ValueError(f"not a timestamp (or naive): {raw!r}")
        return parsed
    raise ValueError(f"unsupported attribute type {tag}")


def _read_attributes(element, assume_utc, report, where):
    attributes = {}
    for child in element:
        tag = _local(child.tag)
        if tag not in _SCALAR_TAGS:
            if tag in ("list", "container"):
                report.warnings.append(
                    f"{where}: nested {tag} attribute {child.get('key')!r} skipped"
                )
            continue
        key = child.get("key")
        raw = child.get("value")
        if key is None or raw is None:
            continue
        try:
            attributes[key] = _convert(tag, raw, assume_utc)
        except ValueError as exc:
            report.warnings.append(f"{where}: attribute {key!r} ignored ({exc})")
    return attributes


def _is_kept_lifecycle(attributes, lifecycle_filter):
    if not lifecycle_filter:
        return True
    transition = attributes.get(LIFECYCLE_KEY)
    if transition is None:
        return True
    return str(transition).lower() == lifecycle_filter.lower()


def parse_xes(source, assume_utc=True, lifecycle_filter=None):
    """
    Parse an XES document from a binary stream or path.

    Events without concept:name or time:timestamp are rejected and counted in
    the log's ParseReport; traces left without events are dropped.
    """
    mapping = ColumnMapping()
    report = ParseReport()
    try:
        root = ET.parse(source).getroot()
    except ET.ParseError as exc:
        line, column = exc.position
        raise XesParseError(f"XES: malformed XML: {exc.msg}", line, column) from exc

    if _local(root.tag) != "log":
        raise XesParseError(f"XES: root element is <{_local(root.tag)}>, expected <log>")

    ignored = sorted({_local(c.tag) for c in root if _local(c.tag) in _IGNORED_SECTIONS})
    for section in ignored:
        report.warnings.append(f"XES: <{section}> elements ignored")
        logger.warning(f"XES: <{section}> elements ignored.")

    case_events = {}
    case_attributes = {}
    for index, trace in enumerate(t for t in root if _local(t.tag) == "trace"):
        trace_attrs = _read_attributes(trace, assume_utc, report, f"trace #{index}")
        case_id = trace_attrs.pop("concept:name", None)
        if case_id is None:
            case_id = str(index)
            report.warnings.append(
                f"trace #{index} has no concept:name, using {case_id!r} as case id"
            )
        case_id = str(case_id)
        if case_id in case_events:
            report.warnings.append(f"duplicate case id {case_id!r}, events merged")
        events = case_events.setdefault(case_id, [])
        case_attributes.setdefault(case_id, {}).update(trace_attrs)

        for event_el in trace:
            if _local(event_el.tag) != "event":
                continue
            attrs = _read_attributes(
                event_el, assume_utc, report, f"case {case_id!r} event"
            )
            activity = attrs.pop(mapping.activity, None)
            timestamp = attrs.pop(mapping.timestamp, None)
            resource = attrs.pop(mapping.resource, None)
            if not activity or timestamp is None or not hasattr(timestamp, "tzinfo"):
                report.rejected_events += 1
                continue
            if not _is_kept_lifecycle(attrs, lifecycle_filter):
                report.filtered_events += 1
                continue
            events.append(
                Event(
                    activity=str(activity),
                    timestamp=timestamp,
                    resource=None if resource is None else str(resource),
                    extras=attrs,
                )
            )

    log = build_log(case_events, case_attributes, mapping, report)
    if report.rejected_events or report.dropped_cases:
        logger.warning(f"XES: parse report {report.summary()}")
    for message in report.warnings:
        logger.debug(message)
    logger.info(f"XES: loaded {len(log)} cases, {log.event_count} events.")
    return log

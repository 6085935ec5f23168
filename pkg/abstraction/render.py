"""
Deterministic text renderings of process-mining artifacts.

Line grammars (see docs/formats.md):

    DFG:       {src} -> {dst} ( frequency = {n}  performance = {p} )
    variants:  {a1} -> {a2} -> ... ( frequency = {n}  performance = {p} )
    attribute: {name}  empty: {n}  quantiles: {0.0: v, 0.25: v, 0.5: v, 0.75: v, 1.0: v}

Activities containing "->" (or starting with a double quote) are written in
double quotes with embedded quotes doubled.
"""

import logging
import re
from datetime import datetime

from abstraction.budget import fit_lines
from abstraction.dfg import DfgEdge
from eventlog.model import NUMERIC_TYPES, TYPE_TIMESTAMP
from eventlog.statistics import (
    AttributeTypeError,
    UnknownAttributeError,
    attribute_statistics,
)

logger = logging.getLogger("Abstraction")

ARROW = " -> "

_LINE_RE = re.compile(
    r"^(?P<path>.*) \( frequency = (?P<frequency>\d+)  performance = (?P<performance>\S+) \)$"
)


def quote_activity(name):
    if "->" in name or name.startswith('"'):
        return '"' + name.replace('"', '""') + '"'
    return name


def format_performance(value, decimals=None):
    """Shortest round-trip repr, optionally after rounding to `decimals` places."""
    value = float(value)
    if decimals is not None:
        value = round(value, decimals)
    return repr(value)


def _line(activities, frequency, performance, decimals):
    path = ARROW.join(quote_activity(a) for a in activities)
    return (
        f"{path} ( frequency = {frequency}  "
        f"performance = {format_performance(performance, decimals)} )"
    )


def _budgeted(lines, budget):
    kept = fit_lines(lines, budget.max_chars if budget else None)
    return "\n".join(kept)


def render_dfg(dfg, budget=None, decimals=2):
    """One line per edge, frequency-descending; lowest-frequency lines dropped to fit the budget."""
    lines = [
        _line((e.source_activity, e.target_activity), e.frequency, e.performance, decimals)
        for e in dfg.edges
    ]
    return _budgeted(lines, budget)


def render_variants(table, budget=None, decimals=None):
    lines = [
        _line(v.sequence, v.frequency, v.performance, decimals) for v in table.variants
    ]
    return _budgeted(lines, budget)


def _split_path(path):
    activities = []
    rest = path
    while True:
        if rest.startswith('"'):
            i = 1
            chars = []
            while True:
                end = rest.index('"', i)
                chars.append(rest[i:end])
                if rest[end + 1 : end + 2] == '"':
                    chars.append('"')
                    i = end + 2
                    continue
                break
            activities.append("".join(chars))
            rest = rest[end + 1 :]
            if not rest:
                return activities
            if not rest.startswith(ARROW):
                raise ValueError(f"expected '{ARROW.strip()}' after quoted activity in {path!r}")
            rest = rest[len(ARROW) :]
            continue
        head, sep, tail = rest.partition(ARROW)
        activities.append(head)
        if not sep:
            return activities
        rest = tail


def parse_dfg_lines(text):
    """Read rendered DFG lines back into edges (performance as printed)."""
    edges = []
    for line in text.splitlines():
        if not line.strip():
            continue
        match = _LINE_RE.match(line)
        if not match:
            raise ValueError(f"not a DFG line: {line!r}")
        activities = _split_path(match.group("path"))
        if len(activities) != 2:
            raise ValueError(f"DFG line must have exactly two activities: {line!r}")
        edges.append(
            DfgEdge(
                activities[0],
                activities[1],
                int(match.group("frequency")),
                float(match.group("performance")),
            )
        )
    return edges


def format_value(value):
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_quantiles(quantiles):
    body = ", ".join(f"{level!r}: {format_value(v)}" for level, v in sorted(quantiles.items()))
    return "{" + body + "}"


def summarizable_attributes(log):
    return sorted(
        name
        for name, info in log.attribute_catalog.items()
        if info.type in NUMERIC_TYPES or info.type == TYPE_TIMESTAMP
    )


def render_attributes(log, attributes=None):
    """One summary line per numeric/timestamp attribute; others are skipped with a warning."""
    if attributes is None:
        attributes = summarizable_attributes(log)
    lines = []
    for name in attributes:
        try:
            summary = attribute_statistics(log, name)
        except (UnknownAttributeError, AttributeTypeError) as exc:
            logger.warning(f"Abstraction: attribute skipped: {exc}")
            continue
        lines.append(
            f"{name}  empty: {summary.empty_count}  "
            f"quantiles: {format_quantiles(summary.quantiles)}"
        )
    return "\n".join(lines)


def _node(transitions, node_id):
    transition = transitions.get(node_id)
    if transition is None:
        return node_id
    return f"({transition.id}, {transition.label!r})"


def _marking(marking):
    return str([f"{place}:{marking.tokens[place]}" for place in sorted(marking.tokens)])


def render_petri_net(net, initial, final):
    by_id = {t.id: t for t in net.transitions}
    places = sorted(p.id for p in net.places)
    transitions = [_node(by_id, t_id) for t_id in sorted(by_id)]
    arcs = sorted(f"{_node(by_id, src)}->{_node(by_id, dst)}" for src, dst in net.arcs)
    return "\n".join(
        [
            f"places: [ {', '.join(places)} ]",
            f"transitions: [ {', '.join(transitions)} ]",
            f"arcs: [ {', '.join(arcs)} ]",
            f"initial marking: {_marking(initial)}",
            f"final marking: {_marking(final)}",
        ]
    )

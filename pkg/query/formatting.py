"""Text and CSV renderings of query results."""

from datetime import datetime

import pandas as pd

DEFAULT_MAX_ROWS = 30
SEPARATOR = " | "


def format_cell(value):
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, datetime):
        return value.isoformat()
    return str(value)


def _is_numeric(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def format_result(table, max_rows=DEFAULT_MAX_ROWS):
    """
    Fixed-width table: header, rule, up to max_rows rows, then a
    "(k more rows)" footer when truncated or "(0 rows)" when empty.
    Numbers are right-aligned, everything else left-aligned.
    """
    if max_rows < 1:
        raise ValueError("max_rows must be at least 1")
    shown = table.rows[:max_rows]
    cells = [[format_cell(v) for v in row] for row in shown]
    widths = [len(name) for name in table.columns]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))

    def line(values, raw=None):
        parts = []
        for i, text in enumerate(values):
            numeric = raw is not None and _is_numeric(raw[i])
            parts.append(text.rjust(widths[i]) if numeric else text.ljust(widths[i]))
        return SEPARATOR.join(parts).rstrip()

    lines = [line(table.columns), "-+-".join("-" * w for w in widths)]
    lines.extend(line(row, raw) for row, raw in zip(cells, shown))
    if not table.rows:
        lines.append("(0 rows)")
    elif len(table.rows) > max_rows:
        lines.append(f"({len(table.rows) - max_rows} more rows)")
    return "\n".join(lines)


def _csv_cell(value):
    if value is None:
        return None
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return value


def result_frame(table):
    return pd.DataFrame(
        [[_csv_cell(v) for v in row] for row in table.rows],
        columns=list(table.columns),
        dtype=object,
    )


def result_to_csv(table, path):
    result_frame(table).to_csv(path, index=False, lineterminator="\n")

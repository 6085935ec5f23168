"""Per-attribute summaries: empty count and linear-interpolation quantiles."""

from dataclasses import dataclass, field

import pandas as pd

from eventlog.model import (
    NUMERIC_TYPES,
    TYPE_INTEGER,
    TYPE_TIMESTAMP,
    EventLogError,
    flat_rows,
)

QUANTILE_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)


class UnknownAttributeError(EventLogError):
    pass


class AttributeTypeError(EventLogError):
    pass


@dataclass(frozen=True)
class AttributeSummary:
    name: str
    type: str
    empty_count: int
    total_count: int
    quantiles: dict = field(default_factory=dict)


def _is_exact_rank(count, level):
    return ((count - 1) * level).is_integer()


def _quantiles(values, kind, keep_int):
    """
    Linear-interpolation quantiles (pandas default) of the present values.

    With keep_int, integer columns return exact rank hits as int; everything
    else is a float, the same as pandas gives for a column with gaps.
    """
    if kind == TYPE_TIMESTAMP:
        series = pd.Series(pd.to_datetime(values, utc=True))
        result = series.quantile(list(QUANTILE_LEVELS))
        return {q: result[q].round("us").to_pydatetime() for q in QUANTILE_LEVELS}

    result = pd.Series(values, dtype="float64").quantile(list(QUANTILE_LEVELS))
    quantiles = {}
    for q in QUANTILE_LEVELS:
        value = float(result[q])
        if keep_int and kind == TYPE_INTEGER and _is_exact_rank(len(values), q):
            quantiles[q] = int(value)
        else:
            quantiles[q] = value
    return quantiles


def attribute_statistics(log, attribute):
    """Empty count and quantiles (0, .25, .5, .75, 1) of a numeric or timestamp attribute."""
    info = log.attribute_catalog.get(attribute)
    if info is None:
        raise UnknownAttributeError(f"unknown attribute {attribute!r}")
    all_missing = info.empty_count == info.total_count
    if info.type not in NUMERIC_TYPES and info.type != TYPE_TIMESTAMP and not all_missing:
        raise AttributeTypeError(
            f"attribute {attribute!r} is {info.type}, expected numeric or timestamp"
        )

    values = [row.get(attribute) for row in flat_rows(log)]
    present = [v for v in values if v is not None]
    empty_count = len(values) - len(present)
    quantiles = _quantiles(present, info.type, keep_int=empty_count == 0) if present else {}
    return AttributeSummary(
        name=attribute,
        type=info.type,
        empty_count=empty_count,
        total_count=len(values),
        quantiles=quantiles,
    )

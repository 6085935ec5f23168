"""
Evaluation of parsed queries over in-memory tables.

The event log is exposed as one flat table (one row per event, case
attributes repeated with the case: prefix). Missing values behave like SQL
NULL: comparisons with them are unknown and WHERE keeps only rows whose
condition is true.
"""

import logging
import math
import operator
import time
from dataclasses import dataclass
from datetime import datetime, timezone

from eventlog.model import flat_table, parse_iso_timestamp
from query.ast import (
    Binary,
    Call,
    Case,
    Column,
    IsNull,
    Literal,
    Query,
    Select,
    SelectItem,
    Unary,
    contains_aggregate,
    render_expr,
)
from query.lexer import QueryError

logger = logging.getLogger("QueryEngine")

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

_COMPARE = {
    "=": operator.eq,
    "<>": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


class SqlEvaluationError(QueryError):
    pass


class SqlTypeError(SqlEvaluationError):
    pass


@dataclass(frozen=True)
class ResultTable:
    columns: tuple
    rows: tuple

    def __post_init__(self):
        width = len(self.columns)
        for row in self.rows:
            if len(row) != width:
                raise ValueError(f"row {row!r} does not have {width} values")

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        index = self.columns.index(name)
        return [row[index] for row in self.rows]


@dataclass(frozen=True)
class _Relation:
    columns: tuple  # (qualifier, name) pairs
    rows: list


@dataclass(frozen=True)
class _Group:
    key: tuple
    rows: list


class _Scope:
    def __init__(self, columns):
        self.columns = columns

    def find(self, ref):
        candidates = [
            i
            for i, (qualifier, _) in enumerate(self.columns)
            if ref.table is None or qualifier.lower() == ref.table.lower()
        ]
        exact = [i for i in candidates if self.columns[i][1] == ref.name]
        return exact or [i for i in candidates if self.columns[i][1].lower() == ref.name.lower()]

    def resolve(self, ref):
        matches = self.find(ref)
        if not matches:
            raise SqlEvaluationError(f"unknown column {render_expr(ref)}")
        if len(matches) > 1:
            raise SqlEvaluationError(
                f"column reference {render_expr(ref)} is ambiguous; qualify it with a table name"
            )
        return matches[0]


# -- value semantics ---------------------------------------------------------


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _kind(value):
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if _is_number(value):
        return "number"
    if isinstance(value, datetime):
        return "timestamp"
    return "text"


_KIND_RANK = {"boolean": 0, "number": 1, "timestamp": 2, "text": 3}


def hash_key(values):
    """Dictionary key for join and group keys; True and 1 stay apart."""
    return tuple((_kind(v), v) for v in values)


def sort_key(value):
    """Total order over mixed values: numbers < timestamps < text, missing last."""
    if value is None:
        return (True, 0, 0)
    return (False, _KIND_RANK[_kind(value)], value)


def _truth(value):
    if value is None or isinstance(value, bool):
        return value
    raise SqlTypeError(f"expected a boolean condition, got {_kind(value)} {value!r}")


def _arith(op, left, right):
    if left is None or right is None:
        return None
    if not (_is_number(left) and _is_number(right)):
        hint = ""
        if isinstance(left, datetime) or isinstance(right, datetime):
            hint = "; use EPOCH() to turn timestamps into seconds"
        raise SqlTypeError(f"cannot apply '{op}' to {_kind(left)} and {_kind(right)}{hint}")
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if right == 0:
        return None
    return left / right


def _comparable(left, right):
    if isinstance(left, datetime) and isinstance(right, str):
        parsed = parse_iso_timestamp(right)
        if parsed is None:
            raise SqlTypeError(f"cannot compare timestamp with {right!r}")
        return left, parsed
    if isinstance(left, str) and isinstance(right, datetime):
        right, left = _comparable(right, left)
        return left, right
    if _kind(left) != _kind(right):
        raise SqlTypeError(f"cannot compare {_kind(left)} with {_kind(right)}")
    return left, right


def _compare(op, left, right):
    if left is None or right is None:
        return None
    left, right = _comparable(left, right)
    return _COMPARE[op](left, right)


def _and(left, right):
    left, right = _truth(left), _truth(right)
    if left is False or right is False:
        return False
    if left is None or right is None:
        return None
    return True


def _or(left, right):
    left, right = _truth(left), _truth(right)
    if left is True or right is True:
        return True
    if left is None or right is None:
        return None
    return False


def _binary(op, left, right):
    if op == "AND":
        return _and(left, right)
    if op == "OR":
        return _or(left, right)
    if op in _COMPARE:
        return _compare(op, left, right)
    return _arith(op, left, right)


def _negate(value):
    if value is None:
        return None
    if not _is_number(value):
        raise SqlTypeError(f"cannot negate {_kind(value)}")
    return -value


def _not(value):
    value = _truth(value)
    return None if value is None else not value


def epoch(value):
    """Seconds since the Unix epoch as a real, like DuckDB's EPOCH()."""
    if value is None:
        return None
    if isinstance(value, str):
        parsed = parse_iso_timestamp(value)
        if parsed is None:
            raise SqlTypeError(f"EPOCH expects a timestamp, got {value!r}")
        value = parsed
    if not isinstance(value, datetime):
        raise SqlTypeError(f"EPOCH expects a timestamp, got {_kind(value)}")
    return (value - _EPOCH).total_seconds()


def _present(values):
    return [v for v in values if v is not None]


def _homogeneous(name, values, allowed):
    kinds = {_kind(v) for v in values}
    if len(kinds) > 1 or not kinds <= allowed:
        raise SqlTypeError(f"{name} cannot aggregate {', '.join(sorted(kinds))} values")


def _sum(values):
    present = _present(values)
    if not present:
        return None
    _homogeneous("SUM", present, {"number"})
    if all(isinstance(v, int) for v in present):
        return sum(present)
    return math.fsum(present)


def _avg(values):
    present = _present(values)
    if not present:
        return None
    _homogeneous("AVG", present, {"number"})
    return math.fsum(present) / len(present)


def _min(values):
    present = _present(values)
    if not present:
        return None
    _homogeneous("MIN", present, set(_KIND_RANK))
    return min(present)


def _max(values):
    present = _present(values)
    if not present:
        return None
    _homogeneous("MAX", present, set(_KIND_RANK))
    return max(present)


def _count(values):
    return sum(1 for v in values if v is not None)


AGGREGATE_FUNCTIONS = {"AVG": _avg, "SUM": _sum, "MIN": _min, "MAX": _max, "COUNT": _count}
SCALAR_FUNCTIONS = {"EPOCH": epoch}


# -- expression compilation ----------------------------------------------------


def _compile(expr, leaf):
    """
    Turn an expression into a function of one context (a row or a group).

    leaf(expr) handles context-specific nodes (columns, aggregates) and
    returns None for everything else, which is compiled structurally here.
    """
    fn = leaf(expr)
    if fn is not None:
        return fn
    if isinstance(expr, Literal):
        value = expr.value
        return lambda ctx: value
    if isinstance(expr, Unary):
        operand = _compile(expr.operand, leaf)
        if expr.op == "NOT":
            return lambda ctx: _not(operand(ctx))
        return lambda ctx: _negate(operand(ctx))
    if isinstance(expr, Binary):
        left, right, op = _compile(expr.left, leaf), _compile(expr.right, leaf), expr.op
        return lambda ctx: _binary(op, left(ctx), right(ctx))
    if isinstance(expr, IsNull):
        operand, negated = _compile(expr.operand, leaf), expr.negated
        return lambda ctx: (operand(ctx) is None) != negated
    if isinstance(expr, Case):
        return _compile_case(expr, leaf)
    if isinstance(expr, Call) and expr.name in SCALAR_FUNCTIONS:
        arg, fn = _compile(expr.args[0], leaf), SCALAR_FUNCTIONS[expr.name]
        return lambda ctx: fn(arg(ctx))
    raise SqlEvaluationError(f"cannot evaluate {render_expr(expr)}")


def _compile_case(expr, leaf):
    subject = _compile(expr.operand, leaf) if expr.operand is not None else None
    whens = [(_compile(c, leaf), _compile(r, leaf)) for c, r in expr.whens]
    default = _compile(expr.default, leaf) if expr.default is not None else None

    def case(ctx):
        value = subject(ctx) if subject else None
        for condition, result in whens:
            if subject:
                matched = _compare("=", value, condition(ctx))
            else:
                matched = _truth(condition(ctx))
            if matched is True:
                return result(ctx)
        return default(ctx) if default else None

    return case


def compile_row(expr, scope):
    def leaf(node):
        if isinstance(node, Column):
            return operator.itemgetter(scope.resolve(node))
        if isinstance(node, Call) and node.is_aggregate:
            raise SqlEvaluationError(
                f"aggregate {render_expr(node)} is not allowed in this context"
            )
        return None

    return _compile(expr, leaf)


def compile_group(expr, scope, keys):
    """Compile an expression evaluated once per group: keys, aggregates and constants."""
    key_columns = {
        scope.resolve(key): position for position, key in enumerate(keys) if isinstance(key, Column)
    }

    def leaf(node):
        if node in keys:
            position = keys.index(node)
            return lambda group: group.key[position]
        if isinstance(node, Call) and node.is_aggregate:
            aggregate = AGGREGATE_FUNCTIONS[node.name]
            if node.star:
                return lambda group: len(group.rows)
            arg = compile_row(node.args[0], scope)
            return lambda group: aggregate([arg(row) for row in group.rows])
        if isinstance(node, Column):
            index = scope.resolve(node)
            if index in key_columns:
                position = key_columns[index]
                return lambda group: group.key[position]
            raise SqlEvaluationError(
                f"column {render_expr(node)} must appear in the GROUP BY clause "
                f"or be used in an aggregate function"
            )
        return None

    return _compile(expr, leaf)


# -- relational operators --------------------------------------------------------


def _conjuncts(expr):
    if isinstance(expr, Binary) and expr.op == "AND":
        return _conjuncts(expr.left) + _conjuncts(expr.right)
    return [expr]


def join(left, right, condition):
    """Inner join; equality conjuncts between the two sides are hash-joined."""
    columns = left.columns + right.columns
    scope = _Scope(columns)
    split = len(left.columns)
    left_keys, right_keys, residual = [], [], []
    for conjunct in _conjuncts(condition):
        if (
            isinstance(conjunct, Binary)
            and conjunct.op == "="
            and isinstance(conjunct.left, Column)
            and isinstance(conjunct.right, Column)
        ):
            a, b = scope.resolve(conjunct.left), scope.resolve(conjunct.right)
            if a < split <= b:
                left_keys.append(a)
                right_keys.append(b - split)
                continue
            if b < split <= a:
                left_keys.append(b)
                right_keys.append(a - split)
                continue
        residual.append(compile_row(conjunct, scope))

    def keep(row):
        return all(_truth(check(row)) is True for check in residual)

    rows = []
    if left_keys:
        table = {}
        for row in right.rows:
            key = tuple(row[i] for i in right_keys)
            if None not in key:
                table.setdefault(hash_key(key), []).append(row)
        for row in left.rows:
            key = tuple(row[i] for i in left_keys)
            if None in key:
                continue
            for match in table.get(hash_key(key), ()):
                combined = row + match
                if keep(combined):
                    rows.append(combined)
    else:
        for row in left.rows:
            for match in right.rows:
                combined = row + match
                if keep(combined):
                    rows.append(combined)
    return _Relation(columns, rows)


def _output_name(item):
    if item.alias:
        return item.alias
    if isinstance(item.expr, Column):
        return item.expr.name
    return render_expr(item.expr)


def _resolve_group_key(expr, items, scope):
    if isinstance(expr, Literal) and isinstance(expr.value, int) and not isinstance(expr.value, bool):
        if not 1 <= expr.value <= len(items):
            raise SqlEvaluationError(f"GROUP BY position {expr.value} is out of range")
        return items[expr.value - 1].expr
    if isinstance(expr, Column) and expr.table is None and not scope.find(expr):
        for item in items:
            if item.alias and item.alias.lower() == expr.name.lower():
                return item.expr
    return expr


def _order_value(order, names, items, scope, grouped, keys):
    expr = order.expr
    if isinstance(expr, Literal) and isinstance(expr.value, int) and not isinstance(expr.value, bool):
        if not 1 <= expr.value <= len(names):
            raise SqlEvaluationError(f"ORDER BY position {expr.value} is out of range")
        index = expr.value - 1
        return lambda out, ctx: out[index]
    if isinstance(expr, Column) and expr.table is None:
        aliases = [i for i, item in enumerate(items) if item.alias and item.alias.lower() == expr.name.lower()]
        if aliases:
            index = aliases[0]
            return lambda out, ctx: out[index]
    fn = compile_group(expr, scope, keys) if grouped else compile_row(expr, scope)
    return lambda out, ctx: fn(ctx)


def _sort(entries, value, descending, nulls_first):
    nulls = [e for e in entries if value(e) is None]
    present = [e for e in entries if value(e) is not None]
    present.sort(key=lambda e: sort_key(value(e)), reverse=descending)
    return nulls + present if nulls_first else present + nulls


class _Evaluator:
    def __init__(self, tables):
        self.tables = {name.lower(): table for name, table in tables.items()}
        self.ctes = {}

    def relation(self, ref):
        key = ref.name.lower()
        if key in self.ctes:
            result = self.ctes[key]
            columns, rows = result.columns, list(result.rows)
        elif key in self.tables:
            columns, rows = self.tables[key]
        else:
            raise SqlEvaluationError(f"unknown table {ref.name!r}")
        qualifier = ref.qualifier
        return _Relation(tuple((qualifier, name) for name in columns), rows)

    def select(self, select):
        relation = self.relation(select.table)
        for j in select.joins:
            relation = join(relation, self.relation(j.table), j.condition)
        scope = _Scope(relation.columns)

        rows = relation.rows
        if select.where is not None:
            condition = compile_row(select.where, scope)
            rows = [row for row in rows if _truth(condition(row)) is True]

        if select.star:
            items = [SelectItem(Column(name, qualifier)) for qualifier, name in relation.columns]
        else:
            items = list(select.items)
        names = tuple(_output_name(item) for item in items)

        keys = [_resolve_group_key(e, items, scope) for e in select.group_by]
        grouped = bool(keys) or any(
            contains_aggregate(e) for e in [i.expr for i in items] + [o.expr for o in select.order_by]
        )
        if grouped and select.star:
            raise SqlEvaluationError("SELECT * cannot be combined with GROUP BY or aggregates")

        if grouped:
            key_fns = [compile_row(k, scope) for k in keys]
            partitions = {}
            for row in rows:
                key = tuple(f(row) for f in key_fns)
                partitions.setdefault(hash_key(key), (key, []))[1].append(row)
            if keys:
                contexts = [_Group(k, members) for k, members in partitions.values()]
                contexts.sort(key=lambda g: tuple(sort_key(v) for v in g.key))
            else:
                contexts = [_Group((), rows)]
            item_fns = [compile_group(item.expr, scope, keys) for item in items]
        else:
            contexts = rows
            item_fns = [compile_row(item.expr, scope) for item in items]

        entries = [(tuple(f(ctx) for f in item_fns), ctx) for ctx in contexts]

        for order in reversed(select.order_by):
            value = _order_value(order, names, items, scope, grouped, keys)
            entries = _sort(
                entries, lambda e, v=value: v(e[0], e[1]), order.descending, order.nulls_first
            )

        if select.limit is not None:
            entries = entries[: select.limit]
        return ResultTable(columns=names, rows=tuple(out for out, _ in entries))

    def run(self, query):
        if isinstance(query, Select):
            query = Query(body=query)
        for cte in query.ctes:
            self.ctes[cte.name.lower()] = self.select(cte.query)
        return self.select(query.body)


def evaluate_tables(query, tables):
    """Evaluate against {table name: (columns, rows)}; rows are tuples aligned with columns."""
    return _Evaluator(tables).run(query)


def evaluate(query, log, table_name="dataframe"):
    """Evaluate a parsed query against the flat one-row-per-event view of log."""
    started = time.perf_counter()
    columns, rows = flat_table(log)
    result = evaluate_tables(query, {table_name: (columns, rows)})
    logger.info(
        f"QueryEngine: {len(result)} result rows from {len(rows)} events "
        f"in {time.perf_counter() - started:.2f}s."
    )
    return result

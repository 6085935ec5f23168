"""
Syntax tree of the SQL subset and its printer.

render_sql produces canonical text: keywords upper-case, identifiers always
double-quoted, every binary operation parenthesized. Parsing the rendered
text yields the same tree.
"""

from dataclasses import dataclass

AGGREGATES = frozenset({"AVG", "SUM", "MIN", "MAX", "COUNT"})
SCALARS = frozenset({"EPOCH"})


@dataclass(frozen=True)
class Column:
    name: str
    table: str | None = None


@dataclass(frozen=True)
class Literal:
    value: object


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class IsNull:
    operand: object
    negated: bool = False


@dataclass(frozen=True)
class Case:
    whens: tuple
    default: object = None
    operand: object = None


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple = ()
    star: bool = False

    @property
    def is_aggregate(self):
        return self.name in AGGREGATES


@dataclass(frozen=True)
class SelectItem:
    expr: object
    alias: str | None = None


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: str | None = None

    @property
    def qualifier(self):
        return self.alias or self.name


@dataclass(frozen=True)
class Join:
    table: TableRef
    condition: object


@dataclass(frozen=True)
class OrderItem:
    expr: object
    descending: bool = False
    nulls_first: bool = False


@dataclass(frozen=True)
class Select:
    items: tuple
    table: TableRef
    joins: tuple = ()
    where: object = None
    group_by: tuple = ()
    order_by: tuple = ()
    limit: int | None = None
    star: bool = False


@dataclass(frozen=True)
class Cte:
    name: str
    query: Select


@dataclass(frozen=True)
class Query:
    body: Select
    ctes: tuple = ()


def walk(expr):
    """Yield expr and all nested sub-expressions, depth first."""
    yield expr
    if isinstance(expr, Unary):
        yield from walk(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, IsNull):
        yield from walk(expr.operand)
    elif isinstance(expr, Case):
        if expr.operand is not None:
            yield from walk(expr.operand)
        for condition, result in expr.whens:
            yield from walk(condition)
            yield from walk(result)
        if expr.default is not None:
            yield from walk(expr.default)
    elif isinstance(expr, Call):
        for arg in expr.args:
            yield from walk(arg)


def contains_aggregate(expr):
    return any(isinstance(node, Call) and node.is_aggregate for node in walk(expr))


def quote_identifier(name):
    return '"' + name.replace('"', '""') + '"'


def _literal(value):
    if value is None:
        return "NULL"
    if value is True:
        return "TRUE"
    if value is False:
        return "FALSE"
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    return repr(value)


def render_expr(expr):
    if isinstance(expr, Column):
        column = quote_identifier(expr.name)
        return f"{quote_identifier(expr.table)}.{column}" if expr.table else column
    if isinstance(expr, Literal):
        return _literal(expr.value)
    if isinstance(expr, Unary):
        if expr.op == "NOT":
            return f"(NOT {render_expr(expr.operand)})"
        return f"(- {render_expr(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({render_expr(expr.left)} {expr.op} {render_expr(expr.right)})"
    if isinstance(expr, IsNull):
        keyword = "IS NOT NULL" if expr.negated else "IS NULL"
        return f"({render_expr(expr.operand)} {keyword})"
    if isinstance(expr, Case):
        parts = ["CASE"]
        if expr.operand is not None:
            parts.append(render_expr(expr.operand))
        for condition, result in expr.whens:
            parts.append(f"WHEN {render_expr(condition)} THEN {render_expr(result)}")
        if expr.default is not None:
            parts.append(f"ELSE {render_expr(expr.default)}")
        parts.append("END")
        return " ".join(parts)
    if isinstance(expr, Call):
        if expr.star:
            return f"{expr.name}(*)"
        return f"{expr.name}({', '.join(render_expr(a) for a in expr.args)})"
    raise TypeError(f"not an expression: {expr!r}")


def _table(ref):
    text = quote_identifier(ref.name)
    return f"{text} AS {quote_identifier(ref.alias)}" if ref.alias else text


def render_select(select):
    if select.star:
        items = "*"
    else:
        items = ", ".join(
            f"{render_expr(i.expr)} AS {quote_identifier(i.alias)}" if i.alias else render_expr(i.expr)
            for i in select.items
        )
    parts = [f"SELECT {items}", f"FROM {_table(select.table)}"]
    for join in select.joins:
        parts.append(f"JOIN {_table(join.table)} ON {render_expr(join.condition)}")
    if select.where is not None:
        parts.append(f"WHERE {render_expr(select.where)}")
    if select.group_by:
        parts.append(f"GROUP BY {', '.join(render_expr(e) for e in select.group_by)}")
    if select.order_by:
        keys = []
        for item in select.order_by:
            key = render_expr(item.expr) + (" DESC" if item.descending else " ASC")
            key += " NULLS FIRST" if item.nulls_first else " NULLS LAST"
            keys.append(key)
        parts.append(f"ORDER BY {', '.join(keys)}")
    if select.limit is not None:
        parts.append(f"LIMIT {select.limit}")
    return "\n".join(parts)


def render_sql(query):
    """Canonical SQL text for a Query (or a bare Select)."""
    if isinstance(query, Select):
        return render_select(query)
    body = render_select(query.body)
    if not query.ctes:
        return body
    ctes = ",\n".join(
        f"{quote_identifier(cte.name)} AS (\n{render_select(cte.query)}\n)" for cte in query.ctes
    )
    return f"WITH {ctes}\n{body}"

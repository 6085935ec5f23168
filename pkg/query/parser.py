"""
Recursive-descent parser for the analytical SQL subset.

Supported: WITH (non-recursive CTEs), SELECT [*|items], FROM one table,
[INNER] JOIN ... ON, WHERE, GROUP BY, ORDER BY [ASC|DESC] [NULLS FIRST|LAST],
LIMIT, CASE, IS [NOT] NULL, arithmetic, comparisons, AND/OR/NOT, the
aggregates AVG/SUM/MIN/MAX/COUNT and EPOCH(ts).

Anything recognisably SQL but outside the subset raises SqlUnsupportedError
naming the construct, so callers can point users at an external engine.
"""

import logging

from query.ast import (
    AGGREGATES,
    SCALARS,
    Binary,
    Call,
    Case,
    Column,
    Cte,
    IsNull,
    Join,
    Literal,
    OrderItem,
    Query,
    Select,
    SelectItem,
    TableRef,
    Unary,
    contains_aggregate,
)
from query.lexer import EOF, IDENT, KEYWORD, NUMBER, STRING, QueryError, SqlSyntaxError, tokenize

logger = logging.getLogger("QueryEngine")

COMPARISONS = ("=", "<>", "!=", "<", "<=", ">", ">=")
WRITE_STATEMENTS = ("INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER")


class SqlUnsupportedError(QueryError):
    def __init__(self, construct, line=None, column=None):
        where = f" (line {line}, column {column})" if line else ""
        super().__init__(
            f"unsupported SQL construct: {construct}{where}; "
            f"run this query on an external SQL engine instead"
        )
        self.construct = construct
        self.line = line
        self.column = column


class Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    @property
    def current(self):
        return self.tokens[self.pos]

    def _peek(self, offset=1):
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def _next(self):
        token = self.current
        if token.kind != EOF:
            self.pos += 1
        return token

    def _error(self, message, token=None):
        token = token or self.current
        shown = token.text if token.kind != EOF else "end of input"
        return SqlSyntaxError(message, token.line, token.column, shown)

    def _unsupported(self, construct, token=None):
        token = token or self.current
        return SqlUnsupportedError(construct, token.line, token.column)

    def _accept_keyword(self, *names):
        if self.current.is_keyword(*names):
            return self._next()
        return None

    def _expect_keyword(self, name):
        token = self._accept_keyword(name)
        if token is None:
            raise self._error(f"expected {name}")
        return token

    def _accept_op(self, *ops):
        if self.current.is_op(*ops):
            return self._next()
        return None

    def _expect_op(self, op):
        token = self._accept_op(op)
        if token is None:
            raise self._error(f"expected '{op}'")
        return token

    def _identifier(self, what="identifier"):
        token = self.current
        if token.kind != IDENT:
            raise self._error(f"expected {what}")
        self._next()
        return token.value

    # -- statements --------------------------------------------------------

    def parse(self):
        token = self.current
        if token.kind == KEYWORD and token.value in WRITE_STATEMENTS:
            raise self._unsupported("write statement")
        ctes = []
        if self._accept_keyword("WITH"):
            if self.current.kind == IDENT and self.current.value.upper() == "RECURSIVE":
                raise self._unsupported("recursive CTE")
            while True:
                ctes.append(self._cte())
                if not self._accept_op(","):
                    break
        if not self.current.is_keyword("SELECT"):
            raise self._error("expected SELECT")
        body = self._select()
        self._accept_op(";")
        if self.current.kind != EOF:
            if self.current.is_op(";"):
                raise self._unsupported("multiple statements")
            raise self._error("unexpected token after end of query")
        names = [cte.name.lower() for cte in ctes]
        if len(set(names)) != len(names):
            raise self._error("duplicate CTE name", token)
        return Query(body=body, ctes=tuple(ctes))

    def _cte(self):
        name = self._identifier("CTE name")
        if self.current.is_op("("):
            raise self._unsupported("CTE column list")
        self._expect_keyword("AS")
        self._expect_op("(")
        if not self.current.is_keyword("SELECT"):
            raise self._error("expected SELECT")
        query = self._select()
        self._expect_op(")")
        return Cte(name=name, query=query)

    def _select(self):
        self._expect_keyword("SELECT")
        if self.current.is_keyword("DISTINCT"):
            raise self._unsupported("DISTINCT")
        self._accept_keyword("ALL")

        star = False
        items = []
        if self.current.is_op("*"):
            self._next()
            star = True
        else:
            while True:
                items.append(self._select_item())
                if not self._accept_op(","):
                    break

        if not self._accept_keyword("FROM"):
            raise self._error("expected FROM")
        table = self._table_ref()
        joins = []
        while True:
            join = self._join()
            if join is None:
                break
            joins.append(join)

        where = None
        if self._accept_keyword("WHERE"):
            where = self._expression()
            if contains_aggregate(where):
                raise self._error("aggregate functions are not allowed in WHERE")

        group_by = []
        if self._accept_keyword("GROUP"):
            self._expect_keyword("BY")
            while True:
                expr = self._expression()
                if contains_aggregate(expr):
                    raise self._error("aggregate functions are not allowed in GROUP BY")
                group_by.append(expr)
                if not self._accept_op(","):
                    break

        if self.current.is_keyword("HAVING"):
            raise self._unsupported("HAVING")
        if self.current.is_keyword("UNION", "INTERSECT", "EXCEPT"):
            raise self._unsupported("set operation")

        order_by = []
        if self._accept_keyword("ORDER"):
            self._expect_keyword("BY")
            while True:
                order_by.append(self._order_item())
                if not self._accept_op(","):
                    break

        limit = None
        if self._accept_keyword("LIMIT"):
            token = self.current
            if token.kind != NUMBER or not isinstance(token.value, int):
                raise self._error("LIMIT expects a non-negative integer")
            self._next()
            limit = token.value
        if self.current.is_keyword("OFFSET"):
            raise self._unsupported("OFFSET")
        if self.current.is_keyword("UNION", "INTERSECT", "EXCEPT"):
            raise self._unsupported("set operation")

        return Select(
            items=tuple(items),
            table=table,
            joins=tuple(joins),
            where=where,
            group_by=tuple(group_by),
            order_by=tuple(order_by),
            limit=limit,
            star=star,
        )

    def _alias(self):
        if self._accept_keyword("AS"):
            if self.current.kind == KEYWORD:
                return self._next().text
            return self._identifier("alias")
        if self.current.kind == IDENT:
            return self._identifier()
        return None

    def _select_item(self):
        expr = self._expression()
        return SelectItem(expr=expr, alias=self._alias())

    def _table_ref(self):
        if self.current.is_op("("):
            raise self._unsupported("subquery in FROM")
        name = self._identifier("table name")
        if self.current.is_op("."):
            raise self._unsupported("schema-qualified table")
        if self.current.is_op("("):
            raise self._unsupported("table function")
        return TableRef(name=name, alias=self._alias())

    def _join(self):
        token = self.current
        if token.is_keyword("LEFT", "RIGHT", "FULL"):
            raise self._unsupported("outer join")
        if token.is_keyword("CROSS"):
            raise self._unsupported("cross join")
        if token.is_op(","):
            raise self._unsupported("comma join")
        if self._accept_keyword("INNER"):
            if not self.current.is_keyword("JOIN"):
                raise self._error("expected JOIN")
        if not self._accept_keyword("JOIN"):
            return None
        table = self._table_ref()
        if self.current.is_keyword("USING"):
            raise self._unsupported("JOIN USING")
        self._expect_keyword("ON")
        condition = self._expression()
        if contains_aggregate(condition):
            raise self._error("aggregate functions are not allowed in JOIN conditions")
        return Join(table=table, condition=condition)

    def _order_item(self):
        expr = self._expression()
        descending = False
        if self._accept_keyword("DESC"):
            descending = True
        else:
            self._accept_keyword("ASC")
        nulls_first = False
        if self._accept_keyword("NULLS"):
            if self._accept_keyword("FIRST"):
                nulls_first = True
            elif not self._accept_keyword("LAST"):
                raise self._error("expected FIRST or LAST")
        return OrderItem(expr=expr, descending=descending, nulls_first=nulls_first)

    # -- expressions -------------------------------------------------------

    def _expression(self):
        return self._or()

    def _or(self):
        left = self._and()
        while self._accept_keyword("OR"):
            left = Binary("OR", left, self._and())
        return left

    def _and(self):
        left = self._not()
        while self._accept_keyword("AND"):
            left = Binary("AND", left, self._not())
        return left

    def _not(self):
        if self._accept_keyword("NOT"):
            if self.current.is_keyword("EXISTS"):
                raise self._unsupported("EXISTS subquery")
            return Unary("NOT", self._not())
        return self._comparison()

    def _comparison(self):
        left = self._additive()
        while True:
            token = self.current
            if token.is_op(*COMPARISONS):
                self._next()
                op = "<>" if token.value == "!=" else token.value
                if self.current.is_keyword("ANY", "ALL") or (
                    self.current.is_op("(") and self._peek().is_keyword("SELECT")
                ):
                    raise self._unsupported("subquery comparison")
                left = Binary(op, left, self._additive())
            elif token.is_keyword("IS"):
                self._next()
                negated = bool(self._accept_keyword("NOT"))
                if not self._accept_keyword("NULL"):
                    raise self._unsupported("IS DISTINCT FROM / IS TRUE")
                left = IsNull(left, negated)
            elif token.is_keyword("NOT") and self._peek().is_keyword("IN", "LIKE", "ILIKE", "BETWEEN"):
                raise self._unsupported(self._peek().value)
            elif token.is_keyword("IN", "LIKE", "ILIKE", "BETWEEN"):
                raise self._unsupported(token.value)
            else:
                return left

    def _additive(self):
        left = self._multiplicative()
        while True:
            if self.current.is_op("||"):
                raise self._unsupported("string concatenation (||)")
            token = self._accept_op("+", "-")
            if token is None:
                return left
            left = Binary(token.value, left, self._multiplicative())

    def _multiplicative(self):
        left = self._unary()
        while True:
            if self.current.is_op("%"):
                raise self._unsupported("modulo (%)")
            token = self._accept_op("*", "/")
            if token is None:
                return left
            left = Binary(token.value, left, self._unary())

    def _unary(self):
        if self._accept_op("-"):
            operand = self._unary()
            number = isinstance(operand, Literal) and isinstance(operand.value, (int, float))
            if number and not isinstance(operand.value, bool):
                return Literal(-operand.value)
            return Unary("-", operand)
        if self._accept_op("+"):
            return self._unary()
        expr = self._primary()
        if self.current.is_op("::"):
            raise self._unsupported("cast (::)")
        if self.current.is_keyword("OVER"):
            raise self._unsupported("window function")
        return expr

    def _primary(self):
        token = self.current
        if token.kind == NUMBER:
            self._next()
            return Literal(token.value)
        if token.kind == STRING:
            self._next()
            return Literal(token.value)
        if token.is_keyword("NULL"):
            self._next()
            return Literal(None)
        if token.is_keyword("TRUE", "FALSE"):
            self._next()
            return Literal(token.value == "TRUE")
        if token.is_keyword("CASE"):
            return self._case()
        if token.is_keyword("CAST"):
            raise self._unsupported("CAST")
        if token.is_keyword("EXISTS"):
            raise self._unsupported("EXISTS subquery")
        if token.is_op("("):
            self._next()
            if self.current.is_keyword("SELECT", "WITH"):
                raise self._unsupported("subquery")
            expr = self._expression()
            self._expect_op(")")
            return expr
        if token.kind == IDENT:
            if self._peek().is_op("(") and not token.quoted:
                return self._call()
            self._next()
            if self._accept_op("."):
                if self.current.is_op("*"):
                    raise self._unsupported("qualified star")
                return Column(name=self._identifier("column name"), table=token.value)
            return Column(name=token.value)
        if token.is_op("*"):
            raise self._error("'*' is only allowed as SELECT * or COUNT(*)")
        raise self._error("expected an expression")

    def _case(self):
        self._expect_keyword("CASE")
        operand = None
        if not self.current.is_keyword("WHEN"):
            operand = self._expression()
        whens = []
        while self._accept_keyword("WHEN"):
            condition = self._expression()
            self._expect_keyword("THEN")
            whens.append((condition, self._expression()))
        if not whens:
            raise self._error("CASE needs at least one WHEN")
        default = None
        if self._accept_keyword("ELSE"):
            default = self._expression()
        self._expect_keyword("END")
        return Case(whens=tuple(whens), default=default, operand=operand)

    def _call(self):
        name_token = self._next()
        name = name_token.value.upper()
        self._expect_op("(")
        if name not in AGGREGATES and name not in SCALARS:
            raise self._unsupported(f"function {name}", name_token)
        if self.current.is_keyword("DISTINCT"):
            raise self._unsupported(f"{name}(DISTINCT ...)")

        if self.current.is_op("*"):
            if name != "COUNT":
                raise self._error(f"{name}(*) is not valid")
            self._next()
            self._expect_op(")")
            call = Call(name, (), star=True)
        else:
            args = []
            if not self.current.is_op(")"):
                while True:
                    args.append(self._expression())
                    if not self._accept_op(","):
                        break
            self._expect_op(")")
            if len(args) != 1:
                raise self._error(f"{name} takes exactly one argument", name_token)
            if name in AGGREGATES and contains_aggregate(args[0]):
                raise self._unsupported("nested aggregate", name_token)
            call = Call(name, tuple(args))

        if self.current.kind == IDENT and self.current.value.upper() == "FILTER":
            raise self._unsupported("aggregate FILTER clause")
        return call


def parse_sql(text):
    """Parse SQL text into a Query tree."""
    query = Parser(text).parse()
    logger.debug(f"QueryEngine: parsed query with {len(query.ctes)} CTEs.")
    return query

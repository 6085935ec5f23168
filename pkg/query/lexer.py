"""Tokenizer for the analytical SQL subset."""

from dataclasses import dataclass

KEYWORD = "keyword"
IDENT = "ident"
STRING = "string"
NUMBER = "number"
OP = "op"
EOF = "eof"

KEYWORDS = frozenset(
    {
        "ALL", "ALTER", "AND", "AS", "ASC", "BETWEEN", "BY", "CASE", "CAST",
        "CREATE", "CROSS", "DELETE", "DESC", "DISTINCT", "DROP", "ELSE", "END",
        "EXCEPT", "EXISTS", "FALSE", "FIRST", "FROM", "FULL", "GROUP", "HAVING",
        "ILIKE", "IN", "INNER", "INSERT", "INTERSECT", "IS", "JOIN", "LAST",
        "LEFT", "LIKE", "LIMIT", "NOT", "NULL", "NULLS", "OFFSET", "ON", "OR",
        "ORDER", "OUTER", "OVER", "RIGHT", "SELECT", "THEN", "TRUE", "UNION",
        "UPDATE", "USING", "WHEN", "WHERE", "WITH",
    }
)

# longest first
OPERATORS = ("<>", "!=", "<=", ">=", "||", "::", "=", "<", ">", "+", "-", "*", "/", "%",
             "(", ")", ",", ".", ";")


class QueryError(Exception):
    """Base class for SQL extraction, parsing and evaluation errors."""


class SqlSyntaxError(QueryError):
    def __init__(self, message, line, column, token=None):
        where = f"line {line}, column {column}"
        got = f" near {token!r}" if token is not None else ""
        super().__init__(f"syntax error at {where}{got}: {message}")
        self.line = line
        self.column = column
        self.token = token


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    line: int
    column: int
    text: str = ""
    quoted: bool = False

    def is_keyword(self, *names):
        return self.kind == KEYWORD and self.value in names

    def is_op(self, *ops):
        return self.kind == OP and self.value in ops


class Lexer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.line = 1
        self.column = 1

    def _peek(self, offset=0):
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def _advance(self, count=1):
        for _ in range(count):
            if self.text[self.pos] == "\n":
                self.line += 1
                self.column = 1
            else:
                self.column += 1
            self.pos += 1

    def _error(self, message, line=None, column=None, token=None):
        return SqlSyntaxError(
            message, line or self.line, column or self.column, token
        )

    def _skip_space_and_comments(self):
        while self.pos < len(self.text):
            ch = self._peek()
            if ch.isspace():
                self._advance()
            elif ch == "-" and self._peek(1) == "-":
                while self.pos < len(self.text) and self._peek() != "\n":
                    self._advance()
            elif ch == "/" and self._peek(1) == "*":
                line, column = self.line, self.column
                end = self.text.find("*/", self.pos + 2)
                if end < 0:
                    raise self._error("unterminated comment", line, column, "/*")
                self._advance(end + 2 - self.pos)
            else:
                return

    def _quoted(self, quote):
        line, column = self.line, self.column
        start = self.pos
        self._advance()
        chars = []
        while True:
            if self.pos >= len(self.text):
                raise self._error(
                    "unterminated quoted text", line, column, self.text[start : start + 20]
                )
            ch = self._peek()
            if ch == quote:
                if self._peek(1) == quote:
                    chars.append(quote)
                    self._advance(2)
                    continue
                self._advance()
                return "".join(chars), self.text[start : self.pos], line, column
            chars.append(ch)
            self._advance()

    def _number(self):
        line, column = self.line, self.column
        start = self.pos
        while self._peek().isdigit():
            self._advance()
        is_real = False
        if self._peek() == "." and self._peek(1).isdigit():
            is_real = True
            self._advance()
            while self._peek().isdigit():
                self._advance()
        if self._peek() in ("e", "E") and (
            self._peek(1).isdigit() or (self._peek(1) in "+-" and self._peek(2).isdigit())
        ):
            is_real = True
            self._advance(2)
            while self._peek().isdigit():
                self._advance()
        text = self.text[start : self.pos]
        value = float(text) if is_real else int(text)
        return Token(NUMBER, value, line, column, text)

    def tokens(self):
        result = []
        while True:
            self._skip_space_and_comments()
            if self.pos >= len(self.text):
                result.append(Token(EOF, None, self.line, self.column, ""))
                return result
            ch = self._peek()
            line, column = self.line, self.column
            if ch == "'":
                value, text, line, column = self._quoted("'")
                result.append(Token(STRING, value, line, column, text))
            elif ch == '"':
                value, text, line, column = self._quoted('"')
                if not value:
                    raise self._error("empty quoted identifier", line, column, text)
                result.append(Token(IDENT, value, line, column, text, quoted=True))
            elif ch.isdigit() or (ch == "." and self._peek(1).isdigit()):
                result.append(self._number())
            elif ch.isalpha() or ch == "_":
                start = self.pos
                while self._peek().isalnum() or self._peek() in ("_", "$"):
                    self._advance()
                word = self.text[start : self.pos]
                if word.upper() in KEYWORDS:
                    result.append(Token(KEYWORD, word.upper(), line, column, word))
                else:
                    result.append(Token(IDENT, word, line, column, word))
            else:
                for op in OPERATORS:
                    if self.text.startswith(op, self.pos):
                        self._advance(len(op))
                        result.append(Token(OP, op, line, column, op))
                        break
                else:
                    raise self._error("unexpected character", line, column, ch)


def tokenize(text):
    return Lexer(text).tokens()

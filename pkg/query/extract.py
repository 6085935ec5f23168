import re

from query.lexer import QueryError, SqlSyntaxError, tokenize
from query.parser import parse_sql

_FENCE_RE = re.compile(r"```[ \t]*([A-Za-z0-9_+-]*)[^\n]*\n(.*?)```", re.DOTALL)
_LEADING_COMMENTS_RE = re.compile(r"\A(?:\s+|--[^\n]*(?:\n|\Z)|/\*.*?\*/)*", re.DOTALL)
_FIRST_WORD_RE = re.compile(r"[A-Za-z]+")


class SqlNotFoundError(QueryError):
    def __init__(self):
        super().__init__(
            "no SQL found in the response; paste the query into a file and run "
            "it with the query subcommand"
        )


def _first_keyword(text):
    rest = text[_LEADING_COMMENTS_RE.match(text).end() :]
    match = _FIRST_WORD_RE.match(rest)
    return match.group(0).upper() if match else None


def _names_a_source(text):
    try:
        return any(token.is_keyword("FROM") for token in tokenize(text))
    except SqlSyntaxError:
        return False


def _is_bare_sql(text):
    if _first_keyword(text) not in ("WITH", "SELECT"):
        return False
    try:
        parse_sql(text)
    except SqlSyntaxError:
        # malformed queries count once they name a FROM source
        return _names_a_source(text)
    except QueryError:
        # unsupported constructs are still SQL
        return True
    return True


def extract_sql(response):
    """
    The SQL in an LLM reply: the first ```sql block, else the first untagged
    block starting with WITH/SELECT, else the whole reply when it is itself a
    query. Always stripped; extracting from extracted SQL returns it unchanged.
    """
    blocks = _FENCE_RE.findall(response)
    for tag, body in blocks:
        if tag.lower() == "sql" and body.strip():
            return body.strip()
    for tag, body in blocks:
        if not tag and _first_keyword(body) in ("WITH", "SELECT"):
            return body.strip()
    text = response.strip()
    if text and _is_bare_sql(text):
        return text
    raise SqlNotFoundError()

from query.ast import Query, render_sql
from query.evaluator import (
    ResultTable,
    SqlEvaluationError,
    SqlTypeError,
    evaluate,
    evaluate_tables,
)
from query.extract import SqlNotFoundError, extract_sql
from query.formatting import format_result, result_to_csv
from query.lexer import QueryError, SqlSyntaxError
from query.parser import SqlUnsupportedError, parse_sql


def run_sql(text, log, table_name="dataframe"):
    return evaluate(parse_sql(text), log, table_name)

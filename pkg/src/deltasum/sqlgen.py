"""SQL text for the control and delta queries in PostgreSQL and SQL Server.

Only text is produced; nothing here connects to a database. Table layout:

    "Id"                 surrogate key (identity / serial)
    "Category"           class label
    "DateTime"           absolute epoch microseconds   (control tables)
    "DateTimeIncrement"  per-class delta microseconds  (delta tables)

The SQL Server forms are reconstructions; only the PostgreSQL delta select
mirrors a published query shape.
"""

from __future__ import annotations

import enum
import re

from .bench import Method
from .errors import InvalidIdentifier

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_LITERAL = re.compile(r"[A-Za-z0-9_]+\Z")

PK_COL = "Id"
CLASS_COL = "Category"
ABS_COL = "DateTime"
DELTA_COL = "DateTimeIncrement"


class SqlDialect(str, enum.Enum):
    POSTGRES = "postgres"
    MSSQL = "mssql"


class SqlAction(str, enum.Enum):
    SELECT = "select"
    INSERT = "insert"


def _check_ident(name: str) -> str:
    if not isinstance(name, str) or not _IDENT.match(name):
        raise InvalidIdentifier(f"invalid identifier {name!r}")
    return name


def _check_literal(label: str) -> str:
    if not isinstance(label, str) or not _LITERAL.match(label):
        raise InvalidIdentifier(f"invalid class literal {label!r}")
    return label


def quote(dialect: SqlDialect, name: str) -> str:
    _check_ident(name)
    return f'"{name}"' if dialect is SqlDialect.POSTGRES else f"[{name}]"


def _to_timestamp(dialect: SqlDialect, expr: str) -> str:
    if dialect is SqlDialect.POSTGRES:
        return f"to_timestamp({expr} / 1000000.0)"
    return (
        f"DATEADD(MICROSECOND, CAST({expr} % 1000000 AS int), "
        f"DATEADD(SECOND, CAST({expr} / 1000000 AS int), "
        f"CAST('1970-01-01T00:00:00' AS datetime2(6))))"
    )


def emit_select_sql(dialect, method, table: str, predicate: str | None = None) -> str:
    """Latest value per class.

    Delta: SUM of the increments per class, converted to a timestamp.
    Control: per-class MAX in a grouped subquery joined back to the table on
    class and interval.
    """
    d = SqlDialect(dialect)
    method = Method(method)
    q = lambda name: quote(d, name)  # noqa: E731
    t = q(table)
    where = f"  WHERE {q(CLASS_COL)} = '{_check_literal(predicate)}'\n" if predicate is not None else ""

    if method is Method.DELTA:
        s = f"src.{q('S')}"
        return (
            f"SELECT src.{q(CLASS_COL)}, {_to_timestamp(d, s)} AS {q('Latest')}\n"
            f"FROM (\n"
            f"  SELECT {q(CLASS_COL)}, SUM({q(DELTA_COL)}) AS {q('S')}\n"
            f"  FROM {t}\n"
            f"{where}"
            f"  GROUP BY {q(CLASS_COL)}\n"
            f") AS src\n"
            f"ORDER BY src.{q(CLASS_COL)};\n"
        )

    v = f"x.{q(ABS_COL)}"
    return (
        f"SELECT x.{q(PK_COL)}, x.{q(CLASS_COL)}, {_to_timestamp(d, v)} AS {q('Latest')}\n"
        f"FROM {t} AS x\n"
        f"JOIN (\n"
        f"  SELECT {q(CLASS_COL)}, MAX({q(ABS_COL)}) AS {q(ABS_COL)}\n"
        f"  FROM {t}\n"
        f"{where}"
        f"  GROUP BY {q(CLASS_COL)}\n"
        f") AS y\n"
        f"  ON x.{q(CLASS_COL)} = y.{q(CLASS_COL)} AND x.{q(ABS_COL)} = y.{q(ABS_COL)}\n"
        f"ORDER BY x.{q(CLASS_COL)};\n"
    )


def emit_insert_sql(dialect, method, table: str) -> str:
    """Parameterized single-row insert.

    The delta form stores ``value - COALESCE(SUM(increments), 0)`` for the
    row's class; an empty class sums to NULL, so the value goes in verbatim.
    """
    d = SqlDialect(dialect)
    method = Method(method)
    q = lambda name: quote(d, name)  # noqa: E731
    t = q(table)
    if d is SqlDialect.POSTGRES:
        cls_param, val_param = "$1::text", "$2::bigint"
    else:
        cls_param, val_param = "@Category", "@Value"

    if method is Method.CONTROL:
        return (
            f"INSERT INTO {t} ({q(CLASS_COL)}, {q(ABS_COL)})\n"
            f"VALUES ({cls_param}, {val_param});\n"
        )
    return (
        f"INSERT INTO {t} ({q(CLASS_COL)}, {q(DELTA_COL)})\n"
        f"SELECT {cls_param}, {val_param} - COALESCE(SUM({q(DELTA_COL)}), 0)\n"
        f"FROM {t}\n"
        f"WHERE {q(CLASS_COL)} = {cls_param};\n"
    )


def emit_sql(dialect, method, action, table: str, predicate: str | None = None) -> str:
    if SqlAction(action) is SqlAction.SELECT:
        return emit_select_sql(dialect, method, table, predicate)
    return emit_insert_sql(dialect, method, table)


def is_well_formed(sql: str) -> bool:
    """Cheap structural check: quotes close and parentheses balance outside them."""
    depth = 0
    closer = None
    for ch in sql:
        if closer is not None:
            if ch == closer:
                closer = None
            continue
        if ch in "'\"":
            closer = ch
        elif ch == "[":
            closer = "]"
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0 and closer is None

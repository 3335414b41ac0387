"""Deterministic reports: sorted-key JSON for machines, rich tables for people."""

import io
import json
from typing import Any, Literal
from collections.abc import Mapping, Sequence

from sympy import Basic, Matrix
from pydantic import Field, BaseModel, ConfigDict
from rich.text import Text
from rich.table import Table
from rich.console import Console

from src.sdk.linalg import fmt
from src.types.errors import ValidationFailure


def jsonable(value: Any) -> Any:
    """Exact values as canonical strings, containers as lists and string-keyed dicts.

    Examples:
        >>> from sympy import Rational
        >>> jsonable({(0, 1): Rational(-2, 4), "dims": (1, 2)})
        {'(0, 1)': '-1/2', 'dims': [1, 2]}
    """
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Matrix):
        return [[fmt(value[i, j]) for j in range(value.cols)] for i in range(value.rows)]
    if isinstance(value, Basic):
        return fmt(value)
    if isinstance(value, BaseModel):
        return jsonable(value.model_dump())
    if isinstance(value, dict):
        return {_key(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return str(value)


def _key(key: Any) -> str:
    if isinstance(key, str):
        return key
    if isinstance(key, tuple):
        return "(" + ", ".join(_key(k) for k in key) + ")"
    return str(jsonable(key))


def combination(labels: Sequence[str], vec: Mapping[Any, Any]) -> str:
    """A sparse vector as a readable linear combination.

    Examples:
        >>> from sympy import Rational
        >>> combination(("a", "b"), {1: Rational(1, 2), 0: -1})
        '-1·a + 1/2·b'
        >>> combination(("a",), {})
        '0'
    """
    terms = [f"{fmt(value)}·{labels[i]}" for i, value in sorted(vec.items()) if value != 0]
    return " + ".join(terms) or "0"


class ReportTable(BaseModel):
    model_config = ConfigDict(frozen=True)
    title: str
    columns: list[str]
    rows: list[list[str]] = Field(default_factory=list)


class Report(BaseModel):
    """The outcome of one command.

    Attributes:
        result (dict[str, Any]): Machine payload; values go through `jsonable`.
        tables (list[ReportTable]): Extra tables for the human format only.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)
    command: str
    source: str
    status: Literal["ok", "failed"] = "ok"
    result: dict[str, Any] = Field(default_factory=dict)
    tables: list[ReportTable] = Field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "ok" else 2

    def payload(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "input": self.source,
            "status": self.status,
            "result": jsonable(self.result),
        }


def failure_report(command: str, source: str, error: ValidationFailure) -> Report:
    result = {
        "error": type(error).__name__,
        "message": error.message,
        "witness": jsonable(error.witness),
    }
    return Report(command=command, source=source, status="failed", result=result)


def render_machine(report: Report) -> str:
    return json.dumps(report.payload(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _cell(value: Any) -> str:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, ensure_ascii=False)
    if value is None:
        return "-"
    return str(value)


def render_human(report: Report) -> str:
    """Plain-text tables; no colours, fixed width."""
    buffer = io.StringIO()
    console = Console(
        file=buffer, width=100, color_system=None, force_terminal=False, highlight=False
    )
    payload = report.payload()
    summary = Table(title=Text(f"{report.command} ({report.source}) {report.status}"))
    summary.add_column("key")
    summary.add_column("value", overflow="fold")
    for key in sorted(payload["result"]):
        summary.add_row(Text(key), Text(_cell(payload["result"][key])))
    console.print(summary)
    for extra in report.tables:
        table = Table(title=Text(extra.title))
        for name in extra.columns:
            table.add_column(name, overflow="fold")
        for row in extra.rows:
            table.add_row(*[Text(cell) for cell in row])
        console.print(table)
    return buffer.getvalue()


def render(report: Report, fmt_name: Literal["human", "machine"]) -> str:
    return render_machine(report) if fmt_name == "machine" else render_human(report)

import json

from sympy import Matrix, Rational

from src.sdk.report import (
    Report,
    ReportTable,
    render,
    jsonable,
    combination,
    render_human,
    failure_report,
    render_machine,
)
from src.types.errors import JacobiFail


def test_jsonable_keeps_values_exact() -> None:
    assert jsonable(Matrix([[Rational(1, 3), 0], [-1, 2]])) == [["1/3", "0"], ["-1", "2"]]
    assert jsonable({-3: 1, 0: Rational(4, 2)}) == {"-3": 1, "0": "2"}
    assert jsonable({(0, 1): [True, None]}) == {"(0, 1)": [True, None]}


def test_combination_skips_zero_terms() -> None:
    assert combination(("e", "f", "h"), {0: 0, 2: Rational(-2)}) == "-2·h"
    assert combination(("e", "f", "h"), {0: 0}) == "0"


def test_exit_codes() -> None:
    assert Report(command="udr", source="odd_plane").exit_code == 0
    assert Report(command="udr", source="odd_plane", status="failed").exit_code == 2


def test_failure_report_carries_the_witness() -> None:
    error = JacobiFail("graded Jacobi identity fails", triple=("e", "f", "h"))
    report = failure_report("check-lie", "broken_sl2", error)
    assert report.status == "failed"
    assert report.result == {
        "error": "JacobiFail",
        "message": "graded Jacobi identity fails",
        "witness": {"triple": ["e", "f", "h"]},
    }


def test_machine_output_is_sorted_json() -> None:
    report = Report(
        command="cohomology", source="sl2", result={"lie": {0: 0}, "agrees": True, "n": 3}
    )
    text = render_machine(report)
    assert text.endswith("\n")
    payload = json.loads(text)
    assert payload == {
        "command": "cohomology",
        "input": "sl2",
        "status": "ok",
        "result": {"agrees": True, "lie": {"0": 0}, "n": 3},
    }
    assert text.index('"agrees"') < text.index('"lie"') < text.index('"n"')
    assert render(report, "machine") == text


def test_human_output_lists_tables() -> None:
    report = Report(
        command="udr",
        source="odd_plane",
        result={"dims": [3, 6], "labels": None},
        tables=[ReportTable(title="R^u_2", columns=["product", "value"], rows=[["a*b", "1·c"]])],
    )
    text = render_human(report)
    assert "odd_plane" in text
    assert "[3, 6]" in text
    assert "R^u_2" in text
    assert "a*b" in text
    assert render(report, "human") == text
    assert render_human(report) == text

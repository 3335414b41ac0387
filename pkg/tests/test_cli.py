import json
from pathlib import Path

import pytest

from main import DEFAULT_FIXTURES, Engine
from src.sdk.loader import FIXTURES
from src.sdk.report import render
from src.sdk.runtime import runtime
from src.types.errors import UsageError


def machine(capsys: pytest.CaptureFixture[str]) -> dict:
    return json.loads(capsys.readouterr().out)


def test_every_command_has_a_handler() -> None:
    engine = Engine()
    assert engine.commands == sorted(DEFAULT_FIXTURES)


@pytest.mark.parametrize(
    "command", sorted(name for name, fixture in DEFAULT_FIXTURES.items() if fixture)
)
def test_default_fixtures_pass(command: str) -> None:
    report = Engine(format="machine").dispatch(command)
    assert report.command == command
    assert report.source == DEFAULT_FIXTURES[command]
    assert report.exit_code == 0


def test_flags_win_over_document_params() -> None:
    assert Engine(input="sl2").param("n") == 3
    assert Engine(input="sl2", n=1).param("n") == 1
    assert Engine(input="heisenberg").param("n") == 2
    assert Engine().param("seed") == 0


def test_cohomology_of_sl2() -> None:
    result = Engine(format="machine").dispatch("cohomology").payload()["result"]
    assert result["n"] == 3
    assert result["chevalley"] == {"-3": 1, "-2": 0, "-1": 0, "0": 1}
    assert result["rank_oracle"] == result["chevalley"]
    assert result["agrees"] is True
    assert result["classical"] == result["coefficients"]


def test_udr_of_the_odd_plane() -> None:
    result = Engine(format="machine").dispatch("udr").payload()["result"]
    assert result["dims"] == [3, 6]
    assert result["surjective"] is True
    assert result["polynomial"] is True


def test_connecting_of_the_arrow() -> None:
    result = Engine(format="machine").dispatch("connecting").payload()["result"]
    assert result["first_order"] == [["-1"]]
    assert result["on_cohomology"] == {"0": [["-1"]]}
    assert result["agrees"] is True


def test_check_lie_lists_sl2(capsys: pytest.CaptureFixture[str]) -> None:
    Engine(format="machine").run("check-lie")
    payload = machine(capsys)
    assert payload["status"] == "ok"
    assert payload["input"] == "sl2"
    assert payload["result"]["labels"] == ["e", "f", "h"]
    assert payload["result"]["abelian"] is False


def test_broken_jacobi_exits_with_a_witness(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as info:
        Engine(input="broken_sl2", format="machine").run("check-lie")
    assert info.value.code == 2
    payload = machine(capsys)
    assert payload["status"] == "failed"
    assert payload["result"]["error"] == "JacobiFail"
    assert payload["result"]["witness"] == {"triple": ["e", "f", "h"]}


def test_non_solution_exits_with_its_defect(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    doc = json.loads((FIXTURES / "odd_mc.json").read_text(encoding="utf-8"))
    doc["params"]["element"] = "not_mc"
    path = tmp_path / "not_mc.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(SystemExit) as info:
        Engine(input=str(path), format="machine").run("mc-check")
    assert info.value.code == 2
    payload = machine(capsys)
    assert payload["input"] == "not_mc"
    assert payload["result"]["error"] == "NotMaurerCartan"
    assert "defect" in payload["result"]["witness"]


def test_usage_errors_exit_with_one(capsys: pytest.CaptureFixture[str]) -> None:
    with pytest.raises(SystemExit) as info:
        Engine(input="no_such_fixture").run("check-lie")
    assert info.value.code == 1
    assert "usage error" in capsys.readouterr().err
    with pytest.raises(UsageError, match="unknown command"):
        Engine().dispatch("homology")


def test_human_format(capsys: pytest.CaptureFixture[str]) -> None:
    Engine(format="human").run("udr")
    out = capsys.readouterr().out
    assert "R^u_2" in out
    assert "odd_plane" in out


def test_output_does_not_depend_on_threads(monkeypatch: pytest.MonkeyPatch) -> None:
    single = render(Engine().dispatch("cohomology"), "machine")
    monkeypatch.setattr(runtime, "threads", 4)
    assert render(Engine().dispatch("cohomology"), "machine") == single
    assert render(Engine().dispatch("udr"), "human") == render(Engine().dispatch("udr"), "human")

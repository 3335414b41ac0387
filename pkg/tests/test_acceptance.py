from collections.abc import Callable

import pytest
from sympy import Matrix

from src.sdk import acceptance
from src.sdk.runtime import runtime
from src.sdk.acceptance import CRITERIA, Suite, gluing, stirling, same_maps, run_scoreboard
from src.sdk.artin import dual_numbers
from src.sdk.deformation import derivation_sheaf
from src.types.errors import AxiomFail


def test_criteria_are_numbered() -> None:
    assert sorted(CRITERIA) == [f"{k:02d}" for k in range(1, 15)]


def test_stirling() -> None:
    assert [stirling(5, k) for k in range(6)] == [0, 1, 15, 25, 10, 1]


def test_missing_degrees_count_as_zero() -> None:
    assert same_maps({0: Matrix([[0]])}, {})
    assert not same_maps({0: Matrix([[1]])}, {})
    assert not same_maps({0: Matrix([[1]])}, {0: Matrix([[-1]])})


def test_gluing_rejects_non_derivations() -> None:
    theta = derivation_sheaf(Suite().covers["pinched"])
    with pytest.raises(AxiomFail, match="not a derivation"):
        gluing(theta, ("a", "b"), Matrix([[1, 0], [0, 0]]), dual_numbers(), 1)


@pytest.mark.parametrize("key", ["02", "03", "04", "06"])
def test_fast_criteria_pass(key: str) -> None:
    (outcome,) = run_scoreboard(only=[key])
    assert outcome.key == key
    assert outcome.passed, outcome.detail


def test_details_are_reproducible() -> None:
    first = run_scoreboard(seed=3, only=["03", "04"])
    again = run_scoreboard(seed=3, only=["04", "03"])
    assert [o.key for o in first] == ["03", "04"]
    assert first == again


@pytest.mark.slow
def test_scoreboard_passes() -> None:
    outcomes = run_scoreboard()
    assert len(outcomes) == 14
    assert [o.key for o in outcomes if not o.passed] == []


def _with_criteria(monkeypatch: pytest.MonkeyPatch, **checks: Callable[[Suite], str]) -> None:
    table = {key.lstrip("_"): (f"criterion {key}", check) for key, check in checks.items()}
    monkeypatch.setattr(acceptance, "CRITERIA", {**table, "14": CRITERIA["14"]})


def test_replay_fails_when_a_replayed_criterion_fails(monkeypatch: pytest.MonkeyPatch) -> None:
    def broken(suite: Suite) -> str:
        raise AxiomFail("always", seed=suite.seed)

    _with_criteria(monkeypatch, _01=broken, _02=lambda suite: "steady")
    first, second, replay = run_scoreboard(only=["01", "02", "14"])
    assert not first.passed
    assert second.passed
    assert not replay.passed
    assert replay.detail == "replayed criteria fail (criteria=['01'])"


def test_replay_compares_details_across_thread_counts(monkeypatch: pytest.MonkeyPatch) -> None:
    _with_criteria(monkeypatch, _01=lambda suite: f"threads {runtime.threads}")
    _, replay = run_scoreboard(only=["01", "14"])
    assert replay.detail == "details differ between thread counts (criteria=['01'])"


def test_replay_passes_on_steady_criteria(monkeypatch: pytest.MonkeyPatch) -> None:
    _with_criteria(monkeypatch, _01=lambda suite: "steady", _02=lambda suite: "also steady")
    (replay,) = run_scoreboard(only=["14"])
    assert replay.passed, replay.detail
    assert replay.detail == "2 criteria replayed with another thread count"

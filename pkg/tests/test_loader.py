import json

import pytest
from sympy import Matrix, Rational

from src.sdk.loader import (
    FIXTURES,
    Workspace,
    load_document,
    parse_document,
    bundled_fixtures,
    serialize_document,
)
from src.types.errors import UsageError, JacobiFail, ShapeMismatch


def workspace(name: str) -> Workspace:
    document, stem = load_document(name)
    return Workspace(document=document, name=stem)


def raw(name: str) -> dict:
    return json.loads((FIXTURES / f"{name}.json").read_text(encoding="utf-8"))


def test_bundled_fixtures() -> None:
    assert bundled_fixtures() == [
        "arrow",
        "broken_sl2",
        "dual_numbers",
        "heisenberg",
        "loop",
        "odd_mc",
        "odd_plane",
        "pinched",
        "sl2",
    ]


@pytest.mark.parametrize("name", bundled_fixtures())
def test_fixtures_round_trip(name: str) -> None:
    document, _ = load_document(name)
    text = serialize_document(document)
    assert parse_document(text) == document
    assert serialize_document(parse_document(text)) == text


def test_rationals_are_exact() -> None:
    doc = parse_document(
        '{"algebras": {"x": {"degrees": {"0": ["a"], "1": ["b"]},'
        ' "differential": [["a", "b", "2/4"]]}}}'
    )
    assert doc.algebras["x"].differential[0][2] == Rational(1, 2)
    assert '"1/2"' in serialize_document(doc)


def test_floats_are_rejected() -> None:
    with pytest.raises(UsageError, match="differential"):
        parse_document(
            '{"algebras": {"x": {"degrees": {"0": ["a"], "1": ["b"]},'
            ' "differential": [["a", "b", 0.5]]}}}'
        )


def test_malformed_json_reports_the_position() -> None:
    with pytest.raises(UsageError, match=r"doc\.json:1:\d+"):
        parse_document('{"algebras": ', "doc.json")


def test_references_must_resolve() -> None:
    with pytest.raises(UsageError, match="params.algebra"):
        parse_document(
            '{"algebras": {"x": {"degrees": {"0": ["a"]}}}, "params": {"algebra": "y"}}'
        )
    with pytest.raises(UsageError, match="unknown basis labels"):
        parse_document(
            '{"algebras": {"x": {"degrees": {"0": ["a"]}, "bracket": [["a", "a", "b", 1]]}}}'
        )
    with pytest.raises(UsageError):
        load_document("no_such_fixture")


def test_sl2_workspace() -> None:
    ws = workspace("sl2")
    g = ws.algebra()
    assert g.labels == ("e", "f", "h")
    assert g.bracket({2: 1}, {0: 1}) == {0: 2}
    assert ws.module().dim == 3
    assert ws.algebra() is g


def test_broken_sl2_has_a_jacobi_witness() -> None:
    with pytest.raises(JacobiFail) as info:
        workspace("broken_sl2").algebra()
    assert info.value.witness == {"triple": ("e", "f", "h")}


def test_elements_over_artin_coefficients() -> None:
    ws = workspace("odd_mc")
    g, alpha, A = ws.element()
    assert alpha == {1: 1}
    assert A.labels == ("1", "e")
    _, beta, B = ws.element("not_mc")
    assert beta == {0: 1}
    assert B is None


def test_cover_families() -> None:
    ws = workspace("loop")
    cover = ws.cover()
    assert cover.nerve == (("a",), ("b",), ("a", "b"))
    datum = ws.family()
    assert datum.base.labels == ("1", "e")
    grid = datum.gluing[("a", "b")]
    assert grid[:, 0].is_zero_matrix
    assert not grid[:, 1].is_zero_matrix
    pinched = workspace("pinched")
    assert pinched.artin("point").dim == 1
    assert pinched.family().base.exponent == 1


def test_gluing_must_be_a_derivation() -> None:
    doc = raw("pinched")
    doc["families"]["euler"]["gluing"]["a,b"][0]["operator"] = [[1, 0], [0, 0]]
    ws = Workspace(document=parse_document(json.dumps(doc)))
    with pytest.raises(ShapeMismatch):
        ws.family()


def test_ideals_and_extensions() -> None:
    g, span = workspace("arrow").ideal()
    assert g.labels == ("u", "w")
    assert span == Matrix([[0], [1]])
    h, center = workspace("heisenberg").extension()
    assert center == {2: 1}
    assert h.bracket({0: 1}, {1: 1}) == {2: 1}


def test_pick_needs_a_choice() -> None:
    doc = parse_document(
        '{"algebras": {"x": {"degrees": {"0": ["a"]}}, "y": {"degrees": {"0": ["b"]}}}}'
    )
    ws = Workspace(document=doc)
    with pytest.raises(UsageError, match="params"):
        ws.algebra()
    assert ws.algebra("y").labels == ("b",)
    X, algebras = Workspace(document=parse_document(json.dumps(raw("odd_plane")))).points()
    assert X.points == ("p",)
    assert list(algebras) == ["p"]


def test_table_algebras_get_an_implicit_unit() -> None:
    doc = parse_document(
        '{"artin": {"cube": {"labels": ["1", "t", "t2"], "table": [["t", "t", "t2", 1]]},'
        ' "point": {"labels": ["1"]}}}'
    )
    ws = Workspace(document=doc)
    cube = ws.local("cube")
    assert cube.exponent == 2
    assert cube.mul({0: 1}, {2: 1}) == {2: 1}
    assert ws.local("point").dim == 1

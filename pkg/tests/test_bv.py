import pytest
from sympy import Matrix
from hypothesis import given, settings, strategies as st

from src.sdk.bv import (
    check_bv,
    dagger_action,
    rigidity_check,
    central_quotient,
    bv_from_chevalley,
    rigidity_character,
)
from src.sdk.ran import FiniteSpace
from src.sdk.dg_lie import (
    DgLieAlgebra,
    LieMorphism,
    abelian,
    make_dg_lie,
    identity_morphism,
    random_nilpotent_lie,
)
from src.sdk.graded import ChainMap, GradedSpace, betti, make_complex, zero_complex, map_from_rule
from src.types.errors import AxiomFail, ShapeMismatch, NotLieMorphism

sl2 = make_dg_lie(
    zero_complex(GradedSpace(components={0: ("e", "f", "h")})),
    [(0, 1, 2, 1), (0, 2, 0, -2), (1, 2, 1, 2)],
)
line = abelian(zero_complex(GradedSpace(components={0: ("x",)})))
# one odd generator: its suspension is even, so words are powers
odd_line = abelian(zero_complex(GradedSpace(components={1: ("a",)})))
arrow_space = GradedSpace(components={0: ("u",), 1: ("w",)})
arrow = DgLieAlgebra(
    complex=make_complex(
        arrow_space,
        ChainMap(source=arrow_space, target=arrow_space, degree=1, blocks={0: Matrix([[1]])}),
    )
)
heisenberg = make_dg_lie(
    zero_complex(GradedSpace(components={0: ("p", "q", "z")})), [(0, 1, 2, 1)]
)
# dw = z: the center is a boundary and the lift of w̄ has character 1
tail_space = GradedSpace(components={-1: ("w",), 0: ("z",)})
tail = DgLieAlgebra(
    complex=make_complex(
        tail_space,
        ChainMap(source=tail_space, target=tail_space, degree=1, blocks={-1: Matrix([[1]])}),
    )
)


def test_abelian_chevalley_has_zero_bracket() -> None:
    C = bv_from_chevalley(arrow, 3)
    assert C.bracket == {}
    assert C.unital
    assert check_bv(C).passed


def test_sl2_window_is_a_bv_algebra() -> None:
    C = bv_from_chevalley(sl2, 3)
    report = check_bv(C)
    assert report.passed
    assert report.unital
    assert report.truncated
    assert set(report.checks) >= {"BV relation", "shifted Jacobi", "biderivation", "filtration"}
    assert check_bv(bv_from_chevalley(sl2, 3, reduced=True)).passed


def test_bracket_restricts_to_letters() -> None:
    C = bv_from_chevalley(sl2, 2)
    assert C.c({(0,): 1}, {(1,): 1}) == {(2,): 1}
    assert C.c({(2,): 1}, {(0,): 1}) == {(0,): 2}
    assert C.shifted({(0,): 1}, {(1,): 1}) == {(2,): -1}


def test_operators_as_matrices() -> None:
    C = bv_from_chevalley(sl2, 2, reduced=True)
    index = C.complex.keyed.index
    assert C.lie_derivative({(0,): 1})[index[(2,)], index[(1,)]] == 1
    assert C.multiplication({(0,): 1})[index[(0, 1)], index[(1,)]] == 1
    assert C.multiplication({(0,): 1})[:, index[(0, 1)]].is_zero_matrix


def test_perturbed_product_breaks_the_bv_relation() -> None:
    C = bv_from_chevalley(sl2, 2)
    broken = C.model_copy(update={"product": {**C.product, ((0,), (1,)): {}}})
    report = check_bv(broken)
    assert report.checks["BV relation"] is not None
    assert not report.passed
    assert "BV relation" in report.failures()


def test_windows_need_n() -> None:
    with pytest.raises(ShapeMismatch):
        bv_from_chevalley(sl2, 0)
    with pytest.raises(ShapeMismatch):
        dagger_action(identity_morphism(sl2), 0)


def test_dagger_action_of_sl2() -> None:
    action = dagger_action(identity_morphism(sl2), 2)
    assert action.algebra.complex.dims() == {-1: 3, 0: 3}
    assert action.homotopy.degree == -1
    assert len(action.operators) == 6


def test_abelian_dagger_acts_by_multiplication() -> None:
    action = dagger_action(identity_morphism(odd_line), 2)
    for position, (side, _) in enumerate(action.cone.keyed.keys):
        if side == "t":
            assert action.operators[position].is_zero_matrix
        else:
            assert action.operators[position] == action.bv.multiplication({(0,): 1})


def test_brackets_must_be_preserved() -> None:
    with pytest.raises(NotLieMorphism):
        LieMorphism(
            source=sl2, target=sl2, map=map_from_rule(sl2.space, sl2.space, lambda i: {i: 2})
        )


@pytest.mark.parametrize("n", [2, 3])
def test_rigidity_of_sl2(n: int) -> None:
    report = rigidity_check(identity_morphism(sl2), n)
    assert report.passed
    assert report.strict
    assert len(report.classes) == 3
    assert len(report.homotopies) == 3


def test_zero_morphism_is_rigid() -> None:
    iota = LieMorphism(
        source=line, target=sl2, map=map_from_rule(line.space, sl2.space, lambda i: {})
    )
    report = rigidity_check(iota, 3)
    assert report.passed
    assert report.classes == ("H^0[0]",)
    assert all(h.is_zero_matrix for h in report.homotopies)


def test_rigidity_over_two_points() -> None:
    X = FiniteSpace(points=("p", "q"))
    report = rigidity_check(identity_morphism(odd_line), 2, X)
    assert report.passed
    assert len(report.classes) == 1
    assert report.homotopies == ()


def test_heisenberg_character_is_trivial() -> None:
    quotient = central_quotient(heisenberg, {2: 1})
    assert quotient.algebra.dim == 2
    report = rigidity_character(heisenberg, {2: 1}, identity_morphism(quotient.algebra), 2)
    assert report.character == (0, 0)
    assert report.is_trivial
    assert len(report.homotopies) == 2


def test_boundary_center_has_unit_character() -> None:
    quotient = central_quotient(tail, {1: 1})
    report = rigidity_character(tail, {1: 1}, identity_morphism(quotient.algebra), 2)
    assert report.character == (1,)
    assert not report.is_trivial


def test_extension_must_be_central() -> None:
    with pytest.raises(AxiomFail):
        central_quotient(heisenberg, {0: 1})
    with pytest.raises(ShapeMismatch):
        rigidity_character(heisenberg, {2: 1}, identity_morphism(sl2), 2)


@settings(derandomize=True, max_examples=4, deadline=None)
@given(st.integers(min_value=0, max_value=1000))
def test_seeded_dg_algebras_are_rigid(seed: int) -> None:
    g = random_nilpotent_lie(seed)
    report = rigidity_check(identity_morphism(g), 1)
    assert report.passed
    assert len(report.classes) == sum(betti(g.complex).values())

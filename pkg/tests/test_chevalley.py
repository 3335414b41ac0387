import pytest
from sympy import Matrix
from hypothesis import given, settings, strategies as st

from src.sdk.chevalley import (
    is_unit,
    chevalley,
    group_like,
    counit_defect,
    is_group_like,
    quillen_forward,
    quillen_inverse,
    twisting_defect,
    reduced_chevalley,
    induced_chevalley_map,
    coproduct_filtration,
    coassociativity_defect,
    cocommutativity_defect,
    filtration_matches_length,
    chevalley_with_coefficients,
    chevalley_eilenberg_oracle,
)
from src.sdk.dg_lie import (
    DgLieAlgebra,
    make_dg_lie,
    adjoint_module,
    trivial_module,
    random_nilpotent_lie,
)
from src.sdk.graded import (
    ChainMap,
    GradedSpace,
    betti,
    shift,
    sym_power,
    make_complex,
    zero_complex,
    filtered_quasi_iso,
)
from src.types.errors import SquareNonzero, NotMaurerCartan

sl2 = make_dg_lie(
    zero_complex(GradedSpace(components={0: ("e", "f", "h")})),
    [(0, 1, 2, 1), (0, 2, 0, -2), (1, 2, 1, 2)],
)
h3 = make_dg_lie(zero_complex(GradedSpace(components={0: ("x", "y", "z")})), [(0, 1, 2, 1)])
plane = DgLieAlgebra(complex=zero_complex(GradedSpace(components={0: ("a", "b")})))
arrow_space = GradedSpace(components={0: ("a",), 1: ("b",)})
arrow = DgLieAlgebra(
    complex=make_complex(
        arrow_space,
        ChainMap(source=arrow_space, target=arrow_space, degree=1, blocks={0: Matrix([[1]])}),
    )
)
C_sl2 = chevalley(sl2, 3)


def test_abelian_chevalley_is_exterior_algebra() -> None:
    C = chevalley(plane, 2)
    assert C.complex.dims() == {-2: 1, -1: 2, 0: 1}
    assert betti(C.complex) == {-2: 1, -1: 2, 0: 1}


def test_sl2_and_heisenberg_betti_numbers() -> None:
    assert betti(C_sl2.complex) == {-3: 1, -2: 0, -1: 0, 0: 1}
    assert betti(chevalley(h3, 3).complex) == {-3: 1, -2: 2, -1: 2, 0: 1}
    assert betti(reduced_chevalley(sl2, 3).complex) == {-3: 1, -2: 0, -1: 0}


def test_coalgebra_axioms() -> None:
    assert coassociativity_defect(C_sl2) is None
    assert cocommutativity_defect(C_sl2) is None
    assert counit_defect(C_sl2) is None
    assert coassociativity_defect(reduced_chevalley(h3, 3)) is None


def test_linear_part_is_symmetric_power_of_shift() -> None:
    C = chevalley(arrow, 2)
    keys = C.keyed.keys
    picked = [i for i, word in enumerate(keys) if len(word) == 2]
    linear = C.part_matrix(1).extract(picked, picked)
    expected = sym_power(shift(arrow.complex, 1), 2).complex.differential.flat_matrix()
    assert linear == expected


def test_coproduct_filtration_is_word_length() -> None:
    assert filtration_matches_length(chevalley(sl2, 2))
    bottom = coproduct_filtration(chevalley(plane, 2))[0]
    assert bottom[0].cols == 1
    assert bottom[-1].cols == 0


def test_group_like_and_unit() -> None:
    C = chevalley(plane, 2)
    assert group_like(C) == [()]
    assert is_unit(C, {(): 1})
    assert not is_group_like(C, {})
    assert not is_group_like(C, {(): 1, (0,): 1})


def test_coefficients_match_classical_oracle() -> None:
    adjoint = adjoint_module(sl2)
    ours = betti(chevalley_with_coefficients(sl2, adjoint, 3).complex)
    theirs = betti(chevalley_eilenberg_oracle(sl2, adjoint, 3))
    assert ours == theirs
    assert ours[1] == 3


def test_trivial_coefficients_on_abelian_algebra() -> None:
    keyed = chevalley_with_coefficients(plane, trivial_module(plane), 2)
    assert betti(keyed.complex) == {1: 2, 2: 1}


def test_quillen_roundtrip_on_abelian_algebras() -> None:
    source = chevalley(plane, 2)
    target = chevalley(plane, 2)
    f1 = {(0,): {1: 1}, (1,): {0: 1}}
    assert not twisting_defect(source, target, f1)
    F = quillen_inverse(source, target, f1)
    forward = {word: image for word, image in quillen_forward(F).items() if image}
    assert forward == f1
    assert F.images[(0, 1)] == {(0, 1): -1}


def test_trivial_twisting_morphism() -> None:
    source = chevalley(plane, 2)
    F = quillen_inverse(source, chevalley(sl2, 2), {})
    assert F.images[()] == {(): 1}
    assert F.images[(0,)] == {}


def test_non_twisting_morphism_is_rejected() -> None:
    source = chevalley(plane, 2)
    with pytest.raises(NotMaurerCartan):
        quillen_inverse(source, chevalley(sl2, 2), {(0,): {0: 1}, (1,): {1: 1}})


def test_identity_induces_filtered_quasi_iso() -> None:
    C = chevalley(sl2, 2)
    f = induced_chevalley_map({i: {i: 1} for i in range(3)}, C, C)
    assert filtered_quasi_iso(f, C.filtration, C.filtration)


def test_group_like_needs_room_for_every_square() -> None:
    C = chevalley(plane, 1)
    assert is_group_like(C, {(): 1})
    assert not is_group_like(C, {(): 1, (0,): 1})
    assert not is_group_like(C, {(): 1, (0,): 0, (1,): 1})


@settings(derandomize=True, max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=1000), st.integers(min_value=1, max_value=3))
def test_seeded_chevalley_parts_square_to_zero(seed: int, n: int) -> None:
    C = chevalley(random_nilpotent_lie(seed), n)
    assert C.square_defect() is None
    assert not C.part_matrix(1).is_zero_matrix


def test_jacobi_failure_shows_up_as_a_nonzero_square() -> None:
    space = GradedSpace(components={0: ("a", "b", "c")})
    table = {(0, 1): {2: 1}, (1, 0): {2: -1}, (1, 2): {1: 1}, (2, 1): {1: -1}}
    broken = DgLieAlgebra(complex=zero_complex(space), table=table)
    with pytest.raises(SquareNonzero, match="d'' is nonzero"):
        chevalley(broken, 3)
    assert chevalley(sl2, 3).square_defect() is None

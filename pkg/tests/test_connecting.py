import pytest
from sympy import Matrix, Rational
from hypothesis import given, settings, strategies as st

from src.sdk.dg_lie import (
    DgLieAlgebra,
    cone_lie,
    make_dg_lie,
    direct_sum_lie,
    direct_sum_index,
    random_nilpotent_lie,
)
from src.sdk.graded import ChainMap, GradedSpace, betti, make_complex, zero_complex
from src.sdk.acceptance import same_maps
from src.sdk.connecting import (
    ConnectingTilde,
    enveloping,
    les_coboundary,
    connecting_tilde,
    connecting_morphism,
)
from src.types.errors import AxiomFail, NotAnIdeal

sl2_space = GradedSpace(components={0: ("e", "f", "h")})
sl2 = make_dg_lie(zero_complex(sl2_space), [(0, 1, 2, 1), (0, 2, 0, -2), (1, 2, 1, 2)])

odd_space = GradedSpace(components={1: ("x",), 2: ("y",)})
odd = make_dg_lie(zero_complex(odd_space), [(0, 0, 1, 1)])


def _arrow(names: tuple[str, str]) -> DgLieAlgebra:
    space = GradedSpace(components={0: (names[0],), 1: (names[1],)})
    d = ChainMap(source=space, target=space, degree=1, blocks={0: Matrix([[1]])})
    return DgLieAlgebra(complex=make_complex(space, d))


arrow = _arrow(("u", "w"))

# a acts on u and w by weight one, du = w
weight_space = GradedSpace(components={0: ("a", "u"), 1: ("w",)})
weight = make_dg_lie(
    make_complex(
        weight_space,
        ChainMap(
            source=weight_space,
            target=weight_space,
            degree=1,
            blocks={0: Matrix([[0, 1]])},
        ),
    ),
    [(0, 1, 1, 1), (0, 2, 2, 1)],
)
w_line = Matrix([[0], [0], [1]])


def test_pbw_dimensions() -> None:
    U = enveloping(sl2, 3)
    assert len(U.words) == 20
    assert U.filtration_dims() == [1, 4, 10, 20]
    assert U.free_quotient_dim() == 20


def test_abelian_enveloping_is_symmetric() -> None:
    abelian = DgLieAlgebra(complex=zero_complex(sl2_space))
    U = enveloping(abelian, 2)
    assert U.multiply({(1,): 1}, {(0,): 1}) == {(0, 1): 1}
    assert U.symmetrize((0, 1)) == {(0, 1): 1}


def test_straightening_uses_the_bracket() -> None:
    U = enveloping(sl2, 2)
    # fe = ef - h
    assert U.straighten((1, 0)) == {(0, 1): 1, (2,): -1}
    assert U.symmetrize((0, 1)) == {(0, 1): 1, (2,): Rational(-1, 2)}
    assert U.desymmetrize({(0, 1): 1}) == {(0, 1): 1, (2,): Rational(1, 2)}
    assert U.multiply({(0, 1): 1}, {(2,): 1}) == {}


def test_odd_squares() -> None:
    U = enveloping(odd, 2)
    assert U.words == ((), (0,), (1,), (0, 1), (1, 1))
    assert U.straighten((0, 0)) == {(1,): Rational(1, 2)}


def test_enveloping_differential() -> None:
    U = enveloping(arrow, 2)
    assert U.d((0, 0)) == {(0, 1): 2}
    assert U.d((0, 1)) == {}
    assert betti(U.complex) == {0: 1, 1: 0}


def test_jacobi_failure_breaks_pbw() -> None:
    broken = {
        (0, 1): {2: 1},
        (1, 0): {2: -1},
        (0, 2): {0: -1},
        (2, 0): {0: 1},
        (1, 2): {1: 2},
        (2, 1): {1: -2},
    }
    with pytest.raises(AxiomFail):
        enveloping(DgLieAlgebra(complex=zero_complex(sl2_space), table=broken), 3)


def test_zero_ideal_has_zero_tilde() -> None:
    tilde = ConnectingTilde(cone=cone_lie(sl2, Matrix.zeros(3, 0)), bound=3)
    assert tilde.factor_defect() is None
    assert tilde.twisting == {}


def test_abelian_tilde_is_linear() -> None:
    tilde = connecting_tilde(arrow, Matrix([[0], [1]]), 3)
    assert tilde.factor_defect() is None
    assert all(len(word) == 1 for word in tilde.twisting)


def test_snake_coboundary() -> None:
    c = connecting_morphism(arrow, Matrix([[0], [1]]), 2)
    assert c.first_order() == Matrix([[-1]])
    assert c.transport_quasi_iso
    assert c.on_cohomology() == {0: Matrix([[-1]])}
    assert les_coboundary(arrow, Matrix([[0], [1]])) == {0: Matrix([[-1]])}


def test_split_ideal_has_no_coboundary() -> None:
    g = direct_sum_lie([_arrow(("a", "b")), _arrow(("c", "e"))])
    index = direct_sum_index([arrow, arrow])
    span = Matrix.zeros(4, 2)
    span[index[(0, 0)], 0] = 1
    span[index[(0, 1)], 1] = 1
    c = connecting_morphism(g, span, 2)
    assert c.first_order().is_zero_matrix
    assert all(m.is_zero_matrix for m in les_coboundary(g, span).values())


def test_higher_components() -> None:
    c = connecting_morphism(weight, w_line, 2)
    assert c.images[()] == {(): 1}
    assert c.images[(0,)] == {}
    assert c.images[(1,)] == {(0,): -1}
    assert c.images[(0, 1)] == {(0,): Rational(-1, 2)}
    assert c.tilde.twisting[(0, 1)] == {0: Rational(1, 2)}
    assert c.transport_quasi_iso


def test_first_order_matches_the_long_exact_sequence() -> None:
    c = connecting_morphism(weight, w_line, 2)
    expected = {0: Matrix([[0, -1]])}
    assert c.on_cohomology() == expected
    assert les_coboundary(weight, w_line) == expected


def test_non_ideal_is_rejected() -> None:
    with pytest.raises(NotAnIdeal):
        connecting_morphism(sl2, Matrix([[1], [0], [0]]), 2)


@settings(derandomize=True, max_examples=8, deadline=None)
@given(st.integers(min_value=0, max_value=1000))
def test_seeded_tilde_is_twisting(seed: int) -> None:
    g = random_nilpotent_lie(seed)
    tilde = connecting_tilde(g, Matrix.eye(g.dim), 2)
    assert tilde.factor_defect() is None
    assert enveloping(g, 2).free_quotient_dim() == len(enveloping(g, 2).words)


def test_coproduct_defect_finds_a_rescaled_letter() -> None:
    c = connecting_morphism(weight, w_line, 2)
    assert c.coproduct_defect(2) is None
    broken = c.model_copy(update={"images": {**c.images, (1,): {(0,): -2}}})
    assert broken.coproduct_defect(1) is None
    assert len(broken.coproduct_defect(2)) == 2


@settings(derandomize=True, max_examples=8, deadline=None)
@given(st.integers(min_value=0, max_value=1000))
def test_seeded_ideal_through_v0_gives_a_coalgebra_map(seed: int) -> None:
    g = random_nilpotent_lie(seed)
    labels = ["v0", "w"] + [x for x in g.labels if x.startswith("z")]
    span = Matrix.zeros(g.dim, len(labels))
    for k, label in enumerate(labels):
        span[g.space.index_of(label), k] = 1
    c = connecting_morphism(g, span, 2)
    assert c.coproduct_defect(2) is None
    assert same_maps(c.on_cohomology(), les_coboundary(g, span))

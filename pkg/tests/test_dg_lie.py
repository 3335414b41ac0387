import pytest
from sympy import Matrix
from hypothesis import given, settings, strategies as st

from src.sdk.artin import dual_numbers, truncated_polynomial
from src.sdk.dg_lie import (
    LieMorphism,
    twist,
    check_mc,
    cone_lie,
    find_gauge,
    make_dg_lie,
    make_module,
    quotient_lie,
    gauge_action,
    lie_quasi_iso,
    adjoint_module,
    extend_scalars,
    validate_dg_lie,
    identity_morphism,
    random_mc,
    random_nilpotent_lie,
)
from src.sdk.graded import ChainMap, GradedSpace, betti, make_complex, zero_complex
from src.types.errors import (
    SkewFail,
    JacobiFail,
    NotAModule,
    NotAnIdeal,
    WrongDegree,
    ShapeMismatch,
    NotLieMorphism,
    NotMaurerCartan,
)

sl2_space = GradedSpace(components={0: ("e", "f", "h")})
sl2_constants = [(0, 1, 2, 1), (0, 2, 0, -2), (1, 2, 1, 2)]
sl2 = make_dg_lie(zero_complex(sl2_space), sl2_constants)

# x in degree 1 with [x, x] = y in degree 2
odd_space = GradedSpace(components={1: ("x",), 2: ("y",)})
odd = make_dg_lie(zero_complex(odd_space), [(0, 0, 1, 1)])

# a in degree 0, b in degree 1, da = b
arrow_space = GradedSpace(components={0: ("a",), 1: ("b",)})
arrow = make_dg_lie(
    make_complex(
        arrow_space,
        ChainMap(source=arrow_space, target=arrow_space, degree=1, blocks={0: Matrix([[1]])}),
    ),
    [],
)


def test_sl2_brackets() -> None:
    assert sl2.bracket({2: 1}, {0: 1}) == {0: 2}
    assert sl2.bracket({2: 1}, {1: 1}) == {1: -2}
    assert sl2.bracket({1: 1}, {0: 1}) == {2: -1}


def test_wrong_scalar_breaks_jacobi() -> None:
    with pytest.raises(JacobiFail) as info:
        make_dg_lie(zero_complex(sl2_space), [(0, 1, 2, 1), (0, 2, 0, -1), (1, 2, 1, 2)])
    assert set(info.value.witness["triple"]) == {"e", "f", "h"}


def test_even_square_must_vanish() -> None:
    with pytest.raises(SkewFail):
        make_dg_lie(zero_complex(sl2_space), [(0, 0, 2, 1)])


def test_bracket_degree_is_checked() -> None:
    with pytest.raises(ShapeMismatch):
        make_dg_lie(zero_complex(odd_space), [(0, 0, 0, 1)])


def test_check_mc() -> None:
    assert check_mc(sl2, {})
    assert not check_mc(odd, {0: 1})
    with pytest.raises(WrongDegree):
        check_mc(sl2, {0: 1})
    # x with a square-zero coefficient solves the equation
    assert check_mc(odd, {1: 1}, dual_numbers())
    with pytest.raises(WrongDegree):
        check_mc(odd, {0: 1}, dual_numbers())


def test_twist() -> None:
    assert twist(sl2, {}).d_matrix() == sl2.d_matrix()
    G = extend_scalars(odd, dual_numbers())
    twisted = twist(G, {1: 1})
    assert twisted.d({0: 1}) == {3: 1}
    back = twist(twisted, {1: -1})
    assert back.d_matrix() == G.d_matrix()
    with pytest.raises(NotMaurerCartan):
        twist(odd, {0: 1})


def test_cone_of_whole_algebra_is_contractible() -> None:
    full = cone_lie(sl2, Matrix.eye(3))
    assert full.contracting_homotopy() is not None
    assert all(dim == 0 for dim in betti(full.algebra.complex).values())


def test_cone_of_zero_ideal() -> None:
    assert cone_lie(sl2, Matrix.zeros(3, 0)).algebra.dim == 3


def test_cone_rejects_non_ideal() -> None:
    with pytest.raises(NotAnIdeal):
        cone_lie(sl2, Matrix([[1], [0], [0]]))


def test_extend_scalars_revalidates() -> None:
    G = extend_scalars(sl2, truncated_polynomial(("t",), 2))
    assert G.dim == 9
    validate_dg_lie(G)


def test_lie_quasi_iso() -> None:
    assert lie_quasi_iso(identity_morphism(sl2))
    pair_space = GradedSpace(components={0: ("a", "b")})
    point_space = GradedSpace(components={0: ("a",)})
    pair = make_dg_lie(zero_complex(pair_space), [])
    point = make_dg_lie(zero_complex(point_space), [])
    f = ChainMap(source=pair_space, target=point_space, blocks={0: Matrix([[1, 0]])})
    assert not lie_quasi_iso(LieMorphism(source=pair, target=point, map=f))


def test_non_morphism_is_rejected() -> None:
    f = ChainMap(source=sl2_space, target=sl2_space, blocks={0: 2 * Matrix.eye(3)})
    with pytest.raises(NotLieMorphism):
        LieMorphism(source=sl2, target=sl2, map=f)


def test_modules() -> None:
    adjoint = adjoint_module(sl2)
    assert adjoint.rho[2] == Matrix([[2, 0, 0], [0, -2, 0], [0, 0, 0]])
    line = zero_complex(GradedSpace(components={0: ("v",)}))
    with pytest.raises(NotAModule):
        make_module(sl2, line, [(0, 0, 0, 1)])


def test_quotient_of_heisenberg_is_abelian() -> None:
    h3_space = GradedSpace(components={0: ("x", "y", "z")})
    h3 = make_dg_lie(zero_complex(h3_space), [(0, 1, 2, 1)])
    quotient = quotient_lie(h3, Matrix([[0], [0], [1]]))
    assert quotient.algebra.dim == 2
    assert quotient.algebra.table == {}


def test_gauge_from_exact_element() -> None:
    eps = dual_numbers()
    beta = {3: 1}
    sigma = find_gauge(arrow, {}, beta, eps)
    assert sigma == {1: -1}
    assert gauge_action(arrow, sigma, {}, eps) == beta
    assert find_gauge(odd, {}, {1: 1}, eps) is None


@settings(derandomize=True, max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=1000))
def test_seeded_twists_square_to_zero(seed: int) -> None:
    g = random_nilpotent_lie(seed)
    A = truncated_polynomial(("t",), 2)
    alpha = random_mc(g, A, seed)
    assert check_mc(g, alpha, A)
    twisted = twist(extend_scalars(g, A), alpha)
    assert twisted.dim == g.dim * A.dim


@settings(derandomize=True, max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=1000))
def test_seeded_algebras_are_small_and_carry_a_differential(seed: int) -> None:
    g = random_nilpotent_lie(seed)
    assert 3 <= g.dim <= 6
    assert set(g.degrees) <= {-2, -1, 0, 1, 2}
    assert len(set(g.labels)) == g.dim
    assert not g.d_matrix().is_zero_matrix
    assert validate_dg_lie(g) is g


def test_seeded_algebras_cover_every_base_degree() -> None:
    seen = set()
    for seed in range(60):
        g = random_nilpotent_lie(seed)
        seen.add(g.degrees[g.labels.index("v0")])
        assert g.labels.count("z0") == 1
    assert seen == {-1, 0, 1}

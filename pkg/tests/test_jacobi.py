import pytest
from sympy import Matrix, Rational

from src.sdk.artin import dual_numbers, match_generators, truncated_polynomial
from src.sdk.chevalley import chevalley_with_coefficients
from src.sdk.dg_lie import (
    DgLieAlgebra,
    make_dg_lie,
    adjoint_module,
    direct_sum_lie,
    trivial_module,
)
from src.sdk.graded import ChainMap, GradedSpace, betti, make_complex, zero_complex
from src.sdk.jacobi import (
    udr_system,
    jacobi_complex,
    moduli_module,
    classifying_map,
    class_functionals,
    jacobi_with_coefficients,
    universal_deformation_algebra,
)
from src.sdk.ran import FiniteSpace
from src.types.errors import ShapeMismatch, NotMaurerCartan

pt = FiniteSpace(points=("p",))
X = FiniteSpace(points=("p", "q"))
# two commuting odd directions: C̄ is polynomial on degree-0 letters
odd_plane = DgLieAlgebra(complex=zero_complex(GradedSpace(components={1: ("a", "b")})))
sl2 = make_dg_lie(
    zero_complex(GradedSpace(components={0: ("e", "f", "h")})),
    [(0, 1, 2, 1), (0, 2, 0, -2), (1, 2, 1, 2)],
)
arrow_space = GradedSpace(components={0: ("u",), 1: ("w",)})
arrow = DgLieAlgebra(
    complex=make_complex(
        arrow_space,
        ChainMap(source=arrow_space, target=arrow_space, degree=1, blocks={0: Matrix([[1]])}),
    )
)


def test_jacobi_fibers_at_a_point() -> None:
    J = jacobi_complex(pt, {"p": odd_plane}, 2)
    assert J.ran.cutoff == 3
    # one block with one letter, or two blocks with two
    assert J.ran.fiber(2, ("p", "p")).complex.space.total_dim == 6
    assert J.ran.fiber(1, ("p",)).complex.space.total_dim == 2
    assert J.sections.complex.dims() == {0: 5}
    assert J.sections.stable


def test_global_sections_match_reduced_chevalley() -> None:
    J = jacobi_complex(pt, {"p": sl2}, 2)
    f = J.identification
    assert f.source.dims() == J.chevalley.complex.dims()
    assert betti(J.sections.complex) == betti(J.chevalley.complex)


def test_two_points_of_sl2() -> None:
    J = jacobi_complex(X, {"p": sl2, "q": sl2}, 2)
    assert J.ran.fiber(2, ("p", "q")).complex.space.total_dim == 9
    assert J.sections.complex.dims() == {-2: 15, -1: 6}
    assert J.identification.target.dims() == {-2: 15, -1: 6}
    assert J.global_algebra.dim == 6


def test_discrete_jacobi_complex_is_not_admissible() -> None:
    J = jacobi_complex(pt, {"p": odd_plane}, 2)
    assert J.admissibility is not None
    assert J.admissibility["reason"] == "partial"
    assert jacobi_complex(pt, {"p": odd_plane}, 1).admissibility is None


def test_jacobi_complex_rejects_bad_input() -> None:
    with pytest.raises(ShapeMismatch):
        jacobi_complex(pt, {"p": odd_plane}, 0)
    with pytest.raises(ShapeMismatch):
        jacobi_complex(pt, {"q": odd_plane}, 1)


def test_universal_deformation_algebra_of_odd_plane() -> None:
    R1 = universal_deformation_algebra(pt, {"p": odd_plane}, 1)
    assert R1.dim == 3
    assert R1.exponent == 1
    R2 = universal_deformation_algebra(pt, {"p": odd_plane}, 2)
    assert R2.dim == 6
    assert match_generators(R2, truncated_polynomial(("x", "y"), 2)) is not None


def test_vanishing_degree_zero_cohomology_gives_rationals() -> None:
    R = universal_deformation_algebra(pt, {"p": sl2}, 2)
    assert R.dim == 1
    assert R.labels == ("1",)


def test_deformation_algebra_is_quasi_isomorphism_invariant() -> None:
    R = universal_deformation_algebra(pt, {"p": odd_plane}, 2)
    S = universal_deformation_algebra(pt, {"p": direct_sum_lie([odd_plane, arrow])}, 2)
    assert match_generators(R, S) is not None


def test_udr_tower() -> None:
    tower = udr_system(pt, {"p": odd_plane}, 3)
    assert [A.dim for A in tower.algebras] == [3, 6, 10]
    assert len(tower.maps) == 2
    assert all(f.is_surjective() for f in tower.maps)
    assert not tower.maps[0].is_isomorphism()


def test_coefficients_through_global_sections() -> None:
    keyed = jacobi_with_coefficients(pt, {"p": sl2}, {"p": adjoint_module(sl2)}, 2)
    direct = chevalley_with_coefficients(sl2, adjoint_module(sl2), 2)
    assert betti(keyed.complex) == betti(direct.complex)


def test_coefficients_need_an_algebra() -> None:
    with pytest.raises(ShapeMismatch):
        jacobi_with_coefficients(X, {"p": sl2}, {"q": adjoint_module(sl2)}, 1)


def test_moduli_module_of_trivial_coefficients() -> None:
    M = moduli_module(pt, {"p": odd_plane}, {"p": trivial_module(odd_plane)}, 2)
    assert M.ring.dim == 6
    assert M.groups[0].dim == 5
    assert M.action[0][0] == Matrix.eye(5)
    assert any(not action[0].is_zero_matrix for action in M.action[1:])


def test_classifying_map_of_a_curve() -> None:
    A = dual_numbers(2, "t")
    # alpha = a t + b t^2
    alpha = {0 * A.dim + 1: 1, 1 * A.dim + 2: 1}
    f = classifying_map(pt, {"p": odd_plane}, 2, alpha, A)
    C = jacobi_complex(pt, {"p": odd_plane}, 2).chevalley
    images = {
        tuple(phi): f({1 + k: 1}) for k, phi in enumerate(class_functionals(C)) if len(phi) == 1
    }
    assert images[((0,),)] == {1: 1}
    assert images[((1,),)] == {2: 1}
    assert images[((0, 0),)] == {2: Rational(1, 2)}
    assert images[((0, 1),)] == {}
    assert f({0: 1}) == {0: 1}


def test_classifying_map_rejects_non_solutions() -> None:
    # x in degree 1 with [x, x] = y; x t squares to y t^2
    odd = make_dg_lie(
        zero_complex(GradedSpace(components={1: ("x",), 2: ("y",)})), [(0, 0, 1, 1)]
    )
    A = dual_numbers(2, "t")
    with pytest.raises(NotMaurerCartan):
        classifying_map(pt, {"p": odd}, 2, {0 * A.dim + 1: 1}, A)

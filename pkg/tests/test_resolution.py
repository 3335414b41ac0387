import pytest
from sympy import Matrix

from src.sdk.artin import rationals, dual_numbers
from src.sdk.graded import betti, cohomology, is_quasi_iso, zero_complex
from src.sdk.resolution import (
    CoverDatum,
    ThomSullivan,
    window,
    de_rham,
    projection,
    cech_complex,
    thom_sullivan,
    constant_cover,
    dolbeault_check,
    poincare_homotopy,
    global_sections_map,
)
from src.types.errors import AxiomFail, ShapeMismatch

circle = constant_cover(("a", "b", "c"), [("a", "b"), ("a", "c"), ("b", "c")])
triangle = constant_cover(("a", "b", "c"), [("a", "b", "c")])


def test_vertex_forms_are_constants() -> None:
    assert de_rham(("a",), 3).complex.dims() == {0: 1}
    with pytest.raises(ShapeMismatch):
        de_rham(("a",), -1)
    with pytest.raises(ShapeMismatch):
        de_rham((), 1)


def test_polynomial_truncation_leaves_a_top_class() -> None:
    omega = de_rham(("a", "b"), 2)
    assert omega.complex.dims() == {0: 3, 1: 3}
    # t^2 dt has no primitive below degree 3
    assert betti(omega.complex) == {0: 1, 1: 1}


def test_window_satisfies_the_poincare_lemma() -> None:
    edge = window(de_rham(("a", "b"), 2))
    assert edge.complex.dims() == {0: 3, 1: 2}
    assert betti(edge.complex) == {0: 1, 1: 0}
    face = de_rham(("a", "b", "c"), 2, weighted=True)
    assert betti(face.complex) == {0: 1, 1: 0, 2: 0}


def test_wedge_and_variables() -> None:
    omega = de_rham(("a", "b", "c"), 2)
    ta, tb = omega.variable("a"), omega.variable("b")
    dta, dtb = omega.d(ta), omega.d(tb)
    assert omega.mul(dta, dtb) == {((0, 0), (0, 1)): 1}
    assert omega.mul(dtb, dta) == {((0, 0), (0, 1)): -1}
    assert omega.mul(dta, dta) == {}
    tc = omega.variable("c")
    total = {}
    for form in (ta, tb, tc):
        for key, value in form.items():
            total[key] = total.get(key, 0) + value
    assert {k: v for k, v in total.items() if v} == omega.unit
    assert omega.augmentation(tc) == 1
    with pytest.raises(ShapeMismatch):
        omega.variable("d")


def test_projection_to_vertices() -> None:
    edge, a, b = de_rham(("a", "b"), 1), de_rham(("a",), 1), de_rham(("b",), 1)
    t = edge.keyed.index[((1,), ())]
    assert projection(edge, a).apply(t) == {0: 1}
    assert projection(edge, b).apply(t) == {}
    with pytest.raises(ShapeMismatch):
        projection(a, edge)


def test_projections_compose() -> None:
    face = de_rham(("a", "b", "c"), 2)
    ab, ac, bc = (de_rham(pair, 2) for pair in (("a", "b"), ("a", "c"), ("b", "c")))
    a, c = de_rham(("a",), 2), de_rham(("c",), 2)
    assert projection(ab, a).compose(projection(face, ab)).equals(projection(face, a))
    assert projection(ac, a).compose(projection(face, ac)).equals(projection(face, a))
    assert projection(bc, c).compose(projection(face, bc)).equals(projection(face, c))


def test_poincare_homotopy() -> None:
    h = poincare_homotopy(de_rham(("a", "b", "c"), 2, weighted=True))
    assert h.degree == -1
    assert not h.is_zero()
    assert poincare_homotopy(de_rham(("a", "b"), 3)).degree == -1


def test_cover_nerve() -> None:
    assert circle.nerve == (("a",), ("b",), ("c",), ("a", "b"), ("a", "c"), ("b", "c"))
    assert circle.dimension == 1
    assert triangle.dimension == 2
    assert betti(cech_complex(circle).complex) == {0: 1, 1: 1}


def test_thom_sullivan_on_the_circle() -> None:
    report = dolbeault_check(circle, 2)
    assert report.thom_sullivan == {0: 1, 1: 1}
    assert report.cech == {0: 1, 1: 1}
    assert report.quasi_iso and report.acyclic and report.stable
    assert report.passed


def test_contractible_nerve() -> None:
    report = dolbeault_check(triangle, 2)
    assert report.thom_sullivan == {0: 1}
    assert report.passed


def test_structure_map_hits_the_global_class() -> None:
    Q = thom_sullivan(circle, 2)
    f = global_sections_map(circle, Q)
    assert f.source.dims() == {0: 1}
    assert not cohomology(Q.complex)[0].classify(f.block(0)).is_zero_matrix


def test_nonconstant_structure_sheaf() -> None:
    eps = dual_numbers(1, "e")
    cover = CoverDatum(
        opens=("a", "b"),
        algebras={("a",): eps, ("b",): eps, ("a", "b"): rationals()},
        restrictions={
            (("a",), ("a", "b")): Matrix([[1, 0]]),
            (("b",), ("a", "b")): Matrix([[1, 0]]),
        },
    )
    report = dolbeault_check(cover, 2)
    assert report.cech == {0: 3}
    assert report.passed


def test_unrestricted_families_are_not_a_resolution() -> None:
    Q = thom_sullivan(circle, 1)
    space = Q.total.complex.space
    everything = ThomSullivan(
        total=Q.total,
        kernel={p: Matrix.eye(space.dim(p)) for p in space.degrees},
        bound=1,
    )
    report = dolbeault_check(circle, 1, Q=everything)
    assert report.thom_sullivan == {0: 6}
    assert not report.quasi_iso
    assert report.acyclic
    assert not report.passed


def test_cover_validation() -> None:
    eps = dual_numbers(1, "e")
    base = constant_cover(("a", "b", "c"), [("a", "b", "c")], eps)
    twisted = {**base.restrictions, (("a",), ("a", "b")): Matrix([[1, 0], [0, 2]])}
    with pytest.raises(AxiomFail):
        CoverDatum(opens=base.opens, algebras=base.algebras, restrictions=twisted)
    missing = dict(base.restrictions)
    del missing[(("a",), ("a", "b"))]
    with pytest.raises(ShapeMismatch):
        CoverDatum(opens=base.opens, algebras=base.algebras, restrictions=missing)
    with pytest.raises(ShapeMismatch):
        CoverDatum(opens=("a",), algebras={("b",): eps})


def test_radial_integration_on_an_edge() -> None:
    edge = de_rham(("a", "b"), 2, weighted=True)
    h = poincare_homotopy(edge)
    keyed = edge.keyed
    assert keyed.from_flat(h.apply(keyed.index[((0,), (0,))])) == {((1,), ()): 1}
    assert poincare_homotopy(de_rham(("a",), 2)).is_zero()


def test_single_open() -> None:
    eps = dual_numbers(1, "e")
    cover = constant_cover(("a",), [("a",)], eps)
    assert thom_sullivan(cover, 2).complex.dims() == {0: 2}
    assert betti(cech_complex(cover).complex) == {0: 2}


def test_structure_map_is_a_quasi_isomorphism_on_a_simplex() -> None:
    Q = thom_sullivan(triangle, 2)
    f = global_sections_map(triangle, Q)
    assert is_quasi_iso(f, zero_complex(f.source), Q.complex)

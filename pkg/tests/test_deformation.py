import pytest
from sympy import Matrix

from src.sdk.artin import CommutativeAlgebra, rationals, dual_numbers, truncated_polynomial
from src.sdk.graded import betti
from src.sdk.linalg import solve, zeros, same_span
from src.sdk.connecting import les_coboundary
from src.sdk.resolution import CoverDatum, cech_complex, constant_cover
from src.sdk.deformation import (
    ResolvedLie,
    DeformationDatum,
    gauge,
    weight,
    cech_lie,
    higher_ks,
    equivalence,
    classical_ks,
    cocycle_to_mc,
    resolve_datum,
    relative_sheaf,
    glued_sections,
    projectable_lie,
    derivation_sheaf,
    universal_family,
    deformation_class,
    classifying_morphism,
    class_to_deformation,
    compatibility_defect,
)
from src.types.errors import (
    CocycleFail,
    ShapeMismatch,
    HypothesisFail,
    WindowOverflow,
    NotMaurerCartan,
)

dual = dual_numbers(1)
cubic = truncated_polynomial(("x",), 2)
diagonal = Matrix([[1, 0], [0, 1], [1, 0], [0, 1]])
product_dual = CommutativeAlgebra(
    labels=("1a", "εa", "1b", "εb"),
    table={(0, 0): {0: 1}, (0, 1): {1: 1}, (2, 2): {2: 1}, (2, 3): {3: 1}},
    unit={0: 1, 2: 1},
)
# two charts of Spec D meeting in two disjoint copies of Spec D
loop = CoverDatum(
    opens=("a", "b"),
    algebras={("a",): dual, ("b",): dual, ("a", "b"): product_dual},
    restrictions={(("a",), ("a", "b")): diagonal, (("b",), ("a", "b")): diagonal},
)
# two points glued along Spec D: H^0(Θ) = 0 and H^1(Θ) = 1
pinched = CoverDatum(
    opens=("a", "b"),
    algebras={("a",): rationals(), ("b",): rationals(), ("a", "b"): dual},
    restrictions={
        (("a",), ("a", "b")): Matrix([[1], [0]]),
        (("b",), ("a", "b")): Matrix([[1], [0]]),
    },
)
circle = constant_cover(("a", "b", "c"), [("a", "b"), ("a", "c"), ("b", "c")], dual)
triangle = constant_cover(("a", "b", "c"), [("a", "b", "c")], dual)
edge = constant_cover(("a", "b"), [("a", "b")], cubic)

first_component = zeros(4, 4)
first_component[1, 1] = 1
both_components = zeros(4, 4)
both_components[1, 1] = 1
both_components[3, 3] = 1
euler = Matrix([[0, 0], [0, 1]])


def grid(theta, simplex, operator, base, scale=1) -> Matrix:
    """θ = operator ⊗ scale·s on the standard basis (1, s, s^2, ...) of the base."""
    ops = theta.operator(simplex)
    size = operator.rows * operator.cols
    coords = solve(Matrix.hstack(*[X.reshape(size, 1) for X in ops]), operator.reshape(size, 1))
    out = zeros(len(ops), base.dim)
    out[:, 1] = scale * coords
    return out


def loop_datum(operator: Matrix, base=dual) -> DeformationDatum:
    theta = derivation_sheaf(loop)
    return DeformationDatum(
        theta=theta, base=base, gluing={("a", "b"): grid(theta, ("a", "b"), operator, base)}
    )


def pinched_datum(base) -> DeformationDatum:
    theta = derivation_sheaf(pinched)
    return DeformationDatum(
        theta=theta, base=base, gluing={("a", "b"): grid(theta, ("a", "b"), euler, base)}
    )


def betti_of(theta) -> dict[int, int]:
    return betti(cech_complex(theta.cover, theta.module).complex)


def test_cech_lie_of_a_single_open() -> None:
    g = cech_lie(constant_cover(("a",), [("a",)], cubic))
    assert g.complex.dims() == {0: 2}
    assert g.bracket({0: 1}, {1: 1}) != {}


def test_rational_cover_has_no_derivations() -> None:
    g = cech_lie(constant_cover(("a", "b", "c"), [("a", "b"), ("a", "c"), ("b", "c")]))
    assert g.dim == 0


def test_circle_of_dual_numbers() -> None:
    g = cech_lie(circle)
    assert g.complex.dims() == {0: 3, 1: 3}
    assert betti(g.complex) == {0: 1, 1: 1}
    relative = cech_lie(circle, base=dual_numbers(1, "s"))
    assert relative.complex.dims() == {0: 3, 1: 3}


def test_nonabelian_window_needs_the_graded_part() -> None:
    with pytest.raises(WindowOverflow):
        cech_lie(edge)
    g = cech_lie(edge, base=dual_numbers(1, "s"))
    assert g.complex.dims() == {0: 4, 1: 2}


def test_derivation_sheaf_restricts_derivations() -> None:
    theta = derivation_sheaf(loop)
    assert theta.module.dims == {("a",): 1, ("b",): 1, ("a", "b"): 2}
    assert betti_of(theta).get(0) == 1
    assert betti_of(theta).get(1) == 1
    relative = relative_sheaf(theta, dual)
    assert relative.orders[("a", "b")] == (0, 1, 0, 1)
    assert relative.values.size(("a", "b")) == 8


def test_pinched_derivations_live_on_the_overlap() -> None:
    theta = derivation_sheaf(pinched)
    assert theta.module.nerve == (("a", "b"),)
    assert betti_of(theta).get(1) == 1


def test_compatibility_defect_finds_the_face() -> None:
    theta = derivation_sheaf(loop)
    constant = {(("a", "b"), 0, ((0,), ())): 1}
    assert compatibility_defect(constant, theta.module) == (("a",), ("a", "b"))
    assert compatibility_defect({}, theta.module) is None
    assert weight({(("a", "b"), 0, ((1,), (0,))): 1}) == 2


def test_gluing_is_validated() -> None:
    theta = derivation_sheaf(loop)
    good = grid(theta, ("a", "b"), first_component, dual)
    with pytest.raises(ShapeMismatch):
        DeformationDatum(theta=theta, base=dual, gluing={("b", "a"): good})
    with pytest.raises(ShapeMismatch):
        DeformationDatum(theta=theta, base=dual, gluing={("a", "b"): good[:, :1]})
    unit = good.copy()
    unit[:, 0] = unit[:, 1]
    with pytest.raises(CocycleFail):
        DeformationDatum(theta=theta, base=dual, gluing={("a", "b"): unit})


def test_triangle_cocycle_condition() -> None:
    theta = derivation_sheaf(triangle)
    forward = grid(theta, ("a", "b"), euler, dual)
    with pytest.raises(CocycleFail):
        DeformationDatum(theta=theta, base=dual, gluing={("a", "b"): forward})


def test_triangle_fill_is_dt_b() -> None:
    theta = derivation_sheaf(triangle)
    datum = DeformationDatum(
        theta=theta,
        base=dual,
        gluing={
            ("a", "b"): grid(theta, ("a", "b"), euler, dual),
            ("b", "c"): grid(theta, ("b", "c"), euler, dual, scale=-1),
        },
    )
    u = cocycle_to_mc(datum)
    ab = u[(("a", "b"), 1, ((0,), (0,)))]
    assert u[(("a", "b", "c"), 1, ((0, 0), (1,)))] == -ab
    lie, coords = resolve_datum(datum, u)
    # the triangle is contractible
    assert equivalence(lie, coords, {}) is not None


def test_trivial_datum_has_zero_class() -> None:
    datum = DeformationDatum(theta=derivation_sheaf(loop), base=dual)
    assert cocycle_to_mc(datum) == {}
    lie, u = resolve_datum(datum)
    assert deformation_class(lie, u).vector == {}
    deformed = class_to_deformation(lie, u)
    assert deformed.dim == 4
    assert deformed.globally_free()


def test_first_order_roundtrip_on_the_loop() -> None:
    datum = loop_datum(first_component)
    u = cocycle_to_mc(datum)
    lie, coords = resolve_datum(datum, u)
    deformed = class_to_deformation(lie, coords)
    assert deformed.local == {"a": 4, "b": 4}
    # global sections lose ε s on one chart
    assert deformed.dim == 3
    assert not deformed.globally_free()
    assert same_span(glued_sections(datum), deformed.vertex_values())
    assert deformed.algebra_defect() is None


def test_pinched_roundtrip_is_globally_free() -> None:
    datum = pinched_datum(dual)
    lie, coords = resolve_datum(datum)
    deformed = class_to_deformation(lie, coords)
    assert deformed.dim == 2
    assert deformed.globally_free()
    assert deformed.local == {"a": 2, "b": 2}
    assert same_span(glued_sections(datum), deformed.vertex_values())


def test_second_order_roundtrip_on_the_loop() -> None:
    datum = loop_datum(first_component, dual_numbers(2, "s"))
    lie, coords = resolve_datum(datum)
    deformed = class_to_deformation(lie, coords)
    assert deformed.local == {"a": 6, "b": 6}
    assert same_span(glued_sections(datum), deformed.vertex_values())


def test_second_order_class_on_the_pinched_cover() -> None:
    base = dual_numbers(2, "s")
    theta = derivation_sheaf(pinched)
    gluing = grid(theta, ("a", "b"), euler, base)
    gluing[:, 2] = gluing[:, 1]
    datum = DeformationDatum(theta=theta, base=base, gluing={("a", "b"): gluing})
    lie, coords = resolve_datum(datum)
    v = deformation_class(lie, coords)
    assert len(v.components) == 2
    assert not v.first_order_class().is_zero_matrix
    assert deformation_class(lie, {}).vector == {}


def test_coboundary_gluing_is_gauge_trivial() -> None:
    datum = loop_datum(both_components)
    lie, coords = resolve_datum(datum)
    found = equivalence(lie, coords, {})
    assert found is not None
    assert found.sigma
    assert gauge(lie.algebra, found.sigma, coords) == {}
    assert found.source.dim == found.target.dim == 4
    assert deformation_class(lie, coords).first_order_class().is_zero_matrix


def test_nontrivial_class_is_not_gauge_trivial() -> None:
    lie, coords = resolve_datum(loop_datum(first_component))
    assert equivalence(lie, coords, {}) is None
    assert equivalence(lie, coords, coords).sigma == {}


def test_non_maurer_cartan_elements_are_rejected() -> None:
    theta = derivation_sheaf(triangle)
    lie = ResolvedLie(sheaf=relative_sheaf(theta, dual), bound=2, graded=True)
    L = lie.algebra
    i = next(i for i in range(L.dim) if L.degrees[i] == 1 and L.d({i: 1}))
    with pytest.raises(NotMaurerCartan):
        class_to_deformation(lie, {i: 1})
    with pytest.raises(NotMaurerCartan):
        deformation_class(lie, {i: 1})


def test_universal_family_needs_no_global_derivations() -> None:
    with pytest.raises(HypothesisFail):
        universal_family(loop, 1)


def test_universal_family_of_the_pinched_cover() -> None:
    first = universal_family(pinched, 1)
    assert first.base.dim == 2
    universal = universal_family(pinched, 2)
    assert universal.base.labels == ("1", "t1", "t1^2")
    assert universal.dim == 3
    assert universal.globally_free()
    assert universal.local == {"a": 3, "b": 3}


def test_classifying_morphism_pulls_back_the_universal_family() -> None:
    universal = universal_family(pinched, 2)
    alpha, found = classifying_morphism(universal, pinched_datum(dual_numbers(1, "s")))
    assert found is not None
    assert alpha.matrix[:, 0] == Matrix([1, 0])
    assert alpha.matrix[1, 1] != 0
    with pytest.raises(ShapeMismatch):
        classifying_morphism(universal_family(pinched, 1), pinched_datum(dual_numbers(2)))


def test_classical_kodaira_spencer_of_the_loop() -> None:
    datum = loop_datum(first_component)
    classical = classical_ks(datum)
    assert not classical[0].is_zero_matrix
    lie = ResolvedLie(sheaf=datum.relative, bound=1)
    g, span = projectable_lie(lie, lie.coordinates(cocycle_to_mc(datum)))
    assert les_coboundary(g, span)[0] == classical[0]
    ks = higher_ks(datum, 2)
    assert ks.on_cohomology()[0] == classical[0]
    assert not ks.is_trivial()


def test_trivial_families_have_trivial_kodaira_spencer() -> None:
    assert classical_ks(loop_datum(both_components))[0].is_zero_matrix
    trivial = DeformationDatum(theta=derivation_sheaf(loop), base=dual)
    assert higher_ks(trivial, 2).is_trivial()


def test_projectable_lie_needs_the_ungraded_resolution() -> None:
    datum = loop_datum(first_component)
    lie, coords = resolve_datum(datum)
    with pytest.raises(ShapeMismatch):
        projectable_lie(lie, coords)

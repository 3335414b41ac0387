import pytest
from sympy import Matrix, Rational

from src.sdk.artin import (
    AlgebraMorphism,
    ArtinLocalAlgebra,
    rationals,
    dual_numbers,
    match_generators,
    artin_from_table,
    truncated_polynomial,
)
from src.types.errors import AxiomFail

plane = truncated_polynomial(("x", "y"), 2)


def test_truncated_polynomial_shape() -> None:
    assert plane.dim == 6
    assert plane.exponent == 2
    assert [power.cols for power in plane.ideal_powers] == [6, 5, 3, 0]
    assert plane.generators().cols == 2


def test_dual_numbers_and_rationals() -> None:
    eps = dual_numbers()
    assert eps.labels == ("1", "ε")
    assert eps.exponent == 1
    assert eps.mul({1: 1}, {1: 1}) == {}


def test_rationals_have_an_implicit_unit() -> None:
    Q = rationals()
    assert Q.dim == 1
    assert Q.exponent == 0
    assert Q.mul({0: 2}, {0: Rational(1, 3)}) == {0: Rational(2, 3)}
    assert Q.generators().cols == 0


def test_non_nilpotent_ideal_is_rejected() -> None:
    with pytest.raises(AxiomFail, match="not nilpotent"):
        ArtinLocalAlgebra(labels=("1", "a"), table={(1, 1): {1: Rational(1)}}, exponent=1)


def test_declared_exponent_must_match() -> None:
    with pytest.raises(AxiomFail, match="declared exponent"):
        ArtinLocalAlgebra(labels=("1", "a"), table={}, exponent=2)


def test_exponent_read_from_table() -> None:
    algebra = artin_from_table(("1", "t", "t2"), {(1, 1): {2: Rational(1)}})
    assert algebra.exponent == 2
    assert algebra.mul({0: 1}, {1: 3}) == {1: 3}
    assert algebra.power({1: 1}, 2) == {2: 1}
    assert algebra.table == {(0, 0): {0: 1}, (0, 1): {1: 1}, (0, 2): {2: 1}, (1, 1): {2: 1}}


def test_quotient_by_power_keeps_labels() -> None:
    linear = plane.quotient_by_power(1)
    assert linear.labels == ("1", "y", "x")
    assert linear.exponent == 1
    assert linear.mul({1: 1}, {2: 1}) == {}


def test_generator_matching() -> None:
    other = truncated_polynomial(("u", "v"), 2)
    morphism = match_generators(plane, other)
    assert morphism is not None
    assert morphism.is_isomorphism()
    assert match_generators(plane, truncated_polynomial(("u",), 2)) is None


def test_morphism_must_be_unital() -> None:
    eps = dual_numbers()
    with pytest.raises(AxiomFail):
        AlgebraMorphism(source=eps, target=eps, matrix=Matrix([[0, 0], [0, 1]]))


def test_projection_to_residue_field() -> None:
    f = AlgebraMorphism(source=plane, target=rationals(), matrix=Matrix([[1, 0, 0, 0, 0, 0]]))
    assert f.is_surjective()

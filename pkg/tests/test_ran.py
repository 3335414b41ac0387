from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from src.sdk.graded import GradedSpace, betti, zero_complex
from src.sdk.ran import (
    RanModule,
    FiniteSpace,
    FinSurjection,
    diagonal,
    admissible,
    convolution,
    surjections,
    set_partitions,
    global_sections,
    swap_dims_match,
    delta_pushforward,
    monoidality_check,
    identity_surjection,
    check_union_relation,
    tensor_functor_check,
    admissibility_witness,
)
from src.types.errors import AxiomFail, ShapeMismatch, CutoffExceeded

X = FiniteSpace(points=("p", "q"))
pt = FiniteSpace(points=("p",))
line = zero_complex(GradedSpace(components={0: ("v",)}))
plane = zero_complex(GradedSpace(components={1: ("a", "b")}))


def _stirling(m: int, n: int) -> int:
    if m == n:
        return 1
    if n == 0 or n > m:
        return 0
    return n * _stirling(m - 1, n) + _stirling(m - 1, n - 1)


@settings(derandomize=True, max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=1, max_value=5))
def test_surjection_count_is_stirling(m: int, n: int) -> None:
    if n > m:
        assert surjections(m, n) == []
    else:
        assert len(surjections(m, n)) == factorial(n) * _stirling(m, n)


def test_small_surjection_counts() -> None:
    assert len(surjections(3, 1)) == 1
    assert len(surjections(3, 3)) == 6
    assert len(surjections(4, 2)) == 14
    assert len(list(set_partitions(3))) == 5


def test_surjection_validation() -> None:
    with pytest.raises(ShapeMismatch):
        FinSurjection(source=2, target=2, assignment=(1, 1))
    with pytest.raises(ShapeMismatch):
        surjections(0, 1)
    pi = FinSurjection(source=3, target=2, assignment=(1, 2, 2))
    assert str(pi) == "π(1,2,2)"
    assert pi.fiber(2) == (2, 3)
    assert pi.factors(["x", "y", "y"])
    assert not pi.factors(["x", "y", "z"])


def test_diagonal_composition_law() -> None:
    for sigma in surjections(3, 2):
        for rho in surjections(2, 1):
            both = diagonal(rho.compose(sigma), X)
            for z in X.power(1):
                assert both[z] == diagonal(sigma, X)[diagonal(rho, X)[z]]


def test_union_relation() -> None:
    assert check_union_relation(X, 2, 1)
    assert check_union_relation(X, 1, 2)


def test_delta_pushforward_lives_on_the_diagonal() -> None:
    F = delta_pushforward(X, {"p": line}, 2)
    assert F.dims(2) == {("p", "p"): 1, ("p", "q"): 0, ("q", "p"): 0, ("q", "q"): 0}
    assert F.check() is F
    with pytest.raises(CutoffExceeded):
        F.fiber(3, ("p", "p", "p"))
    with pytest.raises(ShapeMismatch):
        delta_pushforward(X, {"r": line}, 2)


def test_global_sections_of_delta_pushforward() -> None:
    F = delta_pushforward(X, {"p": line, "q": plane}, 2)
    sections = global_sections(F)
    assert sections.complex.dims() == {0: 1, 1: 2}
    assert sections.stable
    assert sections.monomial


def test_convolution_fibers() -> None:
    F = delta_pushforward(pt, {"p": line}, 2)
    FF = convolution(F, F)
    assert FF.fiber(1, ("p",)).complex.space.total_dim == 0
    assert FF.fiber(2, ("p", "p")).complex.space.total_dim == 2
    assert FF.check() is FF
    left, right = delta_pushforward(X, {"p": line}, 2), delta_pushforward(X, {"q": plane}, 2)
    assert swap_dims_match(left, right)


def test_convolution_with_zero_module_is_zero() -> None:
    F = delta_pushforward(X, {"p": line}, 2)
    zero = delta_pushforward(X, {}, 2)
    assert not convolution(F, zero).fibers


def test_admissibility() -> None:
    F = delta_pushforward(X, {"p": line, "q": plane}, 2)
    assert admissible(F)
    witness = admissibility_witness(convolution(F, F))
    assert witness is not None
    assert witness["reason"] == "partial"


def test_collapsing_structure_maps_are_not_admissible() -> None:
    F = delta_pushforward(pt, {"p": line}, 2)
    flat = F.model_copy(
        update={"theta": lambda pi, y, key: {key: 1} if pi.source == pi.target else {}}
    )
    assert flat.check() is flat
    witness = admissibility_witness(flat)
    assert witness["pi"] == str(surjections(2, 1)[0])
    assert witness["reason"] == "not a quasi-isomorphism"
    assert global_sections(flat).complex.dims() == {0: 1}


def test_broken_identity_is_rejected() -> None:
    F = delta_pushforward(pt, {"p": line}, 1)
    broken = F.model_copy(update={"theta": lambda pi, y, key: {key: 2}})
    with pytest.raises(AxiomFail):
        broken.check()


def test_two_term_structure_maps_use_linear_colimit() -> None:
    space = GradedSpace(components={0: ("u", "w")})
    fiber = delta_pushforward(pt, {"p": zero_complex(space)}, 2).fibers

    def theta(pi: FinSurjection, y: tuple, key: int) -> dict:
        if pi.source == pi.target:
            return {key: 1}
        return {0: 1, 1: 1} if key == 0 else {1: 1}

    F = RanModule(space=pt, cutoff=2, fibers=fiber, theta=theta).check()
    sections = global_sections(F)
    assert not sections.monomial
    assert sections.complex.dims() == {0: 2}


def test_monoidality_on_delta_pushforwards() -> None:
    F = delta_pushforward(X, {"p": line, "q": plane}, 2)
    G = delta_pushforward(X, {"p": plane, "q": line}, 2)
    assert monoidality_check(F, G)
    assert betti(global_sections(convolution(F, G)).complex) == {0: 1, 1: 4, 2: 4}


def test_tensor_functor_pointwise() -> None:
    assert tensor_functor_check({"p": line, "q": plane}, {"p": plane, "q": plane}, X, 3)


def test_monoidality_over_three_points() -> None:
    X3 = FiniteSpace(points=("p", "q", "r"))
    F = delta_pushforward(X3, {"p": line, "q": plane, "r": line}, 2)
    G = delta_pushforward(X3, {"p": plane, "q": line, "r": plane}, 2)
    assert global_sections(F).complex.dims() == {0: 2, 1: 2}
    assert monoidality_check(F, G)
    assert betti(global_sections(convolution(F, G)).complex) == {0: 2, 1: 10, 2: 8}
    assert tensor_functor_check({"r": line}, {"r": plane}, X3, 3)


def test_identity_surjection() -> None:
    assert identity_surjection(3).is_identity
    assert not FinSurjection(source=2, target=2, assignment=(2, 1)).is_identity

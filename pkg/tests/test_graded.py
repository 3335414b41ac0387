import pytest
from sympy import Matrix
from hypothesis import given, settings, strategies as st

from src.sdk.graded import (
    ChainMap,
    GradedSpace,
    FilteredComplex,
    cone,
    betti,
    shift,
    tensor,
    decalage,
    ext_power,
    sym_power,
    commutator,
    identity_map,
    is_quasi_iso,
    make_complex,
    zero_complex,
    random_complex,
    filtered_quasi_iso,
    trivial_filtration,
    euler_characteristic,
)
from src.types.errors import (
    NotChainMap,
    SquareNonzero,
    DegreeWindowExceeded,
    FiltrationNotRespected,
)

# a -> c in degrees 0 -> 1, b a cocycle in degree 0
space = GradedSpace(components={0: ("a", "b"), 1: ("c",)})
d = ChainMap(source=space, target=space, degree=1, blocks={0: Matrix([[1, 0]])})
C = make_complex(space, d)


def test_square_nonzero_reports_degree() -> None:
    line = GradedSpace(components={0: ("a",), 1: ("b",), 2: ("c",)})
    d = ChainMap(source=line, target=line, degree=1, blocks={0: Matrix([[1]]), 1: Matrix([[1]])})
    with pytest.raises(SquareNonzero) as info:
        make_complex(line, d)
    assert info.value.witness["degree"] == 0


def test_degree_window() -> None:
    with pytest.raises(DegreeWindowExceeded):
        GradedSpace(components={40: ("x",)})


def test_cohomology_of_small_complex() -> None:
    assert betti(C) == {0: 1, 1: 0}
    assert euler_characteristic(C.dims()) == euler_characteristic(betti(C))


def test_shift_moves_degrees_and_signs() -> None:
    shifted = shift(C, 1)
    assert shifted.dims() == {-1: 2, 0: 1}
    assert shifted.d(-1) == Matrix([[-1, 0]])
    assert betti(shift(C, 2)) == {-2: 1, -1: 0}


def test_word_powers_follow_koszul_rules() -> None:
    odd = zero_complex(GradedSpace(components={1: ("x",)}))
    even = zero_complex(GradedSpace(components={0: ("y",)}))
    assert sym_power(odd, 2).complex.space.total_dim == 0
    assert sym_power(even, 2).complex.space.total_dim == 1
    assert ext_power(odd, 2).complex.space.total_dim == 1
    assert ext_power(even, 2).complex.space.total_dim == 0


def test_decalage_is_chain_map() -> None:
    for n in (1, 2, 3):
        f = decalage(C, n)
        assert f.source.total_dim == f.target.total_dim


def test_tensor_kunneth() -> None:
    D = zero_complex(GradedSpace(components={1: ("x",)}))
    assert betti(tensor(C, D).complex) == {1: 1, 2: 0}


def test_commutator_is_involution() -> None:
    D = zero_complex(GradedSpace(components={1: ("x",), 2: ("z",)}))
    forth, back = commutator(C, D), commutator(D, C)
    assert back.compose(forth).equals(identity_map(tensor(C, D).complex.space))


def test_cone_of_identity_is_acyclic() -> None:
    keyed = cone(identity_map(space), C, C)
    assert all(dim == 0 for dim in betti(keyed.complex).values())


def test_cone_rejects_non_chain_map() -> None:
    f = ChainMap(source=space, target=space, blocks={0: Matrix([[0, 1], [0, 0]])})
    with pytest.raises(NotChainMap):
        cone(f, C, C)


def test_inclusion_of_cocycle_is_quasi_iso() -> None:
    point = GradedSpace(components={0: ("b",)})
    f = ChainMap(source=point, target=space, blocks={0: Matrix([[0], [1]])})
    assert is_quasi_iso(f, zero_complex(point), C)
    g = ChainMap(source=point, target=space, blocks={0: Matrix([[0], [0]])})
    assert not is_quasi_iso(g, zero_complex(point), C)


def test_filtration_must_be_nested() -> None:
    first = {0: Matrix([[1], [0]]), 1: Matrix([[1]])}
    second = {0: Matrix([[0], [1]]), 1: Matrix([[1]])}
    with pytest.raises(FiltrationNotRespected):
        FilteredComplex(complex=C, steps=(first, second))


def test_filtered_quasi_iso_on_trivial_filtration() -> None:
    f = identity_map(space)
    assert filtered_quasi_iso(f, trivial_filtration(C), trivial_filtration(C))


@settings(derandomize=True, max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=500))
def test_random_complex_euler_characteristic(seed: int) -> None:
    R = random_complex(seed)
    assert euler_characteristic(R.dims()) == euler_characteristic(betti(R))

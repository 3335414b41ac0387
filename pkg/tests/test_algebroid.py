import pytest
from sympy import Matrix
from hypothesis import given, settings, strategies as st

from src.sdk.artin import rationals, dual_numbers, truncated_polynomial
from src.sdk.dg_lie import make_dg_lie
from src.sdk.graded import GradedSpace, zero_complex
from src.sdk.algebroid import (
    LieRinehart,
    from_lie,
    realization,
    derivations,
    diff_operators,
    grothendieck_diff,
    twisted_enveloping,
)
from src.sdk.connecting import enveloping
from src.types.errors import SkewFail, NotAModule, LeibnizFail

eps = dual_numbers(1, "e")
cubic = truncated_polynomial(("x",), 2)
sl2 = make_dg_lie(
    zero_complex(GradedSpace(components={0: ("e", "f", "h")})),
    [(0, 1, 2, 1), (0, 2, 0, -2), (1, 2, 1, 2)],
)


def test_derivation_dimensions() -> None:
    assert derivations(rationals()).dim == 0
    assert derivations(eps).dim == 1
    assert derivations(cubic).dim == 2


def test_dual_number_derivation_is_euler() -> None:
    theta = derivations(eps)
    # δ(1) = 0 and δ(e) is a multiple of e
    op = theta.anchor[0]
    assert op[:, 0].is_zero_matrix
    assert op[0, 1] == 0 and op[1, 1] != 0
    assert theta.act({1: 1}, {0: 1}) == {}


def test_derivations_of_truncated_line_do_not_commute() -> None:
    theta = derivations(cubic)
    assert theta.table
    assert theta.act({1: 1}, {0: 1}) or theta.act({1: 1}, {1: 1})


def test_first_filtration_step() -> None:
    U = twisted_enveloping(derivations(eps), 1)
    assert U.filtration_dims() == [2, 3]
    delta, e = (0, (0,)), (1, ())
    # δ·e - e·δ = τ(δ)(e)
    left = U.multiply({delta: 1}, {e: 1})
    right = U.multiply({e: 1}, {delta: 1})
    tau = derivations(eps).derive({0: 1}, {1: 1})
    difference = dict(left)
    for key, value in right.items():
        difference[key] = difference.get(key, 0) - value
    difference = {k: v for k, v in difference.items() if v}
    assert difference == U.reduce({(i, ()): value for i, value in tau.items()})


def test_module_structure_is_balanced() -> None:
    assert twisted_enveloping(derivations(cubic), 1).filtration_dims() == [3, 5]


def test_ordinary_enveloping_over_q() -> None:
    U = twisted_enveloping(from_lie(sl2), 2)
    assert U.filtration_dims() == enveloping(sl2, 2).filtration_dims() == [1, 4, 10]
    assert U.coideal_defect() is None
    assert U.coassociativity_defect() is None


def test_diff_operators_of_q() -> None:
    U, report = diff_operators(rationals(), 2)
    assert report.abstract == report.realized == report.grothendieck == [1, 1, 1]
    assert U.dim == 1


def test_realization_has_a_kernel_on_dual_numbers() -> None:
    U, report = diff_operators(eps, 2)
    assert report.abstract == [2, 3, 4]
    assert report.realized == [2, 3, 3]
    assert report.grothendieck == [2, 3, 4]
    assert not report.faithful
    assert not report.exhausts


def test_realization_kills_relations() -> None:
    U = twisted_enveloping(derivations(cubic), 2)
    image = realization(U)
    assert image.rows == 9
    assert (image * U.relations).is_zero_matrix


def test_grothendieck_filtration_is_increasing() -> None:
    steps = grothendieck_diff(cubic, 3)
    dims = [step.cols for step in steps]
    assert dims[0] == 3
    assert dims[1] == 5
    assert dims == sorted(dims)
    assert dims[-1] <= 9


def test_invalid_pairs_are_rejected() -> None:
    with pytest.raises(SkewFail):
        LieRinehart(
            base=rationals(),
            labels=("a",),
            table={(0, 0): {0: 1}},
            action={(0, 0): {0: 1}},
            anchor=(Matrix([[0]]),),
        )
    with pytest.raises(NotAModule):
        LieRinehart(base=rationals(), labels=("a",), anchor=(Matrix([[0]]),))
    theta = derivations(eps)
    # e·a = b while τ(a)(e) is nonzero and every bracket vanishes
    with pytest.raises(LeibnizFail):
        LieRinehart(
            base=eps,
            labels=("a", "b"),
            table={},
            action={(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}},
            anchor=(theta.anchor[0], Matrix.zeros(2, 2)),
        )


@settings(derandomize=True, max_examples=6, deadline=None)
@given(st.integers(min_value=1, max_value=3))
def test_gr_is_commutative(n: int) -> None:
    U = twisted_enveloping(derivations(truncated_polynomial(("x",), n)), 2)
    assert U.gr_commutativity_defect() is None
    assert U.filtration_defect() is None

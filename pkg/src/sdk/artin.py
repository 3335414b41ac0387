"""Finite-dimensional commutative algebras and Artin local algebras by multiplication tables."""

from typing import Any, Optional
from functools import cached_property
from itertools import product, combinations_with_replacement
from collections.abc import Mapping, Sequence

import logfire
from sympy import Matrix, Rational
from pydantic import Field, BaseModel, ConfigDict, model_validator

from src.sdk.linalg import (
    rank,
    solve,
    zeros,
    column,
    hstack,
    add_into,
    contains,
    column_basis,
    extend_basis,
    sparse_column,
)
from src.types.errors import AxiomFail

Vector = dict[int, Any]


class CommutativeAlgebra(BaseModel):
    """Unital commutative associative algebra over Q on a labelled basis.

    `table[(i, j)]` is the product of basis elements i and j as a sparse vector; missing pairs
    multiply to zero and (j, i) falls back to (i, j).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    labels: tuple[str, ...]
    table: dict[tuple[int, int], dict[int, Any]] = Field(default_factory=dict)
    unit: dict[int, Any] = Field(default_factory=lambda: {0: Rational(1)})

    @model_validator(mode="after")
    def _check_axioms(self) -> "CommutativeAlgebra":
        n = self.dim
        for (i, j), value in self.table.items():
            other = self.table.get((j, i))
            if other is not None and other != value:
                raise AxiomFail("multiplication is not commutative", pair=(i, j))
            if not (0 <= i < n and 0 <= j < n) or any(not 0 <= k < n for k in value):
                raise AxiomFail("multiplication table leaves the basis", pair=(i, j))
        for i in range(n):
            if self.mul(self.unit, {i: 1}) != {i: 1}:
                raise AxiomFail("unit does not act as the identity", basis=self.labels[i])
        for i, j, k in product(range(n), repeat=3):
            left = self.mul(self.mul({i: 1}, {j: 1}), {k: 1})
            right = self.mul({i: 1}, self.mul({j: 1}, {k: 1}))
            if left != right:
                raise AxiomFail("multiplication is not associative", triple=(i, j, k))
        return self

    @property
    def dim(self) -> int:
        return len(self.labels)

    def product(self, i: int, j: int) -> Vector:
        value = self.table.get((i, j))
        if value is None:
            value = self.table.get((j, i), {})
        return value

    def mul(self, x: Mapping[int, Any], y: Mapping[int, Any]) -> Vector:
        out: Vector = {}
        for i, a in x.items():
            for j, b in y.items():
                add_into(out, self.product(i, j), a * b)
        return out

    @cached_property
    def left_matrices(self) -> tuple[Matrix, ...]:
        """Matrix of multiplication by each basis element."""
        out = []
        for i in range(self.dim):
            mat = zeros(self.dim, self.dim)
            for j in range(self.dim):
                for k, value in self.product(i, j).items():
                    mat[k, j] = value
            out.append(mat)
        return tuple(out)

    def multiplication_operator(self, x: Mapping[int, Any]) -> Matrix:
        out = zeros(self.dim, self.dim)
        for i, value in x.items():
            out += value * self.left_matrices[i]
        return out

    def power(self, x: Mapping[int, Any], k: int) -> Vector:
        out: Vector = dict(self.unit)
        for _ in range(k):
            out = self.mul(out, x)
        return out

    def unit_column(self) -> Matrix:
        return column(self.unit, self.dim)

    def span_products(self, left: Matrix, right: Matrix) -> Matrix:
        """Column span of all products of columns of `left` with columns of `right`."""
        cols = [
            self.multiplication_operator(sparse_column(left, a)) * right[:, b]
            for a in range(left.cols)
            for b in range(right.cols)
        ]
        if not cols:
            return zeros(self.dim, 0)
        return column_basis(hstack(*cols, rows=self.dim))

    def tensor(self, other: "CommutativeAlgebra") -> "CommutativeAlgebra":
        """A x B with basis index i * dim B + k."""
        m = other.dim
        table: dict[tuple[int, int], Vector] = {}
        for (i, k), (j, l) in product(product(range(self.dim), range(m)), repeat=2):
            out: Vector = {}
            for a, x in self.product(i, j).items():
                for b, y in other.product(k, l).items():
                    add_into(out, {a * m + b: x * y})
            if out:
                table[(i * m + k, j * m + l)] = out
        unit: Vector = {}
        for a, x in self.unit.items():
            for b, y in other.unit.items():
                add_into(unit, {a * m + b: x * y})
        labels = tuple(
            f"{p}⊗{q}" for p, q in product(self.labels, other.labels)
        )
        return CommutativeAlgebra(labels=labels, table=table, unit=unit)


def ideal_powers(algebra: CommutativeAlgebra, ideal: Matrix) -> tuple[Matrix, ...]:
    """Column bases of I^0 = A, I, I^2, ... up to the first zero power or dim A + 2 terms."""
    powers = [Matrix.eye(algebra.dim), ideal]
    while powers[-1].cols and len(powers) <= algebra.dim + 1:
        powers.append(algebra.span_products(ideal, powers[-1]))
    return tuple(powers)


def unit_rows(dim: int, table: Mapping[tuple[int, int], Vector]) -> dict[tuple[int, int], Vector]:
    """`table` with the products 1 * x = x filled in for the unit at index 0.

    Examples:
        >>> unit_rows(2, {(1, 1): {}})
        {(1, 1): {}, (0, 0): {0: 1}, (0, 1): {1: 1}}
    """
    out = dict(table)
    for i in range(dim):
        if (0, i) not in out and (i, 0) not in out:
            out[(0, i)] = {i: Rational(1)}
    return out


class ArtinLocalAlgebra(CommutativeAlgebra):
    """Local Artin algebra with basis 1 = labels[0] followed by a basis of the maximal ideal.

    Attributes:
        exponent (int): The smallest n with m^(n+1) = 0.
    """

    exponent: int = 0

    @model_validator(mode="before")
    @classmethod
    def _implicit_unit(cls, data: Any) -> Any:
        if isinstance(data, dict):
            table = unit_rows(len(data.get("labels", ())), data.get("table") or {})
            data = {**data, "table": table}
        return data

    @model_validator(mode="after")
    def _check_local(self) -> "ArtinLocalAlgebra":
        if self.unit != {0: 1}:
            raise AxiomFail("the first basis element must be the unit", unit=str(self.unit))
        for i, j in product(range(1, self.dim), repeat=2):
            if self.product(i, j).get(0, 0) != 0:
                pair = (self.labels[i], self.labels[j])
                raise AxiomFail("maximal ideal is not closed", pair=pair)
        powers = self.ideal_powers
        if powers[-1].cols != 0:
            raise AxiomFail("maximal ideal is not nilpotent", dim=self.dim)
        exponent = len(powers) - 2 if self.dim > 1 else 0
        if exponent != self.exponent:
            raise AxiomFail(
                "declared exponent does not match", declared=self.exponent, actual=exponent
            )
        return self

    @cached_property
    def maximal_ideal(self) -> Matrix:
        mat = zeros(self.dim, self.dim - 1)
        for i in range(1, self.dim):
            mat[i, i - 1] = 1
        return mat

    @cached_property
    def ideal_powers(self) -> tuple[Matrix, ...]:
        """Column bases of m^0 = A, m, m^2, ... up to the first zero power."""
        return ideal_powers(self, self.maximal_ideal)

    @cached_property
    def adapted_basis(self) -> Matrix:
        """Basis of m ordered along m^k, each block completing m^(k+1) inside m^k."""
        blocks = []
        powers = self.ideal_powers
        for k in range(1, len(powers) - 1):
            picked = extend_basis(powers[k + 1], powers[k])
            blocks.append(powers[k].extract(list(range(self.dim)), picked))
        return hstack(*blocks, rows=self.dim)

    @cached_property
    def adapted_orders(self) -> tuple[int, ...]:
        """m-adic order of each adapted basis column."""
        orders = []
        powers = self.ideal_powers
        for k in range(1, len(powers) - 1):
            orders += [k] * (powers[k].cols - powers[k + 1].cols)
        return tuple(orders)

    def order(self, x: Mapping[int, Any]) -> int:
        """Largest k with x in m^k (the exponent + 1 for zero)."""
        vec = column(x, self.dim)
        k = 0
        while k + 1 < len(self.ideal_powers) and contains(self.ideal_powers[k + 1], vec):
            k += 1
        return k

    def generators(self) -> Matrix:
        """Columns completing m^2 inside m."""
        return self.adapted_basis.extract(
            list(range(self.dim)), [i for i, k in enumerate(self.adapted_orders) if k == 1]
        )

    def is_unit(self, x: Mapping[int, Any]) -> bool:
        return x.get(0, 0) != 0

    def quotient_by_power(self, k: int) -> "ArtinLocalAlgebra":
        """A / m^(k+1), on a basis adapted to the m-adic filtration."""
        frame, orders = self.frame()
        keep = [i for i, order in enumerate(orders) if order <= k]
        return self._from_frame(frame, keep, min(k, self.exponent))

    def frame(self) -> tuple[Matrix, list[int]]:
        """Columns 1 then the adapted basis of m, with their m-adic orders."""
        frame = hstack(self.unit_column(), self.adapted_basis, rows=self.dim)
        return frame, [0, *self.adapted_orders]

    def _from_frame(
        self, frame: Matrix, keep: Sequence[int], exponent: int
    ) -> "ArtinLocalAlgebra":
        inverse = frame.inv()
        position = {old: new for new, old in enumerate(keep)}
        table: dict[tuple[int, int], Vector] = {}
        for a, b in combinations_with_replacement(keep, 2):
            image = self.mul(sparse_column(frame, a), sparse_column(frame, b))
            coords = inverse * column(image, self.dim)
            out = {position[k]: coords[k, 0] for k in keep if coords[k, 0] != 0}
            if out:
                table[(position[a], position[b])] = out
        labels = []
        for i, old in enumerate(keep):
            support = sparse_column(frame, old)
            if len(support) == 1 and next(iter(support.values())) == 1:
                labels.append(self.labels[next(iter(support))])
            else:
                labels.append(f"e{i}")
        return ArtinLocalAlgebra(
            labels=tuple(labels), table=table, unit={0: Rational(1)}, exponent=exponent
        )


def rationals() -> ArtinLocalAlgebra:
    return ArtinLocalAlgebra(labels=("1",), exponent=0)


def monomial_label(names: Sequence[str], exponents: Sequence[int]) -> str:
    parts = []
    for name, e in zip(names, exponents):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts) or "1"


def monomial_exponents(r: int, n: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree <= n in r variables, by degree then lexicographically."""
    return sorted(
        (e for e in product(range(n + 1), repeat=r) if sum(e) <= n), key=lambda e: (sum(e), e)
    )


def truncated_polynomial(names: Sequence[str], n: int) -> ArtinLocalAlgebra:
    """Q[x_1..x_r] / m^(n+1) on monomials ordered by total degree then lexicographically.

    Examples:
        >>> truncated_polynomial(("x", "y"), 2).labels
        ('1', 'y', 'x', 'y^2', 'x*y', 'x^2')
    """
    r = len(names)
    monomials = monomial_exponents(r, n)
    index = {e: i for i, e in enumerate(monomials)}
    table: dict[tuple[int, int], Vector] = {}
    for a, b in combinations_with_replacement(range(len(monomials)), 2):
        total = tuple(x + y for x, y in zip(monomials[a], monomials[b]))
        if total in index:
            table[(a, b)] = {index[total]: Rational(1)}
    labels = tuple(monomial_label(names, e) for e in monomials)
    return ArtinLocalAlgebra(
        labels=labels, table=table, unit={0: Rational(1)}, exponent=n if r else 0
    )


def dual_numbers(k: int = 1, name: str = "ε") -> ArtinLocalAlgebra:
    """Q[ε]/(ε^(k+1))."""
    return truncated_polynomial((name,), k)


class AlgebraMorphism(BaseModel):
    """Unital algebra map given by its matrix on the bases."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    source: CommutativeAlgebra
    target: CommutativeAlgebra
    matrix: Matrix

    @model_validator(mode="after")
    def _check_morphism(self) -> "AlgebraMorphism":
        if self.matrix.shape != (self.target.dim, self.source.dim):
            raise AxiomFail("morphism matrix has the wrong shape", shape=self.matrix.shape)
        if self.matrix * self.source.unit_column() != self.target.unit_column():
            raise AxiomFail("morphism is not unital")
        for i, j in combinations_with_replacement(range(self.source.dim), 2):
            left = self(self.source.product(i, j))
            right = self.target.mul(self({i: 1}), self({j: 1}))
            if left != right:
                raise AxiomFail(
                    "morphism is not multiplicative",
                    pair=(self.source.labels[i], self.source.labels[j]),
                )
        return self

    def __call__(self, x: Mapping[int, Any]) -> Vector:
        return sparse_column(self.matrix * column(x, self.source.dim))

    def is_surjective(self) -> bool:
        return rank(self.matrix) == self.target.dim

    def is_isomorphism(self) -> bool:
        return self.matrix.is_square and rank(self.matrix) == self.source.dim


def match_generators(
    source: ArtinLocalAlgebra, target: ArtinLocalAlgebra
) -> Optional[AlgebraMorphism]:
    """Isomorphism sending the canonical generators of `source` to those of `target` in order.

    Each basis element of the source is written as a polynomial in its generators and the same
    polynomial is evaluated in the target; None when the dimensions, the number of generators or
    the resulting map disagree.
    """
    if source.dim != target.dim:
        return None
    gens_s, gens_t = source.generators(), target.generators()
    if gens_s.cols != gens_t.cols:
        return None
    words_s = _generator_monomials(source, gens_s)
    words_t = _generator_monomials(target, gens_t)
    span_s = hstack(*[column(v, source.dim) for _, v in words_s], rows=source.dim)
    span_t = hstack(*[column(v, target.dim) for _, v in words_t], rows=target.dim)
    coords = solve(span_s, Matrix.eye(source.dim))
    if coords is None:
        return None
    matrix = span_t * coords
    try:
        morphism = AlgebraMorphism(source=source, target=target, matrix=matrix)
    except AxiomFail as e:
        logfire.debug("generator matching failed", reason=e.message)
        return None
    return morphism if morphism.is_isomorphism() else None


def _generator_monomials(
    algebra: ArtinLocalAlgebra, gens: Matrix
) -> list[tuple[tuple[int, ...], Vector]]:
    r = gens.cols
    top = max(algebra.exponent, 0)
    out = []
    for e in sorted(
        (e for e in product(range(top + 1), repeat=r) if sum(e) <= top),
        key=lambda e: (sum(e), e),
    ):
        vec: Vector = dict(algebra.unit)
        for g, k in enumerate(e):
            vec = algebra.mul(vec, algebra.power(sparse_column(gens, g), k))
        out.append((e, vec))
    return out


def artin_from_table(
    labels: Sequence[str], table: Mapping[tuple[int, int], Vector]
) -> ArtinLocalAlgebra:
    """Artin algebra on `labels` (unit first) with the exponent read off the table."""
    table = unit_rows(len(labels), table)
    candidate = CommutativeAlgebra(labels=tuple(labels), table=table)
    ideal = zeros(candidate.dim, candidate.dim - 1)
    for i in range(1, candidate.dim):
        ideal[i, i - 1] = 1
    powers = ideal_powers(candidate, ideal)
    exponent = len(powers) - 2 if candidate.dim > 1 else 0
    return ArtinLocalAlgebra(labels=tuple(labels), table=table, exponent=exponent)

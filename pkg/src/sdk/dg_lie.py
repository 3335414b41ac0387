"""Dg Lie algebras, their modules and morphisms, by sparse structure constants on flat bases."""

from typing import Any, Optional
from random import Random
from functools import cached_property
from itertools import product
from collections.abc import Mapping, Iterable, Sequence

import logfire
from sympy import Matrix, Rational, factorial
from pydantic import Field, BaseModel, ConfigDict, model_validator

from src.sdk.artin import ArtinLocalAlgebra
from src.sdk.graded import (
    ChainMap,
    Complex,
    GradedSpace,
    KeyedComplex,
    cone,
    tensor,
    keyed_complex,
    make_complex,
    zero_complex,
    is_quasi_iso,
    map_from_rule,
    check_chain_map,
)
from src.sdk.linalg import (
    solve,
    zeros,
    column,
    hstack,
    scaled,
    add_into,
    combine,
    contains,
    nullspace,
    complement,
    column_basis,
    sparse_column,
)
from src.sdk.signs import koszul
from src.types.errors import (
    SkewFail,
    JacobiFail,
    NotAModule,
    NotAnIdeal,
    WrongDegree,
    LeibnizFail,
    NotChainMap,
    ShapeMismatch,
    NotLieMorphism,
    NotMaurerCartan,
)

Vector = dict[int, Any]
Table = dict[tuple[int, int], dict[int, Any]]


class DgLieAlgebra(BaseModel):
    """A complex with a graded bracket; `table[(i, j)]` is [e_i, e_j] for every stored pair.

    Construct through `make_dg_lie`, which regenerates the skew half and validates the axioms.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    complex: Complex
    table: Table = Field(default_factory=dict)

    @property
    def space(self) -> GradedSpace:
        return self.complex.space

    @property
    def dim(self) -> int:
        return self.space.total_dim

    @property
    def degrees(self) -> tuple[int, ...]:
        return self.space.flat_degrees

    @property
    def labels(self) -> tuple[str, ...]:
        return self.space.flat_labels

    def d(self, x: Mapping[int, Any]) -> Vector:
        out: Vector = {}
        for i, a in x.items():
            add_into(out, self.complex.sparse_d[i], a)
        return out

    def bracket(self, x: Mapping[int, Any], y: Mapping[int, Any]) -> Vector:
        out: Vector = {}
        for i, a in x.items():
            for j, b in y.items():
                add_into(out, self.table.get((i, j), {}), a * b)
        return out

    def degree_of(self, x: Mapping[int, Any]) -> Optional[int]:
        """The common degree of a homogeneous vector (None for zero or mixed vectors)."""
        found = {self.degrees[i] for i, value in x.items() if value != 0}
        return found.pop() if len(found) == 1 else None

    @cached_property
    def ad_matrices(self) -> tuple[Matrix, ...]:
        out = []
        for i in range(self.dim):
            mat = zeros(self.dim, self.dim)
            for j in range(self.dim):
                for k, value in self.table.get((i, j), {}).items():
                    mat[k, j] = value
            out.append(mat)
        return tuple(out)

    def ad(self, x: Mapping[int, Any]) -> Matrix:
        out = zeros(self.dim, self.dim)
        for i, value in x.items():
            out += value * self.ad_matrices[i]
        return out

    def d_matrix(self) -> Matrix:
        return self.complex.differential.flat_matrix()

    def constants(self) -> list[tuple[int, int, int, Any]]:
        """Stored triples (i, j, k, c) with i <= j, the input form of `make_dg_lie`."""
        return [
            (i, j, k, c)
            for (i, j), image in sorted(self.table.items())
            if i <= j
            for k, c in sorted(image.items())
        ]


def skew_table(
    space: GradedSpace, constants: Iterable[tuple[int, int, int, Any]]
) -> Table:
    """Completes structure constants given for i <= j by [e_j, e_i] = -(-1)^(|i||j|)[e_i, e_j].

    Raises:
        ShapeMismatch: If a bracket leaves the basis or lands in the wrong degree.
        SkewFail: If both orders are given inconsistently or an even square is nonzero.
    """
    degrees = space.flat_degrees
    n = space.total_dim
    given: Table = {}
    for i, j, k, c in constants:
        if not all(0 <= index < n for index in (i, j, k)):
            raise ShapeMismatch("structure constant leaves the basis", triple=(i, j, k))
        if degrees[k] != degrees[i] + degrees[j]:
            raise ShapeMismatch(
                "bracket does not have degree 0",
                triple=(space.flat_labels[i], space.flat_labels[j], space.flat_labels[k]),
            )
        add_into(given.setdefault((i, j), {}), {k: c})
    table: Table = {}
    for (i, j), image in given.items():
        image = {k: v for k, v in image.items() if v != 0}
        if not image:
            continue
        sign = -koszul(degrees[i], degrees[j])
        mirrored = scaled(image, sign)
        if i == j and mirrored != image:
            raise SkewFail("graded skew-symmetry fails", pair=(space.flat_labels[i],) * 2)
        stored = table.get((i, j))
        if stored is not None and stored != image:
            raise SkewFail(
                "graded skew-symmetry fails",
                pair=(space.flat_labels[j], space.flat_labels[i]),
            )
        table[(i, j)] = image
        table[(j, i)] = mirrored
    return table


def validate_dg_lie(g: DgLieAlgebra) -> DgLieAlgebra:
    """Checks skew-symmetry, Jacobi and Leibniz on every basis pair and triple."""
    degrees, labels = g.degrees, g.labels
    with logfire.span("validate dg Lie algebra", dim=g.dim):
        for i, j in product(range(g.dim), repeat=2):
            mirrored = scaled(g.table.get((j, i), {}), -koszul(degrees[i], degrees[j]))
            if g.table.get((i, j), {}) != mirrored:
                raise SkewFail("graded skew-symmetry fails", pair=(labels[i], labels[j]))
        for i, j in product(range(g.dim), repeat=2):
            x, y = {i: 1}, {j: 1}
            lhs = g.d(g.bracket(x, y))
            rhs = combine(
                (1, g.bracket(g.d(x), y)),
                (koszul(degrees[i], 1), g.bracket(x, g.d(y))),
            )
            if combine((1, lhs), (-1, rhs)):
                raise LeibnizFail("graded Leibniz rule fails", pair=(labels[i], labels[j]))
        for i, j, k in product(range(g.dim), repeat=3):
            x, y, z = {i: 1}, {j: 1}, {k: 1}
            lhs = g.bracket(x, g.bracket(y, z))
            rhs = combine(
                (1, g.bracket(g.bracket(x, y), z)),
                (koszul(degrees[i], degrees[j]), g.bracket(y, g.bracket(x, z))),
            )
            if combine((1, lhs), (-1, rhs)):
                raise JacobiFail(
                    "graded Jacobi identity fails", triple=(labels[i], labels[j], labels[k])
                )
    return g


def make_dg_lie(C: Complex, constants: Iterable[tuple[int, int, int, Any]]) -> DgLieAlgebra:
    """Builds and validates a dg Lie algebra.

    Args:
        C (Complex): The underlying complex.
        constants (Iterable[tuple[int, int, int, Any]]): Triples (i, j, k, c) meaning
            [e_i, e_j] has coefficient c on e_k, with i <= j; flat indices of `C`.

    Returns:
        DgLieAlgebra: The validated algebra.

    Examples:
        >>> from src.sdk.graded import zero_complex
        >>> space = GradedSpace(components={0: ("e", "f", "h")})
        >>> sl2 = make_dg_lie(zero_complex(space), [(0, 1, 2, 1), (0, 2, 0, -2), (1, 2, 1, 2)])
        >>> sl2.bracket({2: 1}, {0: 1})
        {0: 2}
    """
    table = skew_table(C.space, constants)
    return validate_dg_lie(DgLieAlgebra(complex=C, table=table))


def abelian(C: Complex) -> DgLieAlgebra:
    return DgLieAlgebra(complex=C)


def bracket_map(g: DgLieAlgebra) -> ChainMap:
    """The bracket as a degree-0 map tensor(g, g) -> g."""
    square = tensor(g.complex, g.complex)
    return map_from_rule(
        square.complex.space,
        g.space,
        lambda index: g.table.get(square.keys[index], {}),
    )


def mc_defect(g: DgLieAlgebra, alpha: Mapping[int, Any]) -> Vector:
    """d(alpha) + 1/2 [alpha, alpha]."""
    return combine((1, g.d(alpha)), (Rational(1, 2), g.bracket(alpha, alpha)))


def _check_mc_degree(g: DgLieAlgebra, alpha: Mapping[int, Any], ideal_only: Sequence[int]) -> None:
    for i, value in alpha.items():
        if value != 0 and g.degrees[i] != 1:
            raise WrongDegree(
                "Maurer-Cartan elements live in degree 1",
                basis=g.labels[i],
                degree=g.degrees[i],
            )
        if value != 0 and i in ideal_only:
            raise WrongDegree("coefficient outside the maximal ideal", basis=g.labels[i])


def check_mc(
    g: DgLieAlgebra, alpha: Mapping[int, Any], coefficients: Optional[ArtinLocalAlgebra] = None
) -> bool:
    """True iff d(alpha) + 1/2 [alpha, alpha] = 0.

    With Artin coefficients `alpha` is a vector of g x A on the basis index i * dim A + k and
    must have no component along the unit of A.
    """
    if coefficients is None or coefficients.dim == 1:
        _check_mc_degree(g, alpha, ())
        return not mc_defect(g, alpha)
    G = extend_scalars(g, coefficients)
    unit_part = [i * coefficients.dim for i in range(g.dim)]
    _check_mc_degree(G, alpha, unit_part)
    return not mc_defect(G, alpha)


def twist(g: DgLieAlgebra, alpha: Mapping[int, Any]) -> DgLieAlgebra:
    """(g, d + [alpha, -]) with the same bracket."""
    if not check_mc(g, alpha):
        raise NotMaurerCartan(
            "element does not solve the Maurer-Cartan equation",
            defect={g.labels[i]: str(v) for i, v in mc_defect(g, alpha).items()},
        )
    space = g.space
    def rule(i: int) -> dict:
        return combine((1, g.complex.sparse_d[i]), (1, g.bracket(alpha, {i: 1})))

    d = map_from_rule(space, space, rule, 1)
    twisted = DgLieAlgebra(complex=make_complex(space, d), table=g.table)
    return validate_dg_lie(twisted)


def extend_scalars(g: DgLieAlgebra, A: ArtinLocalAlgebra) -> DgLieAlgebra:
    """g x A over Q, basis e_i x a_k at index i * dim A + k."""
    m = A.dim
    keys = [(i, k) for i in range(g.dim) for k in range(m)]

    def differential(key: tuple[int, int]) -> dict:
        i, k = key
        return {(j, k): v for j, v in g.complex.sparse_d[i].items()}

    keyed = keyed_complex(
        keys,
        degree=lambda key: g.degrees[key[0]],
        label=lambda key: g.labels[key[0]] if m == 1 else f"{g.labels[key[0]]}⊗{A.labels[key[1]]}",
        differential=differential,
    )
    table: Table = {}
    for (i, j), image in g.table.items():
        for k, l in product(range(m), repeat=2):
            coefficient = A.product(k, l)
            out: Vector = {}
            for target, c in image.items():
                for a, value in coefficient.items():
                    add_into(out, {target * m + a: c * value})
            if out:
                table[(i * m + k, j * m + l)] = out
    return DgLieAlgebra(complex=keyed.complex, table=table)


def maximal_ideal_part(g: DgLieAlgebra, A: ArtinLocalAlgebra) -> list[int]:
    """Indices of g x A spanning g x m."""
    return [i * A.dim + k for i in range(g.dim) for k in range(1, A.dim)]


def homogeneous_basis(g: DgLieAlgebra, span: Matrix) -> Matrix:
    """Checks that every column is homogeneous and returns an independent subset."""
    for j in range(span.cols):
        if span[:, j].is_zero_matrix:
            continue
        if g.degree_of(sparse_column(span, j)) is None:
            raise ShapeMismatch("subspace generators must be homogeneous", column=j)
    return column_basis(span) if span.cols else zeros(g.dim, 0)


def check_ideal(g: DgLieAlgebra, span: Matrix) -> Matrix:
    """Validates a d-stable bracket ideal and returns its homogeneous basis."""
    basis = homogeneous_basis(g, span)
    for a in range(basis.cols):
        x = sparse_column(basis, a)
        if not contains(basis, column(g.d(x), g.dim)):
            raise NotAnIdeal("subspace is not d-stable", generator=a)
        for i in range(g.dim):
            image = g.bracket({i: 1}, x)
            if not contains(basis, column(image, g.dim)):
                raise NotAnIdeal(
                    "bracket leaves the subspace", element=g.labels[i], generator=a
                )
    return basis


class IdealCone(BaseModel):
    """Cone of an ideal inclusion h -> g with its keyed basis ("s", a) and ("t", i)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    algebra: DgLieAlgebra
    keyed: KeyedComplex
    ideal: Matrix
    parent: DgLieAlgebra

    def contracting_homotopy(self) -> Optional[ChainMap]:
        """s(x, y) = (y, 0) when h = g, checked against ds + sd = id."""
        if self.ideal.cols != self.parent.dim:
            return None
        coords = self.ideal.inv()
        index = self.keyed.index
        space = self.algebra.space

        def rule(position: int) -> dict:
            side, i = self.keyed.keys[position]
            if side == "s":
                return {}
            return {
                index[("s", a)]: coords[a, i]
                for a in range(self.ideal.cols)
                if coords[a, i] != 0
            }

        s = map_from_rule(space, space, rule, -1)
        d = self.algebra.complex.differential
        total = d.compose(s).combine(s.compose(d))
        identity = {p: Matrix.eye(space.dim(p)) for p in space.degrees}
        if any(total.block(p) != identity[p] for p in space.degrees):
            raise NotChainMap("ds + sd is not the identity")
        return s


def cone_lie(g: DgLieAlgebra, span: Matrix) -> IdealCone:
    """Cone of the inclusion of an ideal, with bracket
    [(x, y), (x', y')] = ((-1)^|y| [y, x'] + [x, y'], [y, y']).
    """
    sub, basis = subalgebra(g, check_ideal(g, span))
    inclusion = map_from_rule(sub.space, g.space, lambda a: sparse_column(basis, a))
    keyed = cone(inclusion, sub.complex, g.complex)
    index = keyed.index

    def coords(vec: Vector) -> Vector:
        x = solve(basis, column(vec, g.dim))
        return {a: x[a, 0] for a in range(basis.cols) if x[a, 0] != 0}

    table: Table = {}
    for u, v in product(keyed.keys, repeat=2):
        (su, a), (sv, b) = u, v
        out: Vector = {}
        if su == "t" and sv == "t":
            out = {index[("t", k)]: c for k, c in g.table.get((a, b), {}).items()}
        elif su == "t" and sv == "s":
            image = g.bracket({a: 1}, sparse_column(basis, b))
            sign = koszul(g.degrees[a], 1)
            out = {index[("s", k)]: sign * c for k, c in coords(image).items()}
        elif su == "s" and sv == "t":
            image = g.bracket(sparse_column(basis, a), {b: 1})
            out = {index[("s", k)]: c for k, c in coords(image).items()}
        if out:
            table[(index[u], index[v])] = out
    algebra = validate_dg_lie(DgLieAlgebra(complex=keyed.complex, table=table))
    return IdealCone(algebra=algebra, keyed=keyed, ideal=basis, parent=g)


def subalgebra(g: DgLieAlgebra, basis: Matrix) -> tuple[DgLieAlgebra, Matrix]:
    """A graded subalgebra on homogeneous basis columns, reordered by degree.

    Returns the subalgebra and the reordered columns; column a is its flat basis vector a.
    """
    order = sorted(range(basis.cols), key=lambda a: g.degree_of(sparse_column(basis, a)))
    components: dict[int, list[str]] = {}
    for position, a in enumerate(order):
        components.setdefault(g.degree_of(sparse_column(basis, a)), []).append(f"h{position}")
    space = GradedSpace(components=components)
    ordered = basis.extract(list(range(g.dim)), order) if order else zeros(g.dim, 0)

    def coords(vec: Vector) -> Vector:
        x = solve(ordered, column(vec, g.dim))
        if x is None:
            raise NotAnIdeal("subspace is not closed", vector=str(vec))
        return {a: x[a, 0] for a in range(ordered.cols) if x[a, 0] != 0}

    d = map_from_rule(space, space, lambda a: coords(g.d(sparse_column(ordered, a))), 1)
    table: Table = {}
    for a, b in product(range(ordered.cols), repeat=2):
        image = coords(g.bracket(sparse_column(ordered, a), sparse_column(ordered, b)))
        if image:
            table[(a, b)] = image
    return DgLieAlgebra(complex=make_complex(space, d), table=table), ordered


class LieMorphism(BaseModel):
    """A degree-0 chain map preserving brackets."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    source: DgLieAlgebra
    target: DgLieAlgebra
    map: ChainMap

    @model_validator(mode="after")
    def _check_morphism(self) -> "LieMorphism":
        f, g, h = self.map, self.source, self.target
        if f.degree != 0:
            raise NotLieMorphism("Lie morphisms have degree 0", degree=f.degree)
        try:
            check_chain_map(f, g.complex, h.complex)
        except NotChainMap as e:
            raise NotLieMorphism("map does not commute with the differentials", **e.witness) from e
        for i, j in product(range(g.dim), repeat=2):
            image = self.apply(g.bracket({i: 1}, {j: 1}))
            expected = h.bracket(f.sparse[i], f.sparse[j])
            if combine((1, image), (-1, expected)):
                raise NotLieMorphism(
                    "map does not preserve brackets", pair=(g.labels[i], g.labels[j])
                )
        return self

    def apply(self, x: Mapping[int, Any]) -> Vector:
        out: Vector = {}
        for i, value in x.items():
            add_into(out, self.map.sparse[i], value)
        return out


def lie_quasi_iso(f: LieMorphism) -> bool:
    return is_quasi_iso(f.map, f.source.complex, f.target.complex)


def identity_morphism(g: DgLieAlgebra) -> LieMorphism:
    return LieMorphism(source=g, target=g, map=map_from_rule(g.space, g.space, lambda i: {i: 1}))


def direct_sum_index(family: Sequence[DgLieAlgebra]) -> dict[tuple[int, int], int]:
    """Flat index of (summand, index) in `direct_sum_lie(family)`."""
    keys = [(s, i) for s, g in enumerate(family) for i in range(g.dim)]
    ordered = sorted(keys, key=lambda key: family[key[0]].degrees[key[1]])
    return {key: position for position, key in enumerate(ordered)}


def direct_sum_lie(family: Sequence[DgLieAlgebra]) -> DgLieAlgebra:
    """Product of dg Lie algebras; keys (summand, flat index) ordered by degree."""
    keys = [(s, i) for s, g in enumerate(family) for i in range(g.dim)]
    keyed = keyed_complex(
        keys,
        degree=lambda key: family[key[0]].degrees[key[1]],
        label=lambda key: f"{family[key[0]].labels[key[1]]}#{key[0]}",
        differential=lambda key: {
            (key[0], j): v for j, v in family[key[0]].complex.sparse_d[key[1]].items()
        },
    )
    index = keyed.index
    table: Table = {}
    for s, g in enumerate(family):
        for (i, j), image in g.table.items():
            table[(index[(s, i)], index[(s, j)])] = {index[(s, k)]: c for k, c in image.items()}
    return DgLieAlgebra(complex=keyed.complex, table=table)


class Quotient(BaseModel):
    """g/h on a standard complement of h, with the projection and a linear section."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    algebra: DgLieAlgebra
    projection: Matrix
    section: Matrix


def quotient_lie(g: DgLieAlgebra, span: Matrix) -> Quotient:
    basis = check_ideal(g, span)
    kept = complement(basis, g.dim)
    frame = hstack(basis, Matrix.eye(g.dim).extract(list(range(g.dim)), kept), rows=g.dim)
    inverse = frame.inv()
    projection = inverse.extract(list(range(basis.cols, g.dim)), list(range(g.dim)))
    section = Matrix.eye(g.dim).extract(list(range(g.dim)), kept)
    components: dict[int, list[str]] = {}
    for i in kept:
        components.setdefault(g.degrees[i], []).append(g.labels[i])
    space = GradedSpace(components=components)

    def project(vec: Vector) -> Vector:
        return sparse_column(projection * column(vec, g.dim))

    d = map_from_rule(space, space, lambda a: project(g.d({kept[a]: 1})), 1)
    table: Table = {}
    for a, b in product(range(len(kept)), repeat=2):
        image = project(g.bracket({kept[a]: 1}, {kept[b]: 1}))
        if image:
            table[(a, b)] = image
    algebra = validate_dg_lie(DgLieAlgebra(complex=make_complex(space, d), table=table))
    return Quotient(algebra=algebra, projection=projection, section=section)


class DgLieModule(BaseModel):
    """A complex M with an action g x M -> M; `action[(i, m)]` is e_i . v_m."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    algebra: DgLieAlgebra
    complex: Complex
    action: Table = Field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.complex.space.total_dim

    @property
    def degrees(self) -> tuple[int, ...]:
        return self.complex.space.flat_degrees

    @property
    def labels(self) -> tuple[str, ...]:
        return self.complex.space.flat_labels

    def act(self, x: Mapping[int, Any], v: Mapping[int, Any]) -> Vector:
        out: Vector = {}
        for i, a in x.items():
            for m, b in v.items():
                add_into(out, self.action.get((i, m), {}), a * b)
        return out

    def d(self, v: Mapping[int, Any]) -> Vector:
        out: Vector = {}
        for m, b in v.items():
            add_into(out, self.complex.sparse_d[m], b)
        return out

    @cached_property
    def rho(self) -> tuple[Matrix, ...]:
        out = []
        for i in range(self.algebra.dim):
            mat = zeros(self.dim, self.dim)
            for m in range(self.dim):
                for k, value in self.action.get((i, m), {}).items():
                    mat[k, m] = value
            out.append(mat)
        return tuple(out)


def validate_module(M: DgLieModule) -> DgLieModule:
    g = M.algebra
    for (i, m), image in M.action.items():
        for k in image:
            if M.degrees[k] != g.degrees[i] + M.degrees[m]:
                raise NotAModule("action does not have degree 0", pair=(g.labels[i], M.labels[m]))
    for i, m in product(range(g.dim), range(M.dim)):
        lhs = M.d(M.act({i: 1}, {m: 1}))
        rhs = combine(
            (1, M.act(g.d({i: 1}), {m: 1})),
            (koszul(g.degrees[i], 1), M.act({i: 1}, M.d({m: 1}))),
        )
        if combine((1, lhs), (-1, rhs)):
            raise NotAModule("action is not a chain map", pair=(g.labels[i], M.labels[m]))
    for i, j in product(range(g.dim), repeat=2):
        lhs = sum(
            (value * M.rho[k] for k, value in g.bracket({i: 1}, {j: 1}).items()),
            zeros(M.dim, M.dim),
        )
        rhs = M.rho[i] * M.rho[j] - koszul(g.degrees[i], g.degrees[j]) * M.rho[j] * M.rho[i]
        if lhs != rhs:
            raise NotAModule("action does not respect brackets", pair=(g.labels[i], g.labels[j]))
    return M


def make_module(
    g: DgLieAlgebra, C: Complex, constants: Iterable[tuple[int, int, int, Any]]
) -> DgLieModule:
    """Module from triples (i, m, k, c): e_i . v_m has coefficient c on v_k."""
    action: Table = {}
    for i, m, k, c in constants:
        if not (0 <= i < g.dim and 0 <= m < C.space.total_dim and 0 <= k < C.space.total_dim):
            raise ShapeMismatch("action constant leaves the basis", triple=(i, m, k))
        add_into(action.setdefault((i, m), {}), {k: c})
    action = {key: value for key, value in action.items() if value}
    return validate_module(DgLieModule(algebra=g, complex=C, action=action))


def adjoint_module(g: DgLieAlgebra) -> DgLieModule:
    return DgLieModule(algebra=g, complex=g.complex, action=dict(g.table))


def trivial_module(g: DgLieAlgebra, C: Optional[Complex] = None) -> DgLieModule:
    if C is None:
        C = zero_complex(GradedSpace(components={0: ("1",)}))
    return DgLieModule(algebra=g, complex=C)


def exp_series(operator: Matrix, vec: Matrix, shift: int = 0) -> Matrix:
    """sum_k operator^k vec / (k + shift)! until the terms vanish (operator nilpotent)."""
    total = zeros(vec.rows, 1)
    term = vec
    k = 0
    while not term.is_zero_matrix:
        total += term / factorial(k + shift)
        term = operator * term
        k += 1
        if k > operator.rows + 1:
            raise ShapeMismatch("operator is not nilpotent", steps=k)
    return total


def gauge_action(
    g: DgLieAlgebra, sigma: Mapping[int, Any], alpha: Mapping[int, Any], A: ArtinLocalAlgebra
) -> Vector:
    """exp(sigma) . alpha = alpha + sum_(k>=1) ad^k alpha / k! - sum_(k>=0) ad^k d(sigma) / (k+1)!

    Vectors live in g x A on the index i * dim A + k; sigma has degree 0 and coefficients in m.
    """
    G = extend_scalars(g, A)
    for i, value in sigma.items():
        if value != 0 and (G.degrees[i] != 0 or i % A.dim == 0):
            raise WrongDegree(
                "gauge parameters live in degree 0 with coefficients in m", basis=G.labels[i]
            )
    ad = G.ad(sigma)
    moved = exp_series(ad, column(alpha, G.dim))
    drift = exp_series(ad, column(G.d(sigma), G.dim), shift=1)
    return sparse_column(moved - drift)


def find_gauge(
    g: DgLieAlgebra,
    alpha: Mapping[int, Any],
    beta: Mapping[int, Any],
    A: ArtinLocalAlgebra,
) -> Optional[Vector]:
    """A gauge sigma with exp(sigma) . alpha = beta, built order by order in m.

    At m-adic order k the residue beta - exp(sigma) . alpha must be d-exact in g x (m^k/m^(k+1));
    the canonical particular solution is taken at each order. None when a residue is not exact.
    """
    G = extend_scalars(g, A)
    frame = hstack(A.unit_column(), A.adapted_basis, rows=A.dim)
    inverse_t = frame.inv().T
    orders = [0, *A.adapted_orders]
    d0 = g.complex.d(0)
    offset0 = g.space.offsets.get(0)
    offset1 = g.space.offsets.get(1)
    sigma: Vector = {}
    for k in range(1, A.exponent + 1):
        residue = combine((1, beta), (-1, gauge_action(g, sigma, alpha, A)))
        if not residue:
            break
        grid = _as_grid(residue, g.dim, A.dim) * inverse_t
        delta = zeros(g.dim, A.dim)
        for c, order in enumerate(orders):
            if order != k:
                continue
            target = grid[:, c]
            if target.is_zero_matrix:
                continue
            if offset1 is None or offset0 is None:
                logfire.debug("gauge residue outside degree 0 and 1", order=k)
                return None
            rhs = -target[offset1 : offset1 + g.space.dim(1), 0]
            solution = solve(d0, rhs)
            if solution is None:
                logfire.debug("gauge residue is not exact", order=k, column=c)
                return None
            delta[offset0 : offset0 + g.space.dim(0), c] = solution
        add_into(sigma, _from_grid(delta * frame.T))
    if combine((1, beta), (-1, gauge_action(g, sigma, alpha, A))):
        return None
    return sigma


def _as_grid(vec: Mapping[int, Any], rows: int, cols: int) -> Matrix:
    grid = zeros(rows, cols)
    for index, value in vec.items():
        grid[index // cols, index % cols] = value
    return grid


def _from_grid(grid: Matrix) -> Vector:
    return {
        i * grid.cols + k: grid[i, k]
        for i in range(grid.rows)
        for k in range(grid.cols)
        if grid[i, k] != 0
    }


def random_nilpotent_lie(seed: int) -> DgLieAlgebra:
    """Seeded two-step nilpotent dg Lie algebra of dimension at most 6.

    V sits in degree p, the centre Z in degree 2p and one more central vector w in degree
    p + 1, for p drawn from {-1, 0, 1}. Brackets send V x V into Z and d v_i = c_i w with
    c_0 = 1, so the differential never vanishes and Leibniz holds because w is central.

    Examples:
        >>> g = random_nilpotent_lie(0)
        >>> g.d_matrix().is_zero_matrix
        False
    """
    rng = Random(seed)
    p = rng.choice((-1, 0, 1))
    v_dim, z_dim = rng.randint(1, 3), rng.randint(1, 2)
    components: dict[int, tuple[str, ...]] = {}
    for degree, labels in (
        (p, tuple(f"v{i}" for i in range(v_dim))),
        (2 * p, tuple(f"z{i}" for i in range(z_dim))),
        (p + 1, ("w",)),
    ):
        components[degree] = components.get(degree, ()) + labels
    space = GradedSpace(components=components)
    v_index = [space.index_of(f"v{i}") for i in range(v_dim)]
    z_index = [space.index_of(f"z{i}") for i in range(z_dim)]
    w = space.index_of("w")
    slopes = [Rational(1)] + [Rational(rng.randint(-2, 2)) for _ in v_index[1:]]
    images = {i: {w: c} for i, c in zip(v_index, slopes) if c}
    C = make_complex(space, map_from_rule(space, space, lambda i: images.get(i, {}), 1))
    constants = []
    for a, i in enumerate(v_index):
        for j in v_index[a:]:
            if i == j and p % 2 == 0:
                continue
            for k in z_index:
                c = rng.randint(-2, 2)
                if c:
                    constants.append((i, j, k, Rational(c)))
    return make_dg_lie(C, constants)


def random_mc(g: DgLieAlgebra, A: ArtinLocalAlgebra, seed: int) -> Vector:
    """Degree-1 cocycle of g with coefficients in the top power of m.

    Such elements square to zero and are closed, hence Maurer-Cartan.
    """
    rng = Random(seed)
    if A.exponent == 0 or not g.space.dim(1):
        return {}
    top = [c for c, order in enumerate(A.adapted_orders, start=1) if order == A.exponent]
    frame = hstack(A.unit_column(), A.adapted_basis, rows=A.dim)
    cocycles = nullspace(g.complex.d(1))
    offset = g.space.offsets[1]
    out: Vector = {}
    for c in top:
        for n in range(cocycles.cols):
            value = Rational(rng.randint(-3, 3))
            for r, x in sparse_column(cocycles, n).items():
                for k, entry in sparse_column(frame, c).items():
                    add_into(out, {(offset + r) * A.dim + k: value * x * entry})
    return out


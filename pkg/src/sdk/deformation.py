"""Deformations of a cover datum over Artin bases, through the Thom-Sullivan resolution.

A family is an exact sparse element of ⊕_I M(U_I) ⊗ Ω_I keyed by (I, m, form key), with no
truncation of the forms. Finite dg Lie algebras are carved out of families by weight windows: the
ungraded resolution keeps every compatible family of weight <= D, and over an Artin base R the
graded resolution keeps the m-part only, order k in weights <= k·D, which is closed under
brackets because weights and orders add.

Conventions: local sections glue by f_α = D_αβ f_β on U_αβ with D_αβ = exp(θ_αβ), the
trivializations interpolate on an edge as s = t_β θ_αβ, and u = exp(-s) d exp(s). A family F of
values is flat when d_u F = dF + u·F vanishes.
"""

from typing import Any, Optional
from functools import cached_property
from itertools import product, combinations, combinations_with_replacement
from collections.abc import Mapping, Callable, Sequence

import logfire
from sympy import Matrix, Rational
from pydantic import Field, BaseModel, ConfigDict, model_validator

from src.sdk.artin import (
    AlgebraMorphism,
    ArtinLocalAlgebra,
    CommutativeAlgebra,
    rationals,
    monomial_exponents,
    truncated_polynomial,
)
from src.sdk.dg_lie import (
    DgLieAlgebra,
    twist,
    check_mc,
    mc_defect,
    exp_series,
    subalgebra,
    check_ideal,
    make_dg_lie,
    quotient_lie,
)
from src.sdk.graded import Complex, GradedSpace, betti, cohomology, make_complex, map_from_rule
from src.sdk.linalg import (
    rank,
    rref,
    solve,
    zeros,
    column,
    hstack,
    add_into,
    combine,
    nullspace,
    sparse_column,
    sparse_matrix,
)
from src.sdk.runtime import ordered_map
from src.sdk.algebroid import DiffReport, TwistedEnveloping, derivations, diff_operators
from src.sdk.chevalley import WordVector, ChevalleyComplex, reduced_chevalley
from src.sdk.connecting import ConnectingMorphism, coboundary_classes, connecting_morphism
from src.sdk.resolution import (
    Form,
    FormKey,
    Simplex,
    CoverDatum,
    CoverModule,
    DeRhamAlgebra,
    exact_forms,
    cech_complex,
    restrict_form,
    thom_sullivan,
    structure_sheaf,
)
from src.types.errors import (
    AxiomFail,
    CocycleFail,
    FlatnessFail,
    ShapeMismatch,
    HypothesisFail,
    WindowOverflow,
    NotMaurerCartan,
)

Vector = dict[int, Any]
Table = dict[tuple[int, int], dict[int, Any]]
FamilyKey = tuple[Simplex, int, FormKey]
Family = dict[FamilyKey, Any]


def _kron(A: Matrix, B: Matrix) -> Matrix:
    rows, cols = A.rows * B.rows, A.cols * B.cols
    if not rows or not cols:
        return zeros(rows, cols)
    return Matrix(rows, cols, lambda i, j: A[i // B.rows, j // B.cols] * B[i % B.rows, j % B.cols])


def _block(matrix: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    if not rows or not cols:
        return zeros(len(rows), len(cols))
    return matrix.extract(list(rows), list(cols))


def _exp(generator: Matrix) -> Matrix:
    """exp of a nilpotent matrix."""
    total = Matrix.eye(generator.rows)
    term = Matrix.eye(generator.rows)
    k = 0
    while True:
        k += 1
        term = term * generator / k
        if term.is_zero_matrix:
            return total
        total += term
        if k > generator.rows:
            raise ShapeMismatch("gluing generator is not nilpotent", steps=k)


def _restriction(module: CoverModule, K: Simplex, I: Simplex) -> Matrix:
    if K == I:
        return Matrix.eye(module.size(I))
    if not module.size(K) or not module.size(I):
        return zeros(module.size(I), module.size(K))
    return module.restriction(K, I)


class LieSheaf(BaseModel):
    """A presheaf of Lie algebras of operators on a presheaf of values, e.g. Θ acting on O.

    `operators[I]` is a basis of the Lie algebra on U_I as matrices on the values at I and
    `tables[I]` holds its commutator constants. `restrictions[(K, I)]` maps the basis on K to the
    basis on I for codimension-one K in I. Over a base R, `orders[I]` records the m-adic order of
    each basis element; without a base every order is 0.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    cover: CoverDatum
    values: CoverModule
    operators: dict[Simplex, tuple[Matrix, ...]]
    tables: dict[Simplex, Table]
    restrictions: dict[tuple[Simplex, Simplex], Matrix] = Field(default_factory=dict)
    orders: dict[Simplex, tuple[int, ...]]
    base: ArtinLocalAlgebra = Field(default_factory=rationals)

    @model_validator(mode="after")
    def _check_sheaf(self) -> "LieSheaf":
        for I, ops in self.operators.items():
            n = self.values.size(I)
            if any(X.shape != (n, n) for X in ops) or len(self.orders.get(I, ())) != len(ops):
                raise ShapeMismatch("operators do not act on the values", simplex=I)
            table = self.tables.get(I, {})
            for a, b in product(range(len(ops)), repeat=2):
                found = zeros(n, n)
                for c, value in table.get((a, b), {}).items():
                    found += value * ops[c]
                if found != ops[a] * ops[b] - ops[b] * ops[a]:
                    raise AxiomFail(
                        "commutator constants do not match the operators", simplex=I, pair=(a, b)
                    )
        for (K, I), matrix in self.restrictions.items():
            rho = _restriction(self.values, K, I)
            if matrix.shape != (len(self.operator(I)), len(self.operator(K))):
                raise ShapeMismatch("restriction has the wrong shape", pair=(K, I))
            for a, X in enumerate(self.operator(K)):
                image = zeros(*rho.shape)
                for b, Y in enumerate(self.operator(I)):
                    image += matrix[b, a] * Y * rho
                if image != rho * X:
                    raise AxiomFail("restriction does not intertwine the actions", pair=(K, I))
        return self

    def operator(self, I: Simplex) -> tuple[Matrix, ...]:
        return self.operators.get(tuple(I), ())

    @cached_property
    def module(self) -> CoverModule:
        return CoverModule(
            opens=self.cover.opens,
            dims={I: len(ops) for I, ops in self.operators.items()},
            restrictions=dict(self.restrictions),
        )


def _restrict_operators(
    source: Sequence[Matrix], target: Sequence[Matrix], rho: Matrix, pair: tuple
) -> Matrix:
    """R with ρ A_a = Σ_b R[b, a] B_b ρ for the bases A on K and B on I."""
    size = rho.rows * rho.cols
    frame = hstack(*[(B * rho).reshape(size, 1) for B in target], rows=size)
    if source and rank(frame) < len(target):
        raise ShapeMismatch("derivations do not restrict uniquely", pair=pair)
    out = zeros(len(target), len(source))
    for a, A in enumerate(source):
        x = solve(frame, (rho * A).reshape(size, 1))
        if x is None:
            raise ShapeMismatch("derivation does not restrict", pair=pair, element=a)
        out[:, a] = x
    return out


def derivation_sheaf(cover: CoverDatum) -> LieSheaf:
    """Θ: Der(O(U_I)) on every simplex, each derivation restricted along every inclusion.

    Raises:
        ShapeMismatch: If some derivation has no unique restriction.
    """
    O = structure_sheaf(cover)
    found = ordered_map(lambda I: derivations(cover.algebras[I]), cover.nerve)
    algebroids = dict(zip(cover.nerve, found))
    operators = {I: tuple(A.anchor) for I, A in algebroids.items()}
    restrictions = {
        (K, I): _restrict_operators(operators[K], operators[I], O.restriction(K, I), (K, I))
        for K, I in cover.restrictions
    }
    theta = LieSheaf(
        cover=cover,
        values=O,
        operators=operators,
        tables={I: dict(A.table) for I, A in algebroids.items()},
        restrictions=restrictions,
        orders={I: (0,) * A.dim for I, A in algebroids.items()},
    )
    logfire.debug("derivation sheaf", dims={"".join(I): A.dim for I, A in algebroids.items()})
    return theta


def relative_sheaf(theta: LieSheaf, R: ArtinLocalAlgebra) -> LieSheaf:
    """Θ ⊗ R over Q acting on O ⊗ R.

    The basis element X_b ⊗ e_c sits at b * dim R + c, with e_c running over the m-adic frame
    of R; values keep the standard basis of R at m * dim R + k.
    """
    frame, orders = R.frame()
    inverse = frame.inv()
    r = R.dim
    elements = [sparse_column(frame, c) for c in range(r)]
    mults = [R.multiplication_operator(e) for e in elements]
    products = {
        (c, e): sparse_column(inverse * column(R.mul(elements[c], elements[e]), r))
        for c, e in product(range(r), repeat=2)
    }
    tables: dict[Simplex, Table] = {}
    for I, table in theta.tables.items():
        out: Table = {}
        for (a, b), image in table.items():
            for c, e in product(range(r), repeat=2):
                value: Vector = {}
                for k, x in image.items():
                    for f, y in products[(c, e)].items():
                        add_into(value, {k * r + f: x * y})
                if value:
                    out[(a * r + c, b * r + e)] = value
        tables[I] = out
    eye = Matrix.eye(r)
    values = CoverModule(
        opens=theta.values.opens,
        dims={I: theta.values.size(I) * r for I in theta.values.nerve},
        restrictions={pair: _kron(m, eye) for pair, m in theta.values.restrictions.items()},
    )
    return LieSheaf(
        cover=theta.cover,
        values=values,
        operators={
            I: tuple(_kron(X, mult) for X in ops for mult in mults)
            for I, ops in theta.operators.items()
        },
        tables=tables,
        restrictions={pair: _kron(m, eye) for pair, m in theta.restrictions.items()},
        orders={
            I: tuple(orders[c] for _ in ops for c in range(r))
            for I, ops in theta.operators.items()
        },
        base=R,
    )


def _by_simplex(family: Mapping[FamilyKey, Any]) -> dict[Simplex, list[tuple[int, FormKey, Any]]]:
    out: dict[Simplex, list[tuple[int, FormKey, Any]]] = {}
    for (I, j, key), value in family.items():
        out.setdefault(I, []).append((j, key, value))
    return out


def family_d(family: Mapping[FamilyKey, Any]) -> Family:
    out: Family = {}
    for (I, j, key), value in family.items():
        for image, c in exact_forms(I).d({key: 1}).items():
            add_into(out, {(I, j, image): c * value})
    return out


def family_bracket(
    x: Mapping[FamilyKey, Any], y: Mapping[FamilyKey, Any], tables: Mapping[Simplex, Table]
) -> Family:
    """[ω ⊗ X, η ⊗ Y] = ω ∧ η ⊗ [X, Y] on every simplex."""
    out: Family = {}
    right = _by_simplex(y)
    for I, terms in _by_simplex(x).items():
        omega, table = exact_forms(I), tables.get(I, {})
        for (a, k1, u), (b, k2, v) in product(terms, right.get(I, [])):
            image = table.get((a, b))
            if not image:
                continue
            for key, w in omega.mul({k1: 1}, {k2: 1}).items():
                for c, t in image.items():
                    add_into(out, {(I, c, key): u * v * w * t})
    return out


def family_act(
    x: Mapping[FamilyKey, Any],
    values: Mapping[FamilyKey, Any],
    operators: Mapping[Simplex, Sequence[Matrix]],
) -> Family:
    """(ω ⊗ X)(η ⊗ f) = ω ∧ η ⊗ X(f) on every simplex."""
    out: Family = {}
    right = _by_simplex(values)
    for I, terms in _by_simplex(x).items():
        omega, ops = exact_forms(I), operators.get(I, ())
        for (a, k1, u), (m, k2, v) in product(terms, right.get(I, [])):
            X = ops[a]
            images = [(r, X[r, m]) for r in range(X.rows) if X[r, m] != 0]
            if not images:
                continue
            for key, w in omega.mul({k1: 1}, {k2: 1}).items():
                for r, t in images:
                    add_into(out, {(I, r, key): u * v * w * t})
    return out


def family_mul(
    x: Mapping[FamilyKey, Any],
    y: Mapping[FamilyKey, Any],
    algebras: Mapping[Simplex, CommutativeAlgebra],
) -> Family:
    out: Family = {}
    right = _by_simplex(y)
    for I, terms in _by_simplex(x).items():
        omega, A = exact_forms(I), algebras[I]
        for (m, k1, u), (n, k2, v) in product(terms, right.get(I, [])):
            image = A.product(m, n)
            if not image:
                continue
            for key, w in omega.mul({k1: 1}, {k2: 1}).items():
                for c, t in image.items():
                    add_into(out, {(I, c, key): u * v * w * t})
    return out


def twisted_d(
    u: Mapping[FamilyKey, Any],
    values: Mapping[FamilyKey, Any],
    operators: Mapping[Simplex, Sequence[Matrix]],
) -> Family:
    """d_u F = dF + u·F."""
    return combine((1, family_d(values)), (1, family_act(u, values, operators)))


def gauge_family(
    sigma: Mapping[FamilyKey, Any],
    values: Mapping[FamilyKey, Any],
    operators: Mapping[Simplex, Sequence[Matrix]],
) -> Family:
    """exp(σ) F for σ of degree 0 with coefficients in m."""
    out, term, k = dict(values), dict(values), 0
    while term:
        k += 1
        term = {key: v / k for key, v in family_act(sigma, term, operators).items()}
        add_into(out, term)
    return out


def derive_family(family: Mapping[FamilyKey, Any], action: Matrix, r: int) -> Family:
    """A derivation of the base applied to the coefficients, given on the m-adic frame."""
    out: Family = {}
    for (I, j, key), value in family.items():
        b, c = divmod(j, r)
        for c2 in range(r):
            if action[c2, c] != 0:
                add_into(out, {(I, b * r + c2, key): action[c2, c] * value})
    return out


def weight(family: Mapping[FamilyKey, Any]) -> int:
    """Largest |a| + |S| over the form keys of a family."""
    return max((sum(a) + len(S) for _, _, (a, S) in family), default=0)


def compatibility_defect(
    family: Mapping[FamilyKey, Any], module: CoverModule
) -> Optional[tuple[Simplex, Simplex]]:
    """First (K, I) where ρ(f_K) differs from the restriction of f_I to the face Δ_K."""
    parts = _by_simplex(family)
    for I in module.nerve:
        for K in combinations(I, len(I) - 1):
            if not K:
                continue
            rho = _restriction(module, K, I)
            restricted: dict = {}
            for j, key, value in parts.get(I, []):
                for k2, w in restrict_form(I, K, {key: value}).items():
                    add_into(restricted, {(j, k2): w})
            pushed: dict = {}
            for m, key, value in parts.get(K, []):
                for r in range(rho.rows):
                    if rho[r, m] != 0:
                        add_into(pushed, {(r, key): rho[r, m] * value})
            if restricted != pushed:
                return K, I
    return None


def _order_piece(theta: LieSheaf, k: int) -> tuple[CoverModule, dict[Simplex, list[int]]]:
    module = theta.module
    picks = {I: [j for j, o in enumerate(theta.orders[I]) if o == k] for I in module.nerve}
    restrictions = {}
    for (K, I), matrix in module.restrictions.items():
        for r, c in product(range(matrix.rows), range(matrix.cols)):
            if matrix[r, c] != 0 and theta.orders[I][r] != theta.orders[K][c]:
                raise ShapeMismatch("restrictions mix m-adic orders", pair=(K, I))
        restrictions[(K, I)] = _block(matrix, picks.get(I, []), picks.get(K, []))
    piece = CoverModule(
        opens=module.opens,
        dims={I: len(p) for I, p in picks.items()},
        restrictions=restrictions,
    )
    return piece, picks


class _Chart(BaseModel):
    """Pivot rows on which the basis families of one degree are invertible."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    index: dict
    members: tuple[int, ...]
    pivots: tuple[int, ...]
    frame: Matrix
    inverse: Matrix


class ResolvedLie(BaseModel):
    """The Thom-Sullivan resolution of a Lie sheaf as a finite dg Lie algebra.

    Ungraded, every compatible family of weight <= `bound` is kept and a bracket leaving that
    window raises WindowOverflow. Graded, only the m-part is kept, order k in weights
    <= k * `bound`.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    sheaf: LieSheaf
    bound: int
    graded: bool = False

    @cached_property
    def basis(self) -> tuple[tuple[int, int, Family], ...]:
        """(degree, order, family) for every basis element, sorted by degree then order."""
        theta = self.sheaf
        orders = sorted({o for I in theta.module.nerve for o in theta.orders[I]})
        found = []
        for k in orders:
            if self.graded and k == 0:
                continue
            piece, picks = _order_piece(theta, k)
            width = k * self.bound if self.graded else self.bound
            Q = thom_sullivan(theta.cover, width, piece)
            space = Q.total.complex.space
            for p in space.degrees:
                kernel = Q.kernel[p]
                for col in range(kernel.cols):
                    family: Family = {}
                    for row in range(kernel.rows):
                        if kernel[row, col] != 0:
                            I, m, key = Q.total.keys[space.flat(p, row)]
                            family[(I, picks[I][m], key)] = kernel[row, col]
                    found.append((p, k, family))
        found.sort(key=lambda item: (item[0], item[1]))
        return tuple(found)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(p for p, _, _ in self.basis)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(k for _, k, _ in self.basis)

    @cached_property
    def space(self) -> GradedSpace:
        components: dict[int, list[str]] = {}
        for p, k, _ in self.basis:
            labels = components.setdefault(p, [])
            labels.append(f"m{k}q{p}_{len(labels)}" if self.graded else f"q{p}_{len(labels)}")
        return GradedSpace(components=components)

    @cached_property
    def charts(self) -> dict[int, _Chart]:
        out = {}
        for p in self.space.degrees:
            members = tuple(i for i, q in enumerate(self.degrees) if q == p)
            keys = list(dict.fromkeys(key for i in members for key in self.basis[i][2]))
            index = {key: row for row, key in enumerate(keys)}
            frame = zeros(len(keys), len(members))
            for col, i in enumerate(members):
                for key, value in self.basis[i][2].items():
                    frame[index[key], col] = value
            _, pivots = rref(frame.T)
            inverse = frame.extract(list(pivots), list(range(len(members)))).inv()
            out[p] = _Chart(
                index=index, members=members, pivots=pivots, frame=frame, inverse=inverse
            )
        return out

    def family(self, vec: Mapping[int, Any]) -> Family:
        out: Family = {}
        for i, value in vec.items():
            add_into(out, self.basis[i][2], value)
        return out

    def coordinates(self, family: Mapping[FamilyKey, Any]) -> Vector:
        """Flat coordinates of a family in the resolved basis.

        Raises:
            WindowOverflow: If the family is not a combination of the basis families.
        """
        grouped: dict[int, dict] = {}
        for key, value in family.items():
            if value != 0:
                grouped.setdefault(len(key[2][1]), {})[key] = value
        out: Vector = {}
        for p, part in sorted(grouped.items()):
            chart = self.charts.get(p)
            outside = [key for key in part if chart is None or key not in chart.index]
            if outside:
                I, _, (a, S) = outside[0]
                raise WindowOverflow(
                    "family leaves the resolved window",
                    simplex="".join(I),
                    degree=p,
                    weight=sum(a) + len(S),
                    bound=self.bound,
                )
            vec = column({chart.index[key]: v for key, v in part.items()}, len(chart.index))
            coords = chart.inverse * vec.extract(list(chart.pivots), [0])
            if chart.frame * coords != vec:
                raise WindowOverflow("family is not compatible within the window", degree=p)
            for a, i in enumerate(chart.members):
                if coords[a, 0] != 0:
                    out[i] = coords[a, 0]
        return out

    @cached_property
    def algebra(self) -> DgLieAlgebra:
        space = self.space
        families = [family for _, _, family in self.basis]
        top = max(space.degrees, default=0)
        exponent = self.sheaf.base.exponent
        with logfire.span("resolved Lie algebra", graded=self.graded, bound=self.bound):
            d = map_from_rule(
                space, space, lambda i: self.coordinates(family_d(families[i])), 1
            )
            constants = []
            for i, j in combinations_with_replacement(range(len(families)), 2):
                if self.degrees[i] + self.degrees[j] > top:
                    continue
                # m^(n+1) = 0
                if self.graded and self.orders[i] + self.orders[j] > exponent:
                    continue
                image = family_bracket(families[i], families[j], self.sheaf.tables)
                for k, c in sorted(self.coordinates(image).items()):
                    constants.append((i, j, k, c))
            g = make_dg_lie(make_complex(space, d), constants)
        logfire.debug("resolved Lie algebra", dims=space.dims(), brackets=len(constants))
        return g

    def order_complex(self, k: int) -> tuple[Complex, list[int]]:
        """The subcomplex of order exactly k, with its flat indices in the algebra."""
        picked = [i for i, o in enumerate(self.orders) if o == k]
        position = {i: a for a, i in enumerate(picked)}
        components: dict[int, list[str]] = {}
        for i in picked:
            components.setdefault(self.degrees[i], []).append(self.space.flat_labels[i])
        space = GradedSpace(components=components)
        L = self.algebra
        d = map_from_rule(
            space, space, lambda a: {position[j]: v for j, v in L.d({picked[a]: 1}).items()}, 1
        )
        return make_complex(space, d), picked


def fitted_bound(theta: LieSheaf, *families: Mapping[FamilyKey, Any]) -> int:
    """Smallest per-order window holding the families, and at least the nerve dimension."""
    bound = max(1, theta.cover.dimension)
    for family in families:
        for (I, j, (a, S)) in family:
            order = theta.orders[I][j]
            if order:
                bound = max(bound, -(-(sum(a) + len(S)) // order))
    return bound


def cech_lie(
    cover: CoverDatum, base: Optional[ArtinLocalAlgebra] = None, bound: Optional[int] = None
) -> DgLieAlgebra:
    """g_𝒰 = 𝒬 ⊗ Θ, or its m-part g_𝒰 ⊗ m over a base, with the dg Lie axioms validated.

    Examples:
        >>> from src.sdk.resolution import constant_cover
        >>> from src.sdk.artin import truncated_polynomial
        >>> cubic = truncated_polynomial(("x",), 2)
        >>> cech_lie(constant_cover(("a",), [("a",)], cubic)).complex.dims()
        {0: 2}
    """
    theta = derivation_sheaf(cover)
    bound = max(1, cover.dimension) if bound is None else bound
    if base is None or base.dim == 1:
        lie = ResolvedLie(sheaf=theta, bound=bound)
    else:
        lie = ResolvedLie(sheaf=relative_sheaf(theta, base), bound=bound, graded=True)
    g = lie.algebra
    logfire.info("Cech Lie algebra", dims=g.complex.dims(), graded=lie.graded, bound=bound)
    return g


class DeformationDatum(BaseModel):
    """A deformation of a cover datum over R, glued by D_αβ = exp(θ_αβ) on double overlaps.

    `gluing[(α, β)]` is θ_αβ in Θ(U_αβ) ⊗ m as a dim Θ × dim R grid on the standard basis of R.
    Missing edges glue by the identity.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    theta: LieSheaf
    base: ArtinLocalAlgebra
    gluing: dict[tuple[str, str], Matrix] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_cocycle(self) -> "DeformationDatum":
        cover = self.theta.cover
        edges = {I for I in cover.nerve if len(I) == 2}
        for edge, grid in self.gluing.items():
            if tuple(edge) not in edges:
                raise ShapeMismatch("gluing along a pair that is not an edge", edge=edge)
            if grid.shape != (len(self.theta.operator(edge)), self.base.dim):
                raise ShapeMismatch("gluing grid has the wrong shape", edge=edge, shape=grid.shape)
            if grid.rows and not (self.base.frame()[0].inv() * grid.T)[0, :].is_zero_matrix:
                raise CocycleFail("gluing does not reduce to the identity mod m", edge=edge)
        for I in cover.nerve:
            if len(I) != 3:
                continue
            a, b, c = I
            composed = self.transition((a, b), I) * self.transition((b, c), I)
            if composed != self.transition((a, c), I):
                raise CocycleFail("D_αβ D_βγ differs from D_αγ", simplex="".join(I))
        return self

    @cached_property
    def relative(self) -> LieSheaf:
        return relative_sheaf(self.theta, self.base)

    def transition(self, edge: Simplex, I: Simplex) -> Matrix:
        """D_edge restricted to U_I, acting on O(U_I) ⊗ R."""
        R = self.base
        size = self.theta.values.size(I) * R.dim
        grid = self.gluing.get(tuple(edge))
        if grid is None:
            return Matrix.eye(size)
        grid = _restriction(self.theta.module, tuple(edge), tuple(I)) * grid
        generator = zeros(size, size)
        for b, k in product(range(grid.rows), range(R.dim)):
            if grid[b, k] != 0:
                generator += grid[b, k] * _kron(self.theta.operator(I)[b], R.left_matrices[k])
        return _exp(generator)


def _solve_sparse(columns: Sequence[Mapping], rhs: Mapping) -> Optional[list]:
    rows = list(dict.fromkeys([key for col in columns for key in col] + list(rhs)))
    index = {key: i for i, key in enumerate(rows)}
    mat = zeros(len(rows), len(columns))
    for j, col in enumerate(columns):
        for key, value in col.items():
            mat[index[key], j] = value
    x = solve(mat, column({index[key]: v for key, v in rhs.items()}, len(rows)))
    return None if x is None else [x[j, 0] for j in range(len(columns))]


def _one_forms(I: Simplex, bound: int) -> list[FormKey]:
    keys = DeRhamAlgebra(indices=I, bound=bound, weighted=True).keys
    return [key for key in keys if len(key[1]) == 1]


def _facet_images(I: Simplex, keys: Sequence[FormKey]) -> list[dict]:
    out = []
    for key in keys:
        image = {}
        for K in combinations(I, len(I) - 1):
            for k2, v in restrict_form(I, K, {key: 1}).items():
                image[(K, k2)] = v
        out.append(image)
    return out


def _extend(
    I: Simplex, targets: Mapping[int, Mapping], start: int, slack: int
) -> Optional[dict[int, Form]]:
    """One-forms on Δ_I with prescribed restrictions to the facets."""
    if not targets:
        return {}
    for bound in range(start, start + slack + 1):
        keys = _one_forms(I, bound)
        columns = _facet_images(I, keys)
        found = {}
        for j, target in targets.items():
            x = _solve_sparse(columns, target)
            if x is None:
                break
            found[j] = {key: c for key, c in zip(keys, x) if c != 0}
        else:
            return found
    return None


def _primitive(
    I: Simplex, forms: Mapping[int, Form], start: int, slack: int
) -> Optional[dict[int, Form]]:
    """One-forms v on Δ_I with dv = -ω and zero restriction to every facet."""
    omega = exact_forms(I)
    for bound in range(start, start + slack + 1):
        keys = _one_forms(I, bound)
        columns = []
        for key, image in zip(keys, _facet_images(I, keys)):
            col = {("d", k2): v for k2, v in omega.d({key: 1}).items()}
            col.update({("r", *k): v for k, v in image.items()})
            columns.append(col)
        found = {}
        for j, form in forms.items():
            x = _solve_sparse(columns, {("d", k2): -v for k2, v in form.items()})
            if x is None:
                break
            found[j] = {key: c for key, c in zip(keys, x) if c != 0}
        else:
            return found
    return None


def _fill(sheaf: LieSheaf, I: Simplex, u: Family, slack: int) -> Family:
    """u on a simplex of dimension >= 2 from its facets, corrected order by order in m."""
    parts = _by_simplex(u)
    targets: dict[int, dict] = {}
    for K in combinations(I, len(I) - 1):
        rho = _restriction(sheaf.module, K, I)
        for j, key, value in parts.get(K, []):
            for r in range(rho.rows):
                if rho[r, j] != 0:
                    add_into(targets.setdefault(r, {}), {(K, key): rho[r, j] * value})
    targets = {j: target for j, target in targets.items() if target}
    start = max((sum(a) + len(S) for t in targets.values() for _, (a, S) in t), default=1)
    extension = _extend(I, targets, start, slack)
    if extension is None:
        raise CocycleFail("boundary values do not extend over the simplex", simplex="".join(I))
    x: Family = {(I, j, key): c for j, form in extension.items() for key, c in form.items()}
    orders = sheaf.orders[I]
    for k in range(1, sheaf.base.exponent + 1):
        defect = combine((1, family_d(x)), (Rational(1, 2), family_bracket(x, x, sheaf.tables)))
        forms: dict[int, Form] = {}
        for (_, j, key), value in defect.items():
            if orders[j] == k:
                forms.setdefault(j, {})[key] = value
        if not forms:
            continue
        start = max(sum(a) + len(S) for form in forms.values() for (a, S) in form)
        fixed = _primitive(I, forms, start, slack)
        if fixed is None:
            raise CocycleFail(
                "curvature has no primitive vanishing on the facets", simplex="".join(I), order=k
            )
        for j, form in fixed.items():
            for key, c in form.items():
                add_into(x, {(I, j, key): c})
    return x


def cocycle_to_mc(datum: DeformationDatum, slack: int = 3) -> Family:
    """The Maurer-Cartan family u = exp(-s) d exp(s) of a glued deformation.

    On an edge αβ, s = t_β θ_αβ and u = θ_αβ dt_β. Higher simplices extend the values on their
    facets and are corrected order by order in m by primitives vanishing on the boundary,
    searching windows up to `slack` above the weight of the data.

    Raises:
        CocycleFail: If boundary values do not extend or a curvature has no primitive.
        NotMaurerCartan: If the assembled family fails d u + 1/2 [u, u] = 0.
    """
    sheaf = datum.relative
    frame, _ = datum.base.frame()
    inverse = frame.inv()
    r = datum.base.dim
    u: Family = {}
    with logfire.span("Maurer-Cartan family", simplices=len(sheaf.module.nerve)):
        for I in sorted(sheaf.module.nerve, key=len):
            if len(I) == 2 and I in datum.gluing:
                coords = inverse * datum.gluing[I].T
                for b, c in product(range(coords.cols), range(r)):
                    if coords[c, b] != 0:
                        u[(I, b * r + c, ((0,), (0,)))] = -coords[c, b]
            elif len(I) > 2:
                add_into(u, _fill(sheaf, I, u, slack))
        failed = compatibility_defect(u, sheaf.module)
        if failed is not None:
            raise CocycleFail("family is not compatible", face=failed[0], simplex=failed[1])
        defect = combine((1, family_d(u)), (Rational(1, 2), family_bracket(u, u, sheaf.tables)))
        if defect:
            (I, j, _), value = next(iter(defect.items()))
            raise NotMaurerCartan(
                "glued family fails the Maurer-Cartan equation", simplex="".join(I), value=value
            )
    logfire.info("Maurer-Cartan family", terms=len(u), weight=weight(u))
    return u


def resolve_datum(
    datum: DeformationDatum, u: Optional[Family] = None
) -> tuple[ResolvedLie, Vector]:
    """The graded m-part sized to hold u, and u in its coordinates."""
    u = cocycle_to_mc(datum) if u is None else u
    sheaf = datum.relative
    lie = ResolvedLie(sheaf=sheaf, bound=fitted_bound(sheaf, u), graded=True)
    return lie, lie.coordinates(u)


def _require_mc(L: DgLieAlgebra, u: Mapping[int, Any]) -> None:
    if not check_mc(L, u):
        defect = mc_defect(L, u)
        raise NotMaurerCartan(
            "element does not solve the Maurer-Cartan equation",
            defect={L.labels[i]: str(v) for i, v in defect.items()},
        )


class DeformationClass(BaseModel):
    """v = Σ_k u^k / k! in the reduced Chevalley complex of the resolved m-part.

    Words whose letters add up to an m-adic order above the exponent of the base are dropped,
    as they vanish in J_n(g) ⊗ m.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    lie: ResolvedLie
    mc: dict[int, Any]
    n: int

    @cached_property
    def chevalley(self) -> ChevalleyComplex:
        return reduced_chevalley(self.lie.algebra, self.n)

    def truncate(self, vec: Mapping[tuple[int, ...], Any]) -> WordVector:
        top = self.lie.sheaf.base.exponent
        orders = self.lie.orders
        return {w: v for w, v in vec.items() if sum(orders[a] for a in w) <= top}

    @cached_property
    def components(self) -> tuple[WordVector, ...]:
        """u^k / k! for k = 1..n."""
        C = self.chevalley
        letter = C.letter(self.mc)
        out, power = [], {(): Rational(1)}
        for k in range(1, self.n + 1):
            power = self.truncate({w: v / k for w, v in C.multiply(power, letter).items()})
            out.append(power)
        return tuple(out)

    @property
    def vector(self) -> WordVector:
        out: WordVector = {}
        for part in self.components:
            add_into(out, part)
        return out

    def defect(self) -> WordVector:
        return self.truncate(self.chevalley.apply_q(self.vector))

    def first_order_class(self) -> Matrix:
        """The class of the order-one part of u in H^1(g_𝒰) ⊗ m/m²."""
        C, picked = self.lie.order_complex(1)
        H = cohomology(C).get(1)
        if H is None:
            return zeros(0, 1)
        local = zeros(C.space.dim(1), 1)
        for a, i in enumerate(picked):
            if i in self.mc:
                p, row = C.space.locate(a)
                if p == 1:
                    local[row, 0] = self.mc[i]
        return H.classify(local)


def deformation_class(
    lie: ResolvedLie, u: Mapping[int, Any], n: Optional[int] = None
) -> DeformationClass:
    """The class of a Maurer-Cartan element in the reduced Chevalley complex, words up to n.

    n defaults to the exponent of the base; below it the top words of Q(v) need not cancel.

    Raises:
        NotMaurerCartan: If u fails the Maurer-Cartan equation or v fails to be a cocycle.
    """
    _require_mc(lie.algebra, u)
    n = lie.sheaf.base.exponent if n is None else n
    v = DeformationClass(lie=lie, mc=dict(u), n=n)
    defect = v.defect()
    if defect:
        word = next(iter(defect))
        raise NotMaurerCartan("v is not a cocycle", word=v.chevalley.label(word))
    logfire.info("deformation class", n=n, words=len(v.vector))
    return v


def _flat_sections(
    cover: CoverDatum,
    module: CoverModule,
    u: Mapping[FamilyKey, Any],
    operators: Mapping[Simplex, Sequence[Matrix]],
    bound: int,
) -> tuple[Family, ...]:
    """Degree-0 families of weight <= bound killed by d_u."""
    Q = thom_sullivan(cover, bound, module)
    space = Q.total.complex.space
    kernel = Q.kernel.get(0)
    if kernel is None or not kernel.cols:
        return ()
    basis = [
        {
            Q.total.keys[space.flat(0, row)]: kernel[row, col]
            for row in range(kernel.rows)
            if kernel[row, col] != 0
        }
        for col in range(kernel.cols)
    ]
    images = {i: twisted_d(u, f, operators) for i, f in enumerate(basis)}
    rows = list(dict.fromkeys(key for image in images.values() for key in image))
    null = nullspace(sparse_matrix(rows, list(images), images))
    sections = []
    for col in range(null.cols):
        section: Family = {}
        for i in range(null.rows):
            if null[i, col] != 0:
                add_into(section, basis[i], null[i, col])
        sections.append(section)
    return tuple(sections)


def _star(
    sheaf: LieSheaf, u: Mapping[FamilyKey, Any], alpha: str
) -> tuple[CoverModule, Family, dict[Simplex, tuple[Matrix, ...]]]:
    """The induced cover {U_α ∩ U_β} of U_α: J carries the values and operators of J ∪ α."""
    values, opens = sheaf.values, sheaf.cover.opens

    def grow(J: Simplex) -> Simplex:
        return tuple(sorted(set(J) | {alpha}, key=opens.index))

    simplices = [
        J
        for k in range(1, len(opens) + 1)
        for J in combinations(opens, k)
        if values.size(grow(J))
    ]
    restrictions = {
        (K, J): _restriction(values, grow(K), grow(J))
        for J in simplices
        for K in combinations(J, len(J) - 1)
        if K
    }
    module = CoverModule(
        opens=opens, dims={J: values.size(grow(J)) for J in simplices}, restrictions=restrictions
    )
    pushed: Family = {}
    for (I, j, key), value in u.items():
        for J in simplices:
            if grow(J) == I:
                for k2, w in restrict_form(I, J, {key: value}).items():
                    add_into(pushed, {(J, j, k2): w})
    operators = {J: sheaf.operator(grow(J)) for J in simplices}
    return module, pushed, operators


class DeformedSheaf(BaseModel):
    """O_n = ker(d_u) on degree-0 families of O ⊗ R, with section counts over each open."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    lie: ResolvedLie
    mc: dict[int, Any]
    bound: int
    sections: tuple[dict, ...]
    local: dict[str, int]

    @property
    def base(self) -> ArtinLocalAlgebra:
        return self.lie.sheaf.base

    @property
    def dim(self) -> int:
        return len(self.sections)

    def global_dim(self) -> int:
        """dim_Q O(X) of the undeformed datum."""
        return betti(cech_complex(self.lie.sheaf.cover).complex).get(0, 0)

    def globally_free(self) -> bool:
        """dim O_n(X) = dim O(X) · dim R; H^1(O) can obstruct it for a locally flat family."""
        return self.dim == self.global_dim() * self.base.dim

    def vertex_values(self) -> Matrix:
        """Columns (f_α) in ⊕_α O(U_α) ⊗ R, opens in cover order."""
        values = self.lie.sheaf.values
        offsets, total = {}, 0
        for alpha in self.lie.sheaf.cover.opens:
            offsets[(alpha,)] = total
            total += values.size((alpha,))
        out = zeros(total, self.dim)
        for col, section in enumerate(self.sections):
            for (I, m, _), value in section.items():
                if len(I) == 1:
                    out[offsets[I] + m, col] = value
        return out

    def algebra_defect(self) -> Optional[tuple[int, int]]:
        """First pair of sections whose product is not flat."""
        sheaf = self.lie.sheaf
        algebras = {I: sheaf.cover.algebras[I].tensor(sheaf.base) for I in sheaf.values.nerve}
        u = self.lie.family(self.mc)
        for i, j in combinations_with_replacement(range(self.dim), 2):
            prod = family_mul(self.sections[i], self.sections[j], algebras)
            if twisted_d(u, prod, sheaf.operators):
                return i, j
        return None


def class_to_deformation(
    lie: ResolvedLie, u: Mapping[int, Any], bound: Optional[int] = None
) -> DeformedSheaf:
    """The sheaf of R-algebras ker(d_u) and its flatness over each open.

    Sections over U_α are computed on the induced cover of U_α and must number
    dim O(U_α) · dim R. `bound` is the weight window for the values, by default
    n · weight(u) with n the exponent of R.

    Raises:
        NotMaurerCartan: If u fails the Maurer-Cartan equation.
        FlatnessFail: If the sections over some open are not free over R.
    """
    _require_mc(lie.algebra, u)
    sheaf = lie.sheaf
    cover, R = sheaf.cover, sheaf.base
    family = lie.family(u)
    if bound is None:
        bound = max(1, cover.dimension, R.exponent * weight(family))
    with logfire.span("deformed sheaf", bound=bound):
        sections = _flat_sections(cover, sheaf.values, family, sheaf.operators, bound)
        local = {}
        for alpha in cover.opens:
            module, pushed, operators = _star(sheaf, family, alpha)
            found = len(_flat_sections(cover, module, pushed, operators, bound))
            expected = sheaf.values.size((alpha,))
            local[alpha] = found
            if found != expected:
                raise FlatnessFail(
                    "sections over an open are not free over the base",
                    open=alpha,
                    found=found,
                    expected=expected,
                )
    deformed = DeformedSheaf(lie=lie, mc=dict(u), bound=bound, sections=sections, local=local)
    logfire.info(
        "deformed sheaf", sections=deformed.dim, free=deformed.globally_free(), local=local
    )
    return deformed


def glued_sections(datum: DeformationDatum) -> Matrix:
    """Columns (f_α) of ⊕_α O(U_α) ⊗ R with f_α = D_αβ f_β on every double overlap."""
    cover, r = datum.theta.cover, datum.base.dim
    O = datum.theta.values
    offsets, total = {}, 0
    for alpha in cover.opens:
        offsets[alpha] = total
        total += O.size((alpha,)) * r
    blocks = []
    eye = Matrix.eye(r)
    for I in cover.nerve:
        if len(I) != 2:
            continue
        a, b = I
        left = _kron(O.restriction((a,), I), eye)
        right = datum.transition(I, I) * _kron(O.restriction((b,), I), eye)
        block = zeros(left.rows, total)
        block[:, offsets[a] : offsets[a] + left.cols] = left
        block[:, offsets[b] : offsets[b] + right.cols] = -right
        blocks.append(block)
    constraints = Matrix.vstack(*blocks) if blocks else zeros(0, total)
    return nullspace(constraints)


def _solve_in_order(
    lie: ResolvedLie, p: int, k: int, target: Mapping[int, Any]
) -> Optional[Vector]:
    """x of degree p and m-adic order k with dx = target, or None."""
    L = lie.algebra
    cols = [i for i in range(L.dim) if lie.degrees[i] == p and lie.orders[i] == k]
    rows = [i for i in range(L.dim) if lie.degrees[i] == p + 1 and lie.orders[i] == k]
    position = {i: a for a, i in enumerate(rows)}
    if any(i not in position for i in target):
        return None
    mat = sparse_matrix(rows, cols, {i: L.d({i: 1}) for i in cols})
    x = solve(mat, column({position[i]: v for i, v in target.items()}, len(rows)))
    if x is None:
        return None
    return {i: x[a, 0] for a, i in enumerate(cols) if x[a, 0] != 0}


def gauge(L: DgLieAlgebra, sigma: Mapping[int, Any], alpha: Mapping[int, Any]) -> Vector:
    """exp(σ)·α = Σ ad_σ^k α / k! - Σ ad_σ^k dσ / (k+1)! in a nilpotent algebra."""
    ad = L.ad(sigma)
    moved = exp_series(ad, column(alpha, L.dim))
    drift = exp_series(ad, column(L.d(sigma), L.dim), shift=1)
    return sparse_column(moved - drift)


class Equivalence(BaseModel):
    """A gauge σ with exp(σ)·u = u', carrying the flat sections of u onto those of u'."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    sigma: dict[int, Any]
    source: DeformedSheaf
    target: DeformedSheaf


def equivalence(
    lie: ResolvedLie, u: Mapping[int, Any], target: Mapping[int, Any]
) -> Optional[Equivalence]:
    """Decides gauge equivalence of two Maurer-Cartan elements of the m-part, order by order.

    At order k the residue target - exp(σ)·u must be d-exact within order k; the canonical
    solution is added to σ. None when some residue is not exact.

    Raises:
        NotMaurerCartan: If either element fails the Maurer-Cartan equation.
        AxiomFail: If the gauge found does not carry flat sections onto flat sections.
    """
    L = lie.algebra
    _require_mc(L, u)
    _require_mc(L, target)
    sigma: Vector = {}
    with logfire.span("gauge search", dim=L.dim):
        for k in range(1, lie.sheaf.base.exponent + 1):
            residue = combine((1, target), (-1, gauge(L, sigma, u)))
            part = {i: v for i, v in residue.items() if lie.orders[i] == k}
            if not part:
                continue
            delta = _solve_in_order(lie, 0, k, {i: -v for i, v in part.items()})
            if delta is None:
                logfire.debug("gauge residue is not exact", order=k)
                return None
            add_into(sigma, delta)
        if combine((1, target), (-1, gauge(L, sigma, u))):
            return None
    source_sheaf = class_to_deformation(lie, u)
    target_sheaf = class_to_deformation(lie, target)
    operators = lie.sheaf.operators
    carried = [gauge_family(lie.family(sigma), f, operators) for f in source_sheaf.sections]
    v = lie.family(target)
    if any(twisted_d(v, f, operators) for f in carried):
        raise AxiomFail("gauge does not carry flat sections to flat sections")
    keys = list(dict.fromkeys(key for f in carried for key in f))
    images = sparse_matrix(keys, list(range(len(carried))), dict(enumerate(carried)))
    if len(carried) != target_sheaf.dim or (carried and rank(images) != len(carried)):
        raise AxiomFail("gauge is not a bijection on flat sections", source=len(carried))
    logfire.info("gauge equivalence", sigma=len(sigma), sections=len(carried))
    return Equivalence(sigma=sigma, source=source_sheaf, target=target_sheaf)


def _representatives(theta: LieSheaf, bound: int) -> tuple[Any, list[Family]]:
    """Thom-Sullivan resolution of Θ in window `bound` with H^1 representatives as families."""
    Q = thom_sullivan(theta.cover, bound, theta.module)
    H = cohomology(Q.complex).get(1)
    if H is None:
        return Q, []
    space = Q.total.complex.space
    kernel = Q.kernel[1]
    out = []
    for col in range(H.dim):
        coords = kernel * H.representatives[:, col]
        out.append(
            {
                Q.total.keys[space.flat(1, row)]: coords[row, 0]
                for row in range(coords.rows)
                if coords[row, 0] != 0
            }
        )
    return Q, out


def _tensor_family(family: Mapping[FamilyKey, Any], coords: Matrix) -> Family:
    """X ⊗ r with r given on the m-adic frame."""
    r = coords.rows
    out: Family = {}
    for (I, b, key), value in family.items():
        for c in range(r):
            if coords[c, 0] != 0:
                add_into(out, {(I, b * r + c, key): value * coords[c, 0]})
    return out


def universal_family(
    cover: CoverDatum, n: int, bound: Optional[int] = None
) -> DeformedSheaf:
    """The flat family over R^u_n = Q[t_1..t_h] / m^(n+1) with h = dim H^1(Θ).

    The tautological first-order element Σ [θ_i] ⊗ t_i is lifted order by order; the lift at
    order k solves dx = -(d u + 1/2 [u, u])_k.

    Raises:
        HypothesisFail: If H^0(Θ) is nonzero or some lift is obstructed.
    """
    theta = derivation_sheaf(cover)
    dims = betti(cech_complex(cover, theta.module).complex)
    if dims.get(0, 0):
        raise HypothesisFail("global derivations do not vanish", h0=dims[0])
    bound = max(1, cover.dimension) if bound is None else bound
    _, reps = _representatives(theta, bound)
    names = tuple(f"t{i + 1}" for i in range(len(reps)))
    R = truncated_polynomial(names, n)
    lie = ResolvedLie(sheaf=relative_sheaf(theta, R), bound=bound, graded=True)
    frame, _ = R.frame()
    inverse = frame.inv()
    first: Family = {}
    for name, rep in zip(names, reps):
        add_into(first, _tensor_family(rep, inverse * column({R.labels.index(name): 1}, R.dim)))
    u = lie.coordinates(first)
    L = lie.algebra
    with logfire.span("universal lift", h1=len(reps), n=n):
        for k in range(2, R.exponent + 1):
            defect = {i: v for i, v in mc_defect(L, u).items() if lie.orders[i] == k}
            if not defect:
                continue
            x = _solve_in_order(lie, 1, k, {i: -v for i, v in defect.items()})
            if x is None:
                raise HypothesisFail("the universal lift is obstructed", order=k)
            add_into(u, x)
    family = class_to_deformation(lie, u)
    logfire.info(
        "universal family", h1=len(reps), n=n, sections=family.dim, free=family.globally_free()
    )
    return family


def _classify(Q: Any, H: Any, family: Mapping[FamilyKey, Any]) -> Matrix:
    space = Q.total.complex.space
    vec = zeros(space.dim(1), 1)
    for key, value in family.items():
        if key not in Q.total.index:
            raise WindowOverflow("class leaves the resolved window", simplex="".join(key[0]))
        vec[space.locate(Q.total.index[key])[1], 0] = value
    coords = solve(Q.kernel[1], vec)
    if coords is None:
        raise WindowOverflow("family is not compatible within the window")
    return H.classify(coords)


def classifying_morphism(
    universal: DeformedSheaf, datum: DeformationDatum
) -> tuple[AlgebraMorphism, Optional[Equivalence]]:
    """α: R^u_n -> R whose pullback of the universal element is gauge equivalent to `datum`.

    Each generator t_i goes to Σ_c [u_c]_i e_c, reading the H^1 coordinates of the m-adic
    components u_c of the Maurer-Cartan family of `datum`; the pullback is then decided by
    `equivalence`.

    Raises:
        ShapeMismatch: If the base of `datum` is deeper than the universal base.
    """
    Ru, R = universal.base, datum.base
    if R.exponent > Ru.exponent:
        raise ShapeMismatch(
            "the base is deeper than the universal family", base=R.exponent, universal=Ru.exponent
        )
    u = cocycle_to_mc(datum)
    Q, reps = _representatives(datum.theta, universal.lie.bound)
    H = cohomology(Q.complex).get(1)
    h, r = len(reps), R.dim
    frame, _ = R.frame()
    images = zeros(r, h)
    for c in range(1, r):
        part = {(I, j // r, key): v for (I, j, key), v in u.items() if j % r == c}
        if part and h:
            coords = _classify(Q, H, part)
            for i in range(h):
                images[:, i] += coords[i, 0] * frame[:, c]
    matrix = zeros(r, Ru.dim)
    for col, e in enumerate(monomial_exponents(h, Ru.exponent)):
        value: Vector = dict(R.unit)
        for i, k in enumerate(e):
            value = R.mul(value, R.power(sparse_column(images, i), k))
        matrix[:, col] = column(value, r)
    alpha = AlgebraMorphism(source=Ru, target=R, matrix=matrix)
    frame_u, _ = Ru.frame()
    inverse = frame.inv()
    pulled: Family = {}
    for (I, j, key), value in universal.lie.family(universal.mc).items():
        b, c_u = divmod(j, Ru.dim)
        image = inverse * (matrix * frame_u[:, c_u])
        for c in range(r):
            if image[c, 0] != 0:
                add_into(pulled, {(I, b * r + c, key): value * image[c, 0]})
    sheaf = datum.relative
    lie = ResolvedLie(sheaf=sheaf, bound=fitted_bound(sheaf, u, pulled), graded=True)
    found = equivalence(lie, lie.coordinates(pulled), lie.coordinates(u))
    logfire.info("classifying morphism", h1=h, equivalent=found is not None)
    return alpha, found


def _placement(L: DgLieAlgebra, extra: int) -> Callable[[int], int]:
    """Flat index of L inside L ⋊ Der R, the derivations appended to degree 0."""
    return lambda i: i if L.degrees[i] == 0 else i + extra


def projectable_lie(lie: ResolvedLie, u: Mapping[int, Any]) -> tuple[DgLieAlgebra, Matrix]:
    """π_* Θ_𝔛 = (L ⋊ Der R) twisted by u, with columns spanning the relative part L.

    L is the ungraded resolution of Θ ⊗ R; a derivation ∂ of R acts on the coefficients and
    derivations bracket by their commutator.
    """
    if lie.graded:
        raise ShapeMismatch("projectable vector fields need the ungraded resolution")
    L, R = lie.algebra, lie.sheaf.base
    D = derivations(R)
    frame, _ = R.frame()
    inverse = frame.inv()
    actions = [inverse * X * frame for X in D.anchor]
    e, zero = D.dim, L.space.dim(0)
    place = _placement(L, e)
    components = {p: list(labels) for p, labels in L.space.components.items()}
    components.setdefault(0, []).extend(f"∂{a}" for a in range(e))
    space = GradedSpace(components=components)
    origin: dict[int, tuple[str, int]] = {place(i): ("L", i) for i in range(L.dim)}
    origin.update({zero + a: ("D", a) for a in range(e)})

    def derive(a: int, i: int) -> Vector:
        image = derive_family(lie.basis[i][2], actions[a], R.dim)
        return {place(k): v for k, v in lie.coordinates(image).items()}

    def bracket(x: int, y: int) -> Vector:
        (sx, i), (sy, j) = origin[x], origin[y]
        if sx == "L" and sy == "L":
            return {place(k): v for k, v in L.bracket({i: 1}, {j: 1}).items()}
        if sx == "D" and sy == "D":
            return {zero + k: v for k, v in D.table.get((i, j), {}).items()}
        if sx == "D":
            return derive(i, j)
        return {k: -v for k, v in derive(j, i).items()}

    def differential(x: int) -> Vector:
        side, i = origin[x]
        return {place(k): v for k, v in L.d({i: 1}).items()} if side == "L" else {}

    d = map_from_rule(space, space, differential, 1)
    constants = [
        (x, y, k, c)
        for x, y in combinations_with_replacement(range(space.total_dim), 2)
        for k, c in sorted(bracket(x, y).items())
    ]
    g = make_dg_lie(make_complex(space, d), constants)
    twisted = twist(g, {place(i): v for i, v in u.items()})
    span = zeros(space.total_dim, L.dim)
    for i in range(L.dim):
        span[place(i), i] = 1
    return twisted, span


def _projectable(
    datum: DeformationDatum, bound: Optional[int]
) -> tuple[ResolvedLie, Family, DgLieAlgebra, Matrix]:
    u = cocycle_to_mc(datum)
    if bound is None:
        bound = max(1, datum.theta.cover.dimension, weight(u))
    lie = ResolvedLie(sheaf=datum.relative, bound=bound)
    g, span = projectable_lie(lie, lie.coordinates(u))
    return lie, u, g, span


class KodairaSpencer(BaseModel):
    """κ^(<=n): U(Der S) -> C(h_u) with the enveloping algebra of Θ_S it is read against."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    morphism: ConnectingMorphism
    enveloping: TwistedEnveloping
    report: DiffReport

    def first_order(self) -> Matrix:
        return self.morphism.first_order()

    def on_cohomology(self) -> dict[int, Matrix]:
        return self.morphism.on_cohomology()

    def is_trivial(self) -> bool:
        """True iff κ factors through the counit."""
        return all(
            not any(value for w, value in image.items() if w)
            for word, image in self.morphism.images.items()
            if word
        )


def higher_ks(datum: DeformationDatum, n: int, bound: Optional[int] = None) -> KodairaSpencer:
    """The higher Kodaira-Spencer morphism of a family over an Artin base S.

    It is the connecting morphism of π_* Θ_{𝔛/S} ⊂ π_* Θ_𝔛 up to words of length n, read next
    to U_S(Θ_S) and Diff^(<=n)(S).

    Raises:
        WindowOverflow: If the ungraded resolution of Θ ⊗ S is not closed under brackets.
    """
    with logfire.span("higher Kodaira-Spencer", n=n):
        _, _, g, span = _projectable(datum, bound)
        c = connecting_morphism(g, span, n)
        U, report = diff_operators(datum.base, n)
    ks = KodairaSpencer(morphism=c, enveloping=U, report=report)
    logfire.info("Kodaira-Spencer map", n=n, trivial=ks.is_trivial(), words=len(c.images))
    return ks


def classical_ks(datum: DeformationDatum, bound: Optional[int] = None) -> dict[int, Matrix]:
    """θ -> [θ(u)]: derivations of S applied to the coefficients of u, classified in H(h_u)."""
    lie, u, g, span = _projectable(datum, bound)
    R = datum.base
    D = derivations(R)
    frame, _ = R.frame()
    inverse = frame.inv()
    actions = [inverse * X * frame for X in D.anchor]
    h, ordered = subalgebra(g, check_ideal(g, span))
    q = quotient_lie(g, span).algebra
    place = _placement(lie.algebra, D.dim)

    def delta(cocycle: Matrix) -> Matrix:
        image: Family = {}
        for a in range(cocycle.rows):
            if cocycle[a, 0] != 0:
                add_into(image, derive_family(u, actions[a], R.dim), cocycle[a, 0])
        coords = lie.coordinates(image)
        return solve(ordered, column({place(i): v for i, v in coords.items()}, g.dim))

    return coboundary_classes(h, q, delta)

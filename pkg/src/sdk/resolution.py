"""Polynomial de Rham forms on simplices, finite cover data, and the Thom-Sullivan resolution.

Ω_I is Q[t_i, dt_i : i in I] / (Σ t_i - 1, Σ dt_i). Forms are written in the normal form that
eliminates the last index of I, so a basis key is (a, S): an exponent vector over the remaining
variables and a sorted tuple of positions for the differentials. Ω_I is infinite-dimensional and
is cut off in one of two ways: by polynomial degree |a| <= D (a subcomplex whose Poincaré lemma
only holds below D), or by weight |a| + |S| <= D (the window, on which it holds exactly).
"""

import sys
from typing import Any, Optional
from functools import lru_cache, cached_property
from itertools import product, combinations
from collections.abc import Iterable, Mapping, Sequence

import logfire
from sympy import Matrix, Rational
from pydantic import Field, BaseModel, ConfigDict, model_validator

from src.sdk.artin import AlgebraMorphism, CommutativeAlgebra, rationals, monomial_label
from src.sdk.graded import (
    ChainMap,
    Complex,
    GradedSpace,
    KeyedComplex,
    Subquotient,
    cone,
    betti,
    tensor,
    subquotient,
    identity_map,
    zero_complex,
    keyed_complex,
    map_from_rule,
    check_chain_map,
)
from src.sdk.linalg import zeros, add_into, nullspace
from src.sdk.runtime import ordered_map
from src.sdk.signs import sort_word, symmetric_rule
from src.types.errors import AxiomFail, ShapeMismatch

FormKey = tuple[tuple[int, ...], tuple[int, ...]]
Form = dict[FormKey, Any]
Simplex = tuple[str, ...]

_WEDGE = symmetric_rule(lambda _: 1)


class DeRhamAlgebra(BaseModel):
    """Ω_I truncated at polynomial degree `bound`, or at weight `bound` when `weighted`."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    indices: tuple[str, ...]
    bound: int
    weighted: bool = False

    @property
    def free(self) -> tuple[str, ...]:
        return self.indices[:-1]

    def allowed(self, key: FormKey) -> bool:
        a, S = key
        return sum(a) + (len(S) if self.weighted else 0) <= self.bound

    @cached_property
    def keys(self) -> tuple[FormKey, ...]:
        r = len(self.free)
        out = []
        for size in range(r + 1):
            for S in combinations(range(r), size):
                for a in product(range(self.bound + 1), repeat=r):
                    if self.allowed((a, S)):
                        out.append((a, S))
        return tuple(out)

    def label(self, key: FormKey) -> str:
        a, S = key
        poly = monomial_label([f"t{i}" for i in self.free], a)
        if not S:
            return poly
        forms = "∧".join(f"dt{self.free[s]}" for s in S)
        return forms if poly == "1" else f"{poly}·{forms}"

    def d(self, form: Mapping[FormKey, Any]) -> Form:
        out: Form = {}
        for (a, S), value in form.items():
            for i, power in enumerate(a):
                if not power:
                    continue
                moved = sort_word((i,) + S, *_WEDGE)
                if moved is None:
                    continue
                lowered = a[:i] + (power - 1,) + a[i + 1 :]
                add_into(out, {(lowered, moved[1]): moved[0] * power * value})
        return out

    def mul(self, x: Mapping[FormKey, Any], y: Mapping[FormKey, Any]) -> Form:
        """Wedge product; terms beyond the truncation are dropped."""
        out: Form = {}
        for ((a, S), u), ((b, T), v) in product(x.items(), y.items()):
            moved = sort_word(S + T, *_WEDGE)
            if moved is None:
                continue
            key = (tuple(i + j for i, j in zip(a, b)), moved[1])
            if self.allowed(key):
                add_into(out, {key: moved[0] * u * v})
        return out

    @property
    def unit(self) -> Form:
        return {((0,) * len(self.free), ()): Rational(1)}

    def variable(self, index: str) -> Form:
        """t_index in normal form; the eliminated variable is 1 - Σ t_free."""
        r = len(self.free)
        if index in self.free:
            i = self.free.index(index)
            return {(tuple(int(j == i) for j in range(r)), ()): Rational(1)}
        if index != self.indices[-1]:
            raise ShapeMismatch("variable outside the simplex", index=index, simplex=self.indices)
        out = dict(self.unit)
        for i in range(r):
            out[(tuple(int(j == i) for j in range(r)), ())] = Rational(-1)
        return out

    def augmentation(self, form: Mapping[FormKey, Any]) -> Any:
        """Value at the vertex of the eliminated index."""
        return form.get(((0,) * len(self.free), ()), 0)

    @cached_property
    def keyed(self) -> KeyedComplex:
        return keyed_complex(
            self.keys,
            degree=lambda key: len(key[1]),
            label=self.label,
            differential=lambda key: self.d({key: 1}),
        )

    @property
    def complex(self) -> Complex:
        return self.keyed.complex


def de_rham(indices: Sequence[str], bound: int, weighted: bool = False) -> DeRhamAlgebra:
    """Ω_I cut off at polynomial degree (or weight) `bound`.

    Examples:
        >>> de_rham(("1", "2"), 1).complex.space.components
        {0: ('1', 't1'), 1: ('dt1', 't1·dt1')}
    """
    if not indices or bound < 0:
        raise ShapeMismatch("de Rham algebras need |I| >= 1 and D >= 0", size=len(indices))
    omega = DeRhamAlgebra(indices=tuple(indices), bound=bound, weighted=weighted)
    logfire.debug("de Rham algebra", indices=omega.indices, dims=omega.complex.dims())
    return omega


def window(omega: DeRhamAlgebra) -> DeRhamAlgebra:
    """The weight window of Ω_I, on which the Poincaré lemma is exact."""
    return de_rham(omega.indices, omega.bound, weighted=True)


def _image(source: DeRhamAlgebra, target: DeRhamAlgebra, key: FormKey) -> Form:
    a, S = key
    value = target.unit
    for index, power in zip(source.free, a):
        generator = target.variable(index) if index in target.indices else {}
        for _ in range(power):
            value = target.mul(value, generator)
    for s in S:
        index = source.free[s]
        generator = target.variable(index) if index in target.indices else {}
        value = target.mul(value, target.d(generator))
    return value


@lru_cache(maxsize=None)
def exact_forms(indices: Simplex) -> DeRhamAlgebra:
    """Ω_I without truncation, for sparse forms; its `keys` must never be enumerated."""
    return DeRhamAlgebra(indices=tuple(indices), bound=sys.maxsize)


def restrict_form(source: Simplex, target: Simplex, form: Mapping[FormKey, Any]) -> Form:
    """Pull a form on Δ_I back to the face Δ_K, K in I, by setting t_i = 0 outside K."""
    if not set(target) <= set(source):
        raise ShapeMismatch("restriction needs K in I", K=target, I=source)
    big, small = exact_forms(tuple(source)), exact_forms(tuple(target))
    out: Form = {}
    for key, value in form.items():
        add_into(out, _image(big, small, key), value)
    return out


def projection(source: DeRhamAlgebra, target: DeRhamAlgebra) -> ChainMap:
    """ψ: Ω_I -> Ω_K for K in I, sending t_i to 0 for i outside K."""
    if not set(target.indices) <= set(source.indices):
        raise ShapeMismatch("projection needs K in I", K=target.indices, I=source.indices)
    if (target.bound, target.weighted) != (source.bound, source.weighted):
        raise ShapeMismatch("projection needs matching truncations")
    keyed = target.keyed
    psi = map_from_rule(
        source.complex.space,
        target.complex.space,
        lambda i: keyed.to_flat(_image(source, target, source.keyed.keys[i])),
    )
    check_chain_map(psi, source.complex, target.complex)
    return psi


def _contract(omega: DeRhamAlgebra, key: FormKey) -> Form:
    """ι_E / weight, with E the Euler field of the free coordinates."""
    a, S = key
    weight = sum(a) + len(S)
    out: Form = {}
    if not weight:
        return out
    for j, s in enumerate(S):
        raised = (a[:s] + (a[s] + 1,) + a[s + 1 :], S[:j] + S[j + 1 :])
        if omega.allowed(raised):
            add_into(out, {raised: Rational((-1) ** j, weight)})
    return out


def poincare_homotopy(omega: DeRhamAlgebra) -> ChainMap:
    """h of degree -1 with dh + hd = id - unit∘augmentation.

    The identity is exact on the weight window and below polynomial degree D otherwise; it is
    checked on that range before h is returned.
    """
    keyed = omega.keyed
    space = omega.complex.space
    h = map_from_rule(space, space, lambda i: keyed.to_flat(_contract(omega, keyed.keys[i])), -1)
    for i, key in enumerate(keyed.keys):
        if not omega.weighted and sum(key[0]) >= omega.bound:
            continue
        lhs: dict = {}
        for j, v in h.apply(i).items():
            add_into(lhs, omega.complex.sparse_d[j], v)
        for j, v in omega.complex.sparse_d[i].items():
            add_into(lhs, h.apply(j), v)
        rhs = {i: Rational(1)}
        if omega.augmentation({key: 1}):
            add_into(rhs, keyed.to_flat(omega.unit), -1)
        if lhs != rhs:
            raise AxiomFail("homotopy identity fails", form=omega.label(key))
    return h


def _chain(K: Simplex, I: Simplex) -> list[Simplex]:
    steps, current = [K], list(K)
    for index in I:
        if index not in current:
            current = sorted(current + [index], key=I.index)
            steps.append(tuple(current))
    return steps


class _Presheaf(BaseModel):
    """Shared bookkeeping for restriction maps along codimension-one inclusions."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    opens: tuple[str, ...]
    restrictions: dict[tuple[Simplex, Simplex], Matrix] = Field(default_factory=dict)

    def size(self, I: Simplex) -> int:
        raise NotImplementedError

    @cached_property
    def nerve(self) -> tuple[Simplex, ...]:
        found = [
            I
            for k in range(1, len(self.opens) + 1)
            for I in combinations(self.opens, k)
            if self.size(I)
        ]
        return tuple(found)

    def restriction(self, K: Simplex, I: Simplex) -> Matrix:
        steps = _chain(K, I)
        out = Matrix.eye(self.size(K))
        for small, big in zip(steps, steps[1:]):
            out = self._step(small, big) * out
        return out

    def _step(self, K: Simplex, I: Simplex) -> Matrix:
        found = self.restrictions.get((K, I))
        if found is None:
            return zeros(self.size(I), self.size(K))
        return found

    def _check_presheaf(self) -> None:
        for (K, I), matrix in self.restrictions.items():
            if len(I) != len(K) + 1 or not set(K) < set(I):
                raise ShapeMismatch("restrictions go along codimension one", pair=(K, I))
            if matrix.shape != (self.size(I), self.size(K)):
                raise ShapeMismatch("restriction has the wrong shape", pair=(K, I))
        for I in self.nerve:
            for i, j in combinations(range(len(I)), 2):
                K = tuple(x for x in I if x not in (I[i], I[j]))
                if not K:
                    continue
                left = tuple(x for x in I if x != I[j])
                right = tuple(x for x in I if x != I[i])
                one = self._step(left, I) * self._step(K, left)
                other = self._step(right, I) * self._step(K, right)
                if one != other:
                    raise AxiomFail("restrictions are not functorial", simplex=I, face=K)


class CoverDatum(_Presheaf):
    """Finite stand-in for an affine cover: an algebra O(U_I) per nonempty I with U_I nonempty.

    `restrictions[(K, I)]` is the matrix of O(U_K) -> O(U_I) for codimension-one K in I; longer
    inclusions compose along the canonical chain.
    """

    algebras: dict[Simplex, CommutativeAlgebra]

    def size(self, I: Simplex) -> int:
        algebra = self.algebras.get(tuple(I))
        return 0 if algebra is None else algebra.dim

    @model_validator(mode="after")
    def _check_cover(self) -> "CoverDatum":
        for I in self.algebras:
            known = all(x in self.opens for x in I)
            ordered = known and list(I) == sorted(I, key=self.opens.index)
            if not I or not ordered:
                raise ShapeMismatch("simplices are sorted nonempty tuples of opens", simplex=I)
        for I in self.nerve:
            for K in combinations(I, len(I) - 1):
                if K and K in self.algebras and (K, I) not in self.restrictions:
                    raise ShapeMismatch("missing restriction", pair=(K, I))
        self._check_presheaf()
        for (K, I), matrix in self.restrictions.items():
            if K not in self.algebras or I not in self.algebras:
                raise ShapeMismatch("restriction between empty opens", pair=(K, I))
            AlgebraMorphism(source=self.algebras[K], target=self.algebras[I], matrix=matrix)
        for I in self.nerve:
            for K in combinations(I, len(I) - 1):
                if K and not self.size(K):
                    raise AxiomFail("nerve is not closed under faces", simplex=I, face=K)
        return self

    @property
    def dimension(self) -> int:
        return max(len(I) for I in self.nerve) - 1


class CoverModule(_Presheaf):
    """A presheaf of finite-dimensional spaces on the nerve, e.g. the structure sheaf."""

    dims: dict[Simplex, int]

    def size(self, I: Simplex) -> int:
        return self.dims.get(tuple(I), 0)

    @model_validator(mode="after")
    def _check_module(self) -> "CoverModule":
        self._check_presheaf()
        return self


def constant_cover(
    opens: Sequence[str],
    simplices: Iterable[Sequence[str]],
    algebra: Optional[CommutativeAlgebra] = None,
) -> CoverDatum:
    """The same algebra on every face of the given simplices, restricting by the identity.

    Examples:
        >>> constant_cover(("a", "b"), [("a", "b")]).nerve
        (('a',), ('b',), ('a', 'b'))
    """
    algebra = rationals() if algebra is None else algebra
    faces: set[Simplex] = set()
    for simplex in simplices:
        ordered = tuple(sorted(simplex, key=list(opens).index))
        for k in range(1, len(ordered) + 1):
            faces.update(combinations(ordered, k))
    restrictions = {
        (K, I): Matrix.eye(algebra.dim)
        for I in faces
        for K in combinations(I, len(I) - 1)
        if K
    }
    return CoverDatum(
        opens=tuple(opens),
        algebras={I: algebra for I in faces},
        restrictions=restrictions,
    )


def structure_sheaf(cover: CoverDatum) -> CoverModule:
    return CoverModule(
        opens=cover.opens,
        dims={I: cover.size(I) for I in cover.nerve},
        restrictions=dict(cover.restrictions),
    )


def cech_complex(cover: CoverDatum, M: Optional[CoverModule] = None) -> KeyedComplex:
    """Alternating Čech complex; keys (I, m) in degree |I| - 1."""
    M = structure_sheaf(cover) if M is None else M
    cofaces: dict[Simplex, list[tuple[Simplex, int]]] = {}
    for I in M.nerve:
        for j in range(len(I)):
            K = I[:j] + I[j + 1 :]
            if K:
                cofaces.setdefault(K, []).append((I, j))

    def differential(key: tuple[Simplex, int]) -> dict:
        K, m = key
        out: dict = {}
        for I, j in cofaces.get(K, []):
            image = M.restriction(K, I)[:, m]
            for r in range(image.rows):
                if image[r, 0] != 0:
                    add_into(out, {(I, r): (-1) ** j * image[r, 0]})
        return out

    keys = [(I, m) for I in M.nerve for m in range(M.size(I))]
    return keyed_complex(
        keys,
        degree=lambda key: len(key[0]) - 1,
        label=lambda key: f"{''.join(key[0])}:{key[1]}",
        differential=differential,
    )


class ThomSullivan(BaseModel):
    """Compatible families (f_I) in ⊕ M(U_I) ⊗ Ω_I, given by kernel columns per degree."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    total: KeyedComplex
    kernel: dict[int, Matrix]
    bound: int

    @cached_property
    def quotient(self) -> Subquotient:
        return subquotient(self.total.complex, self.kernel, {}, name="Q")

    @property
    def complex(self) -> Complex:
        return self.quotient.complex


def thom_sullivan(
    cover: CoverDatum, bound: int, M: Optional[CoverModule] = None
) -> ThomSullivan:
    """𝒬_𝒰 ⊗ M: the kernel of (φ ⊗ id)(f_K) - (id ⊗ ψ)(f_I) for K in I of codimension 1."""
    M = structure_sheaf(cover) if M is None else M
    with logfire.span("Thom-Sullivan complex", simplices=len(M.nerve), bound=bound):
        faces = sorted(
            {K for I in M.nerve for r in range(1, len(I) + 1) for K in combinations(I, r)},
            key=lambda K: (len(K), [M.opens.index(x) for x in K]),
        )
        omegas = dict(zip(faces, ordered_map(lambda I: de_rham(I, bound, weighted=True), faces)))
        keys = [(I, m, k) for I in M.nerve for m in range(M.size(I)) for k in omegas[I].keys]

        def differential(key: tuple) -> dict:
            I, m, k = key
            return {(I, m, k2): v for k2, v in omegas[I].d({k: 1}).items()}

        total = keyed_complex(
            keys,
            degree=lambda key: len(key[2][1]),
            label=lambda key: f"{''.join(key[0])}:{key[1]}:{omegas[key[0]].label(key[2])}",
            differential=differential,
        )
        # rows are (K, I, m, k): the m-th coordinate of M(U_I) against the form k of Ω_K
        entries: dict[int, list[tuple[tuple, int, Any]]] = {}
        for I in M.nerve:
            for K in combinations(I, len(I) - 1):
                if not K:
                    continue
                # a zero stalk on K forces the restriction of f_I to vanish
                rho = M.restriction(K, I) if M.size(K) else zeros(M.size(I), 0)
                for m, k in product(range(M.size(K)), omegas[K].keys):
                    flat = total.index[(K, m, k)]
                    for r in range(rho.rows):
                        if rho[r, m] != 0:
                            row = (K, I, r, k)
                            entries.setdefault(len(k[1]), []).append((row, flat, rho[r, m]))
                for m, k in product(range(M.size(I)), omegas[I].keys):
                    flat = total.index[(I, m, k)]
                    for k2, value in _image(omegas[I], omegas[K], k).items():
                        entries.setdefault(len(k[1]), []).append(((K, I, m, k2), flat, -value))
        space = total.complex.space
        kernel = {}
        for p in space.degrees:
            named: dict[tuple, int] = {}
            for row, _, _ in entries.get(p, []):
                named.setdefault(row, len(named))
            constraint = zeros(len(named), space.dim(p))
            for row, flat, value in entries.get(p, []):
                constraint[named[row], space.locate(flat)[1]] += value
            kernel[p] = nullspace(constraint)
        logfire.debug("compatible families", dims={p: m.cols for p, m in kernel.items()})
    return ThomSullivan(total=total, kernel=kernel, bound=bound)


def global_sections_map(
    cover: CoverDatum, Q: ThomSullivan, M: Optional[CoverModule] = None
) -> ChainMap:
    """Global sections (Čech 0-cocycles) -> 𝒬_𝒰 ⊗ M, g -> (g|U_I ⊗ 1)."""
    M = structure_sheaf(cover) if M is None else M
    C = cech_complex(cover, M)
    space = C.complex.space
    cocycles = nullspace(C.complex.d(0)) if space.dim(1) else Matrix.eye(space.dim(0))
    source = GradedSpace(components={0: tuple(f"g{j}" for j in range(cocycles.cols))})
    total = Q.total
    block = zeros(Q.complex.space.dim(0), cocycles.cols)
    for j in range(cocycles.cols):
        g = {C.keys[space.flat(0, r)]: cocycles[r, j] for r in range(cocycles.rows)}
        vec = zeros(total.complex.space.dim(0), 1)
        for I in M.nerve:
            rho = M.restriction(I[:1], I)
            unit_key = ((0,) * (len(I) - 1), ())
            for (face, m), value in g.items():
                if face != I[:1] or value == 0:
                    continue
                for r in range(rho.rows):
                    if rho[r, m] != 0:
                        flat = total.index[(I, r, unit_key)]
                        vec[total.complex.space.locate(flat)[1], 0] += value * rho[r, m]
        block[:, j] = Q.quotient.project(0, vec)
    target = Q.complex.space
    blocks = {0: block} if cocycles.cols else {}
    return ChainMap(source=source, target=target, degree=0, blocks=blocks)


class DolbeaultReport(BaseModel):
    """Per-condition outcome of the resolution axioms on a finite cover."""

    model_config = ConfigDict(frozen=True)
    bound: int
    thom_sullivan: dict[int, int]
    cech: dict[int, int]
    quasi_iso: bool
    acyclic: bool
    stable: bool

    @property
    def passed(self) -> bool:
        return self.quasi_iso and self.acyclic


def _nonzero(dims: Mapping[int, int]) -> dict[int, int]:
    return {p: d for p, d in sorted(dims.items()) if d}


def dolbeault_check(
    cover: CoverDatum,
    bound: int,
    M: Optional[CoverModule] = None,
    Q: Optional[ThomSullivan] = None,
) -> DolbeaultReport:
    """Compares 𝒬_𝒰 ⊗ M with the Čech complex and checks 𝒬 ⊗ Cone(id) is acyclic."""
    Q = thom_sullivan(cover, bound, M) if Q is None else Q
    ours = _nonzero(betti(Q.complex))
    theirs = _nonzero(betti(cech_complex(cover, M).complex))
    line = zero_complex(GradedSpace(components={0: ("1",)}))
    acyclic_input = cone(identity_map(line.space), line, line).complex
    acyclic = not _nonzero(betti(tensor(Q.complex, acyclic_input).complex))
    stable = _nonzero(betti(thom_sullivan(cover, bound + 1, M).complex)) == ours
    report = DolbeaultReport(
        bound=bound,
        thom_sullivan=ours,
        cech=theirs,
        quasi_iso=ours == theirs,
        acyclic=acyclic,
        stable=stable,
    )
    logfire.info("Dolbeault check", **report.model_dump())
    return report

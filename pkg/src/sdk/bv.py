"""BV structure on truncated Chevalley complexes, L_† actions and rigidity on cohomology.

C(L)_n carries the symmetric product m and the degree 1 bracket c, the biderivation extending
c(sx, sy) = (-1)^|x| s[x, y]. Both are tabulated on basis words, m for pairs of total length
<= n and c for total length <= n + 1, and every identity is checked only on tuples whose
results stay in the window.

Operators of an L_† action raise word length by at most one. They act on C̄_{n+1} and are
validated on words of length <= n; classes of H(C̄_n) are read after the inclusion
C̄_n -> C̄_{n+1}, where the homotopies m_{sx} need no truncation.
"""

from typing import Any, Optional
from functools import partial, cached_property
from itertools import product
from collections.abc import Mapping, Callable

import logfire
from sympy import Matrix
from pydantic import Field, BaseModel, ConfigDict

from src.sdk.ran import FiniteSpace
from src.sdk.signs import koszul
from src.sdk.dg_lie import (
    Vector,
    Quotient,
    IdealCone,
    LieMorphism,
    DgLieAlgebra,
    cone_lie,
    quotient_lie,
    direct_sum_lie,
    direct_sum_index,
)
from src.sdk.graded import ChainMap, CohomologyGroup, cohomology
from src.sdk.linalg import solve, zeros, column, combine, add_into, nullspace, sparse_matrix
from src.sdk.runtime import ordered_map
from src.sdk.chevalley import Word, WordVector, ChevalleyComplex, chevalley, reduced_chevalley
from src.types.errors import (
    AxiomFail,
    NotAModule,
    ShapeMismatch,
    NonScalarAction,
    TrivializationFail,
)

Pair = tuple[Word, Word]


def _bilinear(
    table: Mapping[Pair, WordVector], x: Mapping[Word, Any], y: Mapping[Word, Any]
) -> WordVector:
    out: WordVector = {}
    for (u, a), (v, b) in product(x.items(), y.items()):
        add_into(out, table.get((u, v), {}), a * b)
    return out


class BVAlgebra(BaseModel):
    """A truncated BV algebra on the words of a Chevalley complex.

    `product` and `bracket` hold the nonzero values of m and c on basis pairs inside their
    windows; pairs outside the window multiply to zero.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    complex: ChevalleyComplex
    product: dict[Pair, WordVector] = Field(default_factory=dict)
    bracket: dict[Pair, WordVector] = Field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.complex.n

    @property
    def unital(self) -> bool:
        return not self.complex.reduced

    @property
    def words(self) -> tuple[Word, ...]:
        return self.complex.keyed.keys

    @property
    def truncated(self) -> bool:
        """Some product of two basis words falls outside the window."""
        longest = max((len(w) for w in self.words), default=0)
        return 2 * longest > self.n

    def degree(self, word: Word) -> int:
        return self.complex.degree(word)

    def m(self, x: Mapping[Word, Any], y: Mapping[Word, Any]) -> WordVector:
        return _bilinear(self.product, x, y)

    def c(self, x: Mapping[Word, Any], y: Mapping[Word, Any]) -> WordVector:
        return _bilinear(self.bracket, x, y)

    def d(self, x: Mapping[Word, Any]) -> WordVector:
        return self.complex.apply_q(x)

    def shifted(self, x: Mapping[Word, Any], y: Mapping[Word, Any]) -> WordVector:
        """{x, y}' = (-1)^|x| c(x, y), the Lie bracket of C[-1]."""
        out: WordVector = {}
        for u, a in x.items():
            add_into(out, self.c({u: a}, y), koszul(self.degree(u), 1))
        return out

    def _operator(self, rule: Callable[[Word], WordVector]) -> Matrix:
        return sparse_matrix(self.words, self.words, {w: rule(w) for w in self.words})

    def multiplication(self, x: Mapping[Word, Any]) -> Matrix:
        """m_x on the flat basis of the window."""
        return self._operator(lambda w: self.m(x, {w: 1}))

    def lie_derivative(self, x: Mapping[Word, Any]) -> Matrix:
        """c(x, -) on the flat basis of the window."""
        return self._operator(lambda w: self.c(x, {w: 1}))

    def differential(self) -> Matrix:
        return self._operator(lambda w: self.d({w: 1}))


def _tabulate(C: ChevalleyComplex) -> tuple[dict[Pair, WordVector], dict[Pair, WordVector]]:
    cache: dict[Pair, WordVector] = {}

    def bracket(u: Word, v: Word) -> WordVector:
        if not u or not v:
            return {}
        if (u, v) in cache:
            return cache[(u, v)]
        if len(u) == 1 and len(v) == 1:
            out = C.q2((u[0], v[0]))
        elif len(v) > 1:
            head, rest = v[:1], v[1:]
            sign = koszul(C.degree(u) + 1, C.degree(head))
            out = combine(
                (1, C.multiply(bracket(u, head), {rest: 1})),
                (sign, C.multiply({head: 1}, bracket(u, rest))),
            )
        else:
            out = {w: koszul(C.degree(u), C.degree(v)) * a for w, a in bracket(v, u).items()}
        cache[(u, v)] = out
        return out

    words = C.keyed.keys
    products: dict[Pair, WordVector] = {}
    brackets: dict[Pair, WordVector] = {}
    for u, v in product(words, repeat=2):
        if len(u) + len(v) <= C.n:
            image = C.multiply({u: 1}, {v: 1})
            if image:
                products[(u, v)] = image
        if len(u) + len(v) <= C.n + 1:
            image = bracket(u, v)
            if image:
                brackets[(u, v)] = image
    return products, brackets


class BVReport(BaseModel):
    """Itemized check of a truncated BV algebra; each entry is None or a witness."""

    model_config = ConfigDict(frozen=True)
    n: int
    unital: bool
    truncated: bool
    checks: dict[str, Optional[str]]

    @property
    def passed(self) -> bool:
        return all(witness is None for witness in self.checks.values())

    def failures(self) -> dict[str, str]:
        return {name: witness for name, witness in self.checks.items() if witness is not None}


def _witness(C: BVAlgebra, *words: Word) -> str:
    return ", ".join(C.complex.label(w) for w in words)


def _pairs(C: BVAlgebra, limit: int) -> list[Pair]:
    return [(u, v) for u, v in product(C.words, repeat=2) if len(u) + len(v) <= limit]


def _triples(C: BVAlgebra, limit: int) -> list[tuple[Word, Word, Word]]:
    return [
        (u, v, w)
        for u, v, w in product(C.words, repeat=3)
        if len(u) + len(v) + len(w) <= limit
    ]


def _unit(C: BVAlgebra) -> Optional[str]:
    if not C.unital:
        return None
    for w in C.words:
        if C.m({(): 1}, {w: 1}) != {w: 1} or C.m({w: 1}, {(): 1}) != {w: 1}:
            return _witness(C, w)
    return None


def _commutativity(C: BVAlgebra) -> Optional[str]:
    for u, v in _pairs(C, C.n):
        sign = koszul(C.degree(u), C.degree(v))
        if combine((1, C.m({u: 1}, {v: 1})), (-sign, C.m({v: 1}, {u: 1}))):
            return _witness(C, u, v)
    return None


def _associativity(C: BVAlgebra) -> Optional[str]:
    for u, v, w in _triples(C, C.n):
        left = C.m(C.m({u: 1}, {v: 1}), {w: 1})
        right = C.m({u: 1}, C.m({v: 1}, {w: 1}))
        if combine((1, left), (-1, right)):
            return _witness(C, u, v, w)
    return None


def _bv_relation(C: BVAlgebra) -> Optional[str]:
    """c(a, b) = d(ab) - (da)b - (-1)^|a| a(db)."""
    for u, v in _pairs(C, C.n):
        a, b = {u: 1}, {v: 1}
        expected = combine(
            (1, C.d(C.m(a, b))),
            (-1, C.m(C.d(a), b)),
            (-koszul(C.degree(u), 1), C.m(a, C.d(b))),
        )
        if combine((1, C.c(a, b)), (-1, expected)):
            return _witness(C, u, v)
    return None


def _biderivation(C: BVAlgebra) -> Optional[str]:
    """c(a, bc) = c(a, b)c + (-1)^((|a|+1)|b|) b c(a, c)."""
    for u, v, w in _triples(C, C.n + 1):
        if len(v) + len(w) > C.n:
            continue
        a, b, e = {u: 1}, {v: 1}, {w: 1}
        sign = koszul(C.degree(u) + 1, C.degree(v))
        expected = combine((1, C.m(C.c(a, b), e)), (sign, C.m(b, C.c(a, e))))
        if combine((1, C.c(a, C.m(b, e))), (-1, expected)):
            return _witness(C, u, v, w)
    return None


def _shifted_symmetry(C: BVAlgebra) -> Optional[str]:
    for u, v in _pairs(C, C.n + 1):
        sign = koszul(C.degree(u) + 1, C.degree(v) + 1)
        if combine((1, C.shifted({u: 1}, {v: 1})), (sign, C.shifted({v: 1}, {u: 1}))):
            return _witness(C, u, v)
    return None


def _shifted_jacobi(C: BVAlgebra) -> Optional[str]:
    limit = C.n + 1
    for u, v, w in _triples(C, C.n + 2):
        if len(u) + len(v) > limit or len(v) + len(w) > limit or len(u) + len(w) > limit:
            continue
        a, b, e = {u: 1}, {v: 1}, {w: 1}
        sign = koszul(C.degree(u) + 1, C.degree(v) + 1)
        expected = combine(
            (1, C.shifted(C.shifted(a, b), e)), (sign, C.shifted(b, C.shifted(a, e)))
        )
        if combine((1, C.shifted(a, C.shifted(b, e))), (-1, expected)):
            return _witness(C, u, v, w)
    return None


def _differential(C: BVAlgebra) -> Optional[str]:
    """d is a derivation of { , }' for the degrees of C[-1]."""
    for u, v in _pairs(C, C.n + 1):
        a, b = {u: 1}, {v: 1}
        expected = combine(
            (1, C.shifted(C.d(a), b)), (koszul(C.degree(u) + 1, 1), C.shifted(a, C.d(b)))
        )
        if combine((1, C.d(C.shifted(a, b))), (-1, expected)):
            return _witness(C, u, v)
    return None


def _filtration(C: BVAlgebra) -> Optional[str]:
    """m(F_a, F_b) in F_(a+b) and c(F_a, F_b) in F_(a+b-1) for the word-length filtration."""
    for (u, v), image in C.product.items():
        if any(len(w) > len(u) + len(v) for w in image):
            return _witness(C, u, v)
    for (u, v), image in C.bracket.items():
        if any(len(w) > len(u) + len(v) - 1 for w in image):
            return _witness(C, u, v)
    return None


CHECKS: dict[str, Callable[[BVAlgebra], Optional[str]]] = {
    "unit": _unit,
    "commutativity": _commutativity,
    "associativity": _associativity,
    "BV relation": _bv_relation,
    "biderivation": _biderivation,
    "shifted symmetry": _shifted_symmetry,
    "shifted Jacobi": _shifted_jacobi,
    "differential": _differential,
    "filtration": _filtration,
}


def check_bv(C: BVAlgebra) -> BVReport:
    """Runs every check of `CHECKS` on the window; never raises."""
    names = list(CHECKS)
    with logfire.span("check BV algebra", n=C.n, words=len(C.words)):
        found = ordered_map(lambda name: CHECKS[name](C), names)
    report = BVReport(
        n=C.n, unital=C.unital, truncated=C.truncated, checks=dict(zip(names, found))
    )
    logfire.debug("BV report", failed=sorted(report.failures()))
    return report


def bv_from_complex(C: ChevalleyComplex) -> BVAlgebra:
    """Tabulates m and c on a Chevalley window and validates the result.

    Raises:
        AxiomFail: If some BV identity fails inside the window.
    """
    with logfire.span("BV structure", n=C.n, reduced=C.reduced):
        products, brackets = _tabulate(C)
    algebra = BVAlgebra(complex=C, product=products, bracket=brackets)
    report = check_bv(algebra)
    if not report.passed:
        name, witness = next(iter(report.failures().items()))
        raise AxiomFail(f"{name} fails", witness=witness)
    return algebra


def bv_from_chevalley(L: DgLieAlgebra, n: int, reduced: bool = False) -> BVAlgebra:
    """The BV algebra C(L)_n, or C̄(L)_n when `reduced`.

    Examples:
        >>> from src.sdk.graded import GradedSpace, zero_complex
        >>> line = DgLieAlgebra(complex=zero_complex(GradedSpace(components={0: ("x",)})))
        >>> C = bv_from_chevalley(line, 2)
        >>> C.bracket
        {}
    """
    if n < 1:
        raise ShapeMismatch("BV windows need n >= 1", n=n)
    build = reduced_chevalley if reduced else chevalley
    return bv_from_complex(build(L, n))


def _diagonal(g: DgLieAlgebra, points: int) -> tuple[DgLieAlgebra, Callable[[Vector], Vector]]:
    """⊕_x g over `points` copies and the diagonal embedding of g."""
    family = [g] * points
    index = direct_sum_index(family)

    def embed(vec: Vector) -> Vector:
        out: Vector = {}
        for s in range(points):
            add_into(out, {index[(s, j)]: v for j, v in vec.items()})
        return out

    return direct_sum_lie(family), embed


def _letter(vec: Mapping[int, Any]) -> WordVector:
    return {(i,): v for i, v in vec.items() if v != 0}


class DaggerAction(BaseModel):
    """L_† = Cone(id_L) acting on C̄(⊕_x g)_{n+1}: x by c(sι(x), -) and sx by m_{sι(x)}."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    cone: IdealCone
    bv: BVAlgebra
    n: int
    embedding: Matrix

    @property
    def algebra(self) -> DgLieAlgebra:
        return self.cone.algebra

    def letter(self, x: Mapping[int, Any]) -> WordVector:
        """sι(x) as a word vector of the window."""
        image = self.embedding * column(x, self.embedding.cols)
        return _letter({i: image[i, 0] for i in range(image.rows)})

    @cached_property
    def window(self) -> list[int]:
        return [i for i, w in enumerate(self.bv.words) if len(w) <= self.n]

    @cached_property
    def differential(self) -> Matrix:
        return self.bv.differential()

    @cached_property
    def operators(self) -> tuple[Matrix, ...]:
        out = []
        for side, i in self.cone.keyed.keys:
            if side == "t":
                out.append(self.bv.lie_derivative(self.letter({i: 1})))
            else:
                generator = {k: self.cone.ideal[k, i] for k in range(self.cone.ideal.rows)}
                out.append(self.bv.multiplication(self.letter(generator)))
        return tuple(out)

    def act(self, x: Mapping[int, Any]) -> Matrix:
        size = len(self.bv.words)
        out = zeros(size, size)
        for i, value in x.items():
            out += value * self.operators[i]
        return out

    def restrict(self, matrix: Matrix) -> Matrix:
        return matrix.extract(list(range(matrix.rows)), self.window)

    @cached_property
    def homotopy(self) -> ChainMap:
        """h(x) = sx on L_†, with dh + hd = id."""
        found = self.cone.contracting_homotopy()
        if found is None:
            raise AxiomFail("L_† is the cone of the identity")
        return found

    def check(self) -> "DaggerAction":
        """Validates the dg Lie action on words of length <= n.

        Raises:
            NotAModule: If the action fails to commute with d or to preserve brackets.
        """
        L, D, ops = self.algebra, self.differential, self.operators
        with logfire.span("validate L† action", dim=L.dim, n=self.n):
            for p in range(L.dim):
                commutator = D * ops[p] - koszul(L.degrees[p], 1) * ops[p] * D
                if not self.restrict(commutator - self.act(L.d({p: 1}))).is_zero_matrix:
                    raise NotAModule("action does not commute with d", element=L.labels[p])
            for p, q in product(range(L.dim), repeat=2):
                sign = koszul(L.degrees[p], L.degrees[q])
                commutator = ops[p] * ops[q] - sign * ops[q] * ops[p]
                image = self.act(L.bracket({p: 1}, {q: 1}))
                if not self.restrict(commutator - image).is_zero_matrix:
                    raise NotAModule(
                        "action does not preserve brackets", pair=(L.labels[p], L.labels[q])
                    )
        return self


def dagger_action(
    iota: LieMorphism, n: int, space: Optional[FiniteSpace] = None
) -> DaggerAction:
    """The L_† action on J_n(g) over X through ι: L -> g, on the point model by default.

    Global sections of J_n(g) are C̄(⊕_x g)_n and L acts diagonally.

    Raises:
        ShapeMismatch: If n < 1.
        NotAModule: If the induced operators fail the action axioms.
    """
    if n < 1:
        raise ShapeMismatch("Jacobi windows need n >= 1", n=n)
    points = len(space.points) if space is not None else 1
    L, g = iota.source, iota.target
    total, embed = _diagonal(g, points)
    embedding = zeros(total.dim, L.dim)
    for i in range(L.dim):
        for k, v in embed(iota.apply({i: 1})).items():
            embedding[k, i] = v
    with logfire.span("L† action", n=n, points=points, dim=L.dim):
        action = DaggerAction(
            cone=cone_lie(L, Matrix.eye(L.dim)),
            bv=bv_from_chevalley(total, n + 1, reduced=True),
            n=n,
            embedding=embedding,
        )
        return action.check()


def _classes(L: DgLieAlgebra) -> list[tuple[str, int, Vector]]:
    out = []
    for p, group in cohomology(L.complex).items():
        for k in range(group.dim):
            rep = group.representatives[:, k]
            flat = {L.space.flat(p, r): rep[r, 0] for r in range(rep.rows) if rep[r, 0] != 0}
            out.append((f"H^{p}[{k}]", p, flat))
    return out


def _words(C: ChevalleyComplex, p: int, col: Matrix) -> WordVector:
    space, keys = C.complex.space, C.keyed.keys
    return {keys[space.flat(p, r)]: col[r, 0] for r in range(col.rows) if col[r, 0] != 0}


def _class_of(
    C: ChevalleyComplex, H: Mapping[int, CohomologyGroup], p: int, vec: Mapping[Word, Any]
) -> Matrix:
    group = H.get(p)
    if group is None or not group.dim:
        return zeros(0, 1)
    space = C.complex.space
    local = zeros(space.dim(p), 1)
    for word, value in vec.items():
        q, row = space.locate(C.keyed.index[word])
        if q != p:
            raise ShapeMismatch("vector is not homogeneous", degree=q, expected=p)
        local[row, 0] = value
    return group.classify(local)


def _induced(
    source: ChevalleyComplex,
    target: ChevalleyComplex,
    op: Callable[[WordVector], WordVector],
    degree: int,
    HS: Mapping[int, CohomologyGroup],
    HT: Mapping[int, CohomologyGroup],
) -> dict[int, Matrix]:
    """H^q(source) -> H^(q+degree)(target) for a chain map given on word vectors.

    Raises:
        AxiomFail: If some boundary of the source is sent to a nonzero class.
    """
    out: dict[int, Matrix] = {}
    space = source.complex.space
    for q, group in HS.items():
        if not group.dim:
            continue
        for r in range(space.dim(q - 1)):
            boundary = source.apply_q({source.keyed.keys[space.flat(q - 1, r)]: 1})
            if not _class_of(target, HT, q + degree, op(boundary)).is_zero_matrix:
                raise AxiomFail("induced map depends on the representative", degree=q)
        columns = [
            _class_of(target, HT, q + degree, op(_words(source, q, group.representatives[:, k])))
            for k in range(group.dim)
        ]
        out[q] = Matrix.hstack(*columns)
    return out


def _zero_cycles(L: DgLieAlgebra) -> list[Vector]:
    size = L.space.dim(0)
    if not size:
        return []
    Z = nullspace(L.complex.d(0)) if L.space.dim(1) else Matrix.eye(size)
    return [
        {L.space.flat(0, r): Z[r, k] for r in range(size) if Z[r, k] != 0}
        for k in range(Z.cols)
    ]


class RigidityReport(BaseModel):
    """Induced action of H(L) on H(J_n(g)), read in H(J_{n+1}(g)), with the homotopies m_{sx}."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    n: int
    classes: tuple[str, ...]
    induced: dict[tuple[int, int], Matrix]
    strict: bool
    homotopies: tuple[Matrix, ...]

    @property
    def passed(self) -> bool:
        return all(m.is_zero_matrix for m in self.induced.values())


def rigidity_check(
    iota: LieMorphism, n: int, space: Optional[FiniteSpace] = None
) -> RigidityReport:
    """Checks that H(L) acts by zero on H(J_n(g)) and exhibits ρ(x) = dH_x + H_x d.

    The action of a class is zero after the inclusion into J_{n+1}; `strict` records whether it
    already vanishes on H(J_n).

    Raises:
        TrivializationFail: With the witness class if some induced action is nonzero or a
            homotopy m_{sx} fails.
    """
    action = dagger_action(iota, n, space)
    bv, L = action.bv, iota.source
    source = reduced_chevalley(bv.complex.algebra, n)
    HS, HT = cohomology(source.complex), cohomology(bv.complex.complex)
    induced: dict[tuple[int, int], Matrix] = {}
    strict = True
    classes = _classes(L)
    with logfire.span("rigidity", n=n, classes=len(classes)):
        for index, (label, p, x) in enumerate(classes):
            rho = partial(bv.c, action.letter(x))
            for q, matrix in _induced(source, bv.complex, rho, p, HS, HT).items():
                induced[(index, q)] = matrix
                if not matrix.is_zero_matrix:
                    raise TrivializationFail("induced action is nonzero", cls=label, degree=q)
            in_window = _induced(source, source, rho, p, HS, HS)
            strict = strict and all(m.is_zero_matrix for m in in_window.values())
        homotopies = []
        D = action.differential
        for x in _zero_cycles(L):
            letter = action.letter(x)
            H = bv.multiplication(letter)
            if not action.restrict(D * H + H * D - bv.lie_derivative(letter)).is_zero_matrix:
                raise TrivializationFail("m_sx is not a homotopy", cycle=str(x))
            homotopies.append(action.restrict(H))
    logfire.info("rigidity", classes=len(classes), strict=strict, homotopies=len(homotopies))
    return RigidityReport(
        n=n,
        classes=tuple(label for label, _, _ in classes),
        induced=induced,
        strict=strict,
        homotopies=tuple(homotopies),
    )


def central_quotient(g: DgLieAlgebra, center: Mapping[int, Any]) -> Quotient:
    """h = g/Qz for a central degree-0 cycle z.

    Raises:
        AxiomFail: If z is not a central cycle of degree 0.
    """
    z = {i: v for i, v in center.items() if v != 0}
    if not z or g.degree_of(z) != 0 or g.d(z):
        raise AxiomFail("the center must be a nonzero degree-0 cycle")
    for i in range(g.dim):
        if g.bracket({i: 1}, z):
            raise AxiomFail("extension is not central", element=g.labels[i])
    return quotient_lie(g, column(z, g.dim))


class CharacterReport(BaseModel):
    """ρ(x) = χ(x) m_sz on cohomology for the classes x of H(L), and the homotopies."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    n: int
    classes: tuple[str, ...]
    character: tuple[Any, ...]
    induced: dict[tuple[int, int], Matrix]
    multiplication: dict[int, Matrix]
    homotopies: tuple[Matrix, ...]

    @property
    def is_trivial(self) -> bool:
        return all(value == 0 for value in self.character)


def rigidity_character(
    g: DgLieAlgebra,
    center: Mapping[int, Any],
    iota_bar: LieMorphism,
    n: int,
    space: Optional[FiniteSpace] = None,
) -> CharacterReport:
    """The character of H(L) acting on H(J_n(g)) for a central extension 0 -> Qz -> g -> h -> 0.

    x acts through a lift y = σῑ(x) with dy = χ(x) z, so [d, m_sy] = ρ(x) - χ(x) m_sz and the
    induced action is χ(x) times multiplication by sz, read in H(J_{n+1}).

    Raises:
        ShapeMismatch: If ῑ does not land in g/Qz or n < 1.
        AxiomFail: If the extension is not central.
        NonScalarAction: With the witness class if the action is not χ(x) m_sz on cohomology
            or χ does not vanish on brackets.
    """
    if n < 1:
        raise ShapeMismatch("Jacobi windows need n >= 1", n=n)
    quotient = central_quotient(g, center)
    L, h = iota_bar.source, quotient.algebra
    if iota_bar.target.dim != h.dim or iota_bar.target.degrees != h.degrees:
        raise ShapeMismatch("ῑ must land in g/O", target=iota_bar.target.dim, quotient=h.dim)
    points = len(space.points) if space is not None else 1
    total, embed = _diagonal(g, points)
    bv = bv_from_chevalley(total, n + 1, reduced=True)
    source = reduced_chevalley(total, n)
    HS, HT = cohomology(source.complex), cohomology(bv.complex.complex)
    z = column(center, g.dim)

    def lift(x: Vector) -> Vector:
        image = quotient.section * column(iota_bar.apply(x), h.dim)
        return {i: image[i, 0] for i in range(g.dim) if image[i, 0] != 0}

    def chi(x: Vector) -> Any:
        found = solve(z, column(g.d(lift(x)), g.dim))
        if found is None:
            raise NonScalarAction("dσῑ(x) leaves the center", element=str(x))
        return found[0, 0]

    sz = _letter(embed(dict(center)))
    if not bv.lie_derivative(sz).is_zero_matrix:
        raise AxiomFail("sz acts by a nonzero Lie derivative")
    window = [i for i, w in enumerate(bv.words) if len(w) <= n]
    D, M = bv.differential(), bv.multiplication(sz)
    if not (D * M + M * D).extract(list(range(M.rows)), window).is_zero_matrix:
        raise AxiomFail("multiplication by sz is not a chain map")
    multiplication = _induced(source, bv.complex, partial(bv.m, sz), -1, HS, HT)
    classes = _classes(L)
    character, homotopies = [], []
    induced: dict[tuple[int, int], Matrix] = {}
    with logfire.span("rigidity character", n=n, classes=len(classes)):
        for index, (label, p, x) in enumerate(classes):
            value = chi(x)
            character.append(value)
            letter = _letter(embed(lift(x)))
            acted = _induced(source, bv.complex, partial(bv.c, letter), p, HS, HT)
            for q, matrix in acted.items():
                induced[(index, q)] = matrix
                expected = value * multiplication[q] if p == -1 else zeros(*matrix.shape)
                if matrix != expected:
                    raise NonScalarAction("action is not the character", cls=label, degree=q)
            H = bv.multiplication(letter)
            rho = bv.lie_derivative(letter) - value * M
            commutator = D * H - koszul(p - 1, 1) * H * D
            if not (commutator - rho).extract(list(range(H.rows)), window).is_zero_matrix:
                raise NonScalarAction("m_sy is not a homotopy", cls=label)
            homotopies.append(H.extract(list(range(H.rows)), window))
        for (a, p, x), (b, q, y) in product(classes, repeat=2):
            if p + q == -1 and chi(L.bracket(x, y)) != 0:
                raise NonScalarAction("character does not vanish on brackets", pair=(a, b))
    logfire.info("rigidity character", character=[str(v) for v in character])
    return CharacterReport(
        n=n,
        classes=tuple(label for label, _, _ in classes),
        character=tuple(character),
        induced=induced,
        multiplication=multiplication,
        homotopies=tuple(homotopies),
    )

"""Truncated enveloping algebras and the connecting morphism U(g/h) -> C(h) of a dg Lie ideal.

U(L) is kept on ordered PBW monomials, which are the sorted words of the symmetric coalgebra on
unshifted letters; in that basis the coproduct is the unshuffle coproduct of `WordCoalgebra`.
"""

from typing import Any, Optional
from functools import cached_property
from itertools import product, permutations
from collections.abc import Callable, Mapping, Sequence

import logfire
from sympy import Matrix, Rational, factorial
from pydantic import BaseModel, ConfigDict

from src.sdk.signs import koszul, permutation_sign
from src.sdk.linalg import rank, solve, zeros, column, add_into, combine, sparse_column
from src.sdk.dg_lie import (
    Quotient,
    IdealCone,
    DgLieAlgebra,
    cone_lie,
    subalgebra,
    check_ideal,
    quotient_lie,
)
from src.sdk.graded import (
    ChainMap,
    Complex,
    KeyedComplex,
    cohomology,
    is_quasi_iso,
    keyed_complex,
    map_from_rule,
    check_chain_map,
)
from src.sdk.chevalley import (
    Word,
    WordVector,
    WordCoalgebra,
    ChevalleyComplex,
    chevalley,
    twisting_defect,
    cofree_extension,
    coassociativity_defect,
    cocommutativity_defect,
)
from src.types.errors import (
    AxiomFail,
    FactorFail,
    ShapeMismatch,
    NotMaurerCartan,
    NotCoalgebraMorphism,
)


def symmetric_differential(
    coalgebra: WordCoalgebra, C: Complex
) -> Callable[[Word], WordVector]:
    """d on Sym(C) extended from the letters as a derivation."""

    def d(word: Word) -> WordVector:
        out: WordVector = {}
        passed = 0
        for i, x in enumerate(word):
            for k, c in C.sparse_d[x].items():
                moved = coalgebra.normalize(word[:i] + (k,) + word[i + 1 :])
                if moved is not None:
                    add_into(out, {moved[1]: koszul(passed, 1) * moved[0] * c})
            passed += coalgebra.letter_degrees[x]
        return out

    return d


def symmetric_complex(coalgebra: WordCoalgebra, C: Complex) -> KeyedComplex:
    return keyed_complex(
        coalgebra.words,
        coalgebra.degree,
        coalgebra.label,
        symmetric_differential(coalgebra, C),
    )


class EnvelopingTrunc(BaseModel):
    """U(L) up to monomials of length `bound`.

    Products are brought back to sorted monomials with xy = (-1)^(|x||y|) yx + [x, y] and
    xx = [x, x] / 2 for odd x; products longer than `bound` are not formed.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    algebra: DgLieAlgebra
    bound: int

    @cached_property
    def coalgebra(self) -> WordCoalgebra:
        L = self.algebra
        return WordCoalgebra(letter_degrees=L.degrees, letter_labels=L.labels, n=self.bound)

    @property
    def words(self) -> tuple[Word, ...]:
        return self.coalgebra.words

    @cached_property
    def straightened(self) -> dict[Word, WordVector]:
        return {}

    def straighten(self, word: Sequence[int]) -> WordVector:
        """The PBW coordinates of an arbitrary tensor word."""
        word = tuple(word)
        found = self.straightened.get(word)
        if found is not None:
            return found
        L = self.algebra
        out: WordVector = {}
        for i in range(len(word) - 1):
            x, y = word[i], word[i + 1]
            if x > y or (x == y and L.degrees[x] % 2):
                break
        else:
            self.straightened[word] = {word: Rational(1)}
            return self.straightened[word]
        head, tail = word[:i], word[i + 2 :]
        if x == y:
            for k, c in L.table.get((x, x), {}).items():
                add_into(out, self.straighten(head + (k,) + tail), c * Rational(1, 2))
        else:
            swap = koszul(L.degrees[x], L.degrees[y])
            add_into(out, self.straighten(head + (y, x) + tail), swap)
            for k, c in L.table.get((x, y), {}).items():
                add_into(out, self.straighten(head + (k,) + tail), c)
        self.straightened[word] = out
        return out

    def multiply(self, left: Mapping[Word, Any], right: Mapping[Word, Any]) -> WordVector:
        out: WordVector = {}
        for (u, a), (v, b) in product(left.items(), right.items()):
            if len(u) + len(v) <= self.bound:
                add_into(out, self.straighten(u + v), a * b)
        return out

    def d(self, word: Word) -> WordVector:
        L = self.algebra
        out: WordVector = {}
        passed = 0
        for i, x in enumerate(word):
            for k, c in L.complex.sparse_d[x].items():
                moved = self.straighten(word[:i] + (k,) + word[i + 1 :])
                add_into(out, moved, koszul(passed, 1) * c)
            passed += L.degrees[x]
        return out

    def coproduct(self, word: Word) -> dict[tuple[Word, Word], Any]:
        return self.coalgebra.coproduct(word)

    @cached_property
    def keyed(self) -> KeyedComplex:
        return keyed_complex(self.words, self.coalgebra.degree, self.coalgebra.label, self.d)

    @property
    def complex(self) -> Complex:
        return self.keyed.complex

    def filtration_dims(self) -> list[int]:
        """dim F_k for k = 0..bound."""
        return [sum(1 for w in self.words if len(w) <= k) for k in range(self.bound + 1)]

    def free_quotient_dim(self) -> int:
        """dim of T^(<=bound)(L) modulo the enveloping relations, computed without PBW."""
        L = self.algebra
        tensors = [w for k in range(self.bound + 1) for w in product(range(L.dim), repeat=k)]
        index = {w: i for i, w in enumerate(tensors)}
        relations = []
        for k in range(2, self.bound + 1):
            for w in product(range(L.dim), repeat=k):
                for i in range(k - 1):
                    x, y = w[i], w[i + 1]
                    head, tail = w[:i], w[i + 2 :]
                    rel = {index[w]: Rational(1)}
                    swap = koszul(L.degrees[x], L.degrees[y])
                    add_into(rel, {index[head + (y, x) + tail]: -swap})
                    for c_index, c in L.table.get((x, y), {}).items():
                        add_into(rel, {index[head + (c_index,) + tail]: -c})
                    if rel:
                        relations.append(rel)
        if not relations:
            return len(tensors)
        mat = zeros(len(tensors), len(relations))
        for j, rel in enumerate(relations):
            for i, value in rel.items():
                mat[i, j] = value
        return len(tensors) - rank(mat)

    def symmetrize(self, word: Word) -> WordVector:
        """x_1...x_k -> 1/k! Σ_σ ± x_σ(1)...x_σ(k) in PBW coordinates."""
        parities = self.coalgebra.parities(word)
        out: WordVector = {}
        for order in permutations(range(len(word))):
            sign = permutation_sign(parities, order)
            add_into(out, self.straighten(tuple(word[i] for i in order)), sign)
        return {w: v / factorial(len(word)) for w, v in out.items()}

    @cached_property
    def symmetrization(self) -> ChainMap:
        """Sym(L) -> U(L) as a map of complexes on the shared word basis."""
        source = symmetric_complex(self.coalgebra, self.algebra.complex)
        index = self.keyed.index
        return map_from_rule(
            source.complex.space,
            self.complex.space,
            lambda i: {index[w]: v for w, v in self.symmetrize(source.keys[i]).items()},
        )

    def desymmetrize(self, vec: Mapping[Word, Any]) -> WordVector:
        """Inverse of the symmetrization on PBW vectors."""
        matrix = self.symmetrization.flat_matrix()
        index = self.keyed.index
        coords = solve(matrix, column({index[w]: v for w, v in vec.items()}, len(self.words)))
        source = symmetric_complex(self.coalgebra, self.algebra.complex)
        return {source.keys[i]: coords[i, 0] for i in range(coords.rows) if coords[i, 0] != 0}

    def check(self) -> "EnvelopingTrunc":
        with logfire.span("validate enveloping algebra", bound=self.bound, dim=len(self.words)):
            found = self.free_quotient_dim()
            if found != len(self.words):
                raise AxiomFail("PBW count differs from Sym", quotient=found, sym=len(self.words))
            for name, defect in (
                ("coassociative", coassociativity_defect(self.coalgebra)),
                ("cocommutative", cocommutativity_defect(self.coalgebra)),
            ):
                if defect is not None:
                    raise AxiomFail(f"coproduct is not {name}", word=self.coalgebra.label(defect))
            source = symmetric_complex(self.coalgebra, self.algebra.complex)
            check_chain_map(self.symmetrization, source.complex, self.complex)
            for word in self.words:
                left: dict = {}
                for w, a in self.symmetrize(word).items():
                    add_into(left, self.coproduct(w), a)
                right: dict = {}
                for (u, v), a in self.coproduct(word).items():
                    for (u2, b), (v2, c) in product(
                        self.symmetrize(u).items(), self.symmetrize(v).items()
                    ):
                        add_into(right, {(u2, v2): a * b * c})
                if combine((1, left), (-1, right)):
                    raise AxiomFail(
                        "symmetrization is not a coalgebra map", word=self.coalgebra.label(word)
                    )
        return self


def enveloping(L: DgLieAlgebra, N: int) -> EnvelopingTrunc:
    """U(L) with words of length <= N, validated against the free quotient.

    Examples:
        >>> from src.sdk.graded import GradedSpace, zero_complex
        >>> abelian = DgLieAlgebra(complex=zero_complex(GradedSpace(components={0: ("x",)})))
        >>> enveloping(abelian, 3).filtration_dims()
        [1, 2, 3, 4]
    """
    if N < 0:
        raise ShapeMismatch("truncation must be non-negative", N=N)
    return EnvelopingTrunc(algebra=L, bound=N).check()


class ConnectingTilde(BaseModel):
    """c̃: T(C) -> h[1] on tensor words of Cone(h -> g).

    c̃ vanishes on T^0, is the projection ψ(x, y) = x on T^1 and
    c̃(xu) = (-1)^|x| [π(x), c̃(u)] with π(x, y) = y.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    cone: IdealCone
    bound: int

    @property
    def algebra(self) -> DgLieAlgebra:
        return self.cone.algebra

    @cached_property
    def ideal(self) -> DgLieAlgebra:
        return subalgebra(self.cone.parent, self.cone.ideal)[0]

    @cached_property
    def values(self) -> dict[Word, dict[int, Any]]:
        return {(): {}}

    def to_ideal(self, vec: Mapping[int, Any]) -> dict[int, Any]:
        basis = self.cone.ideal
        if not vec:
            return {}
        coords = solve(basis, column(vec, basis.rows))
        return {a: coords[a, 0] for a in range(coords.rows) if coords[a, 0] != 0}

    def __call__(self, word: Sequence[int]) -> dict[int, Any]:
        word = tuple(word)
        found = self.values.get(word)
        if found is not None:
            return found
        side, i = self.cone.keyed.keys[word[0]]
        if len(word) == 1:
            value = {i: Rational(1)} if side == "s" else {}
        elif side == "s":
            value = {}
        else:
            rest = self(word[1:])
            inside: dict = {}
            for a, c in rest.items():
                add_into(inside, sparse_column(self.cone.ideal, a), c)
            image = self.cone.parent.bracket({i: 1}, inside)
            sign = koszul(self.algebra.degrees[word[0]], 1)
            value = {a: sign * c for a, c in self.to_ideal(image).items()}
        self.values[word] = value
        return value

    def factor_defect(self) -> Optional[Word]:
        """First tensor word xyv where c̃ does not kill xy - ±yx - [x, y] (followed by v)."""
        C = self.algebra
        for k in range(self.bound - 1):
            for x, y in product(range(C.dim), repeat=2):
                for tail in product(range(C.dim), repeat=k):
                    value = dict(self((x, y) + tail))
                    add_into(value, self((y, x) + tail), -koszul(C.degrees[x], C.degrees[y]))
                    for c_index, c in C.table.get((x, y), {}).items():
                        add_into(value, self((c_index,) + tail), -c)
                    if value:
                        return (x, y) + tail
        return None

    @cached_property
    def symmetric(self) -> WordCoalgebra:
        C = self.algebra
        return WordCoalgebra(letter_degrees=C.degrees, letter_labels=C.labels, n=self.bound)

    @cached_property
    def twisting(self) -> dict[Word, dict[int, Any]]:
        """c̃ transported to Sym(C) along the symmetrization."""
        out: dict[Word, dict[int, Any]] = {}
        for word in self.symmetric.words:
            parities = self.symmetric.parities(word)
            value: dict = {}
            for order in permutations(range(len(word))):
                sign = permutation_sign(parities, order)
                add_into(value, self(tuple(word[i] for i in order)), sign)
            if value:
                out[word] = {a: v / factorial(len(word)) for a, v in value.items()}
        return out

    @cached_property
    def chevalley(self) -> ChevalleyComplex:
        return chevalley(self.ideal, self.bound)


def connecting_tilde(g: DgLieAlgebra, span: Matrix, N: int) -> ConnectingTilde:
    """c̃ for the ideal spanned by `span`, checked to factor through U(C) and to be twisting.

    Raises:
        NotAnIdeal: If `span` is not a d-stable bracket ideal.
        FactorFail: With the first tensor word where the enveloping relation survives.
        NotMaurerCartan: If the transported map fails the twisting equation.
    """
    if N < 1:
        raise ShapeMismatch("connecting morphisms need N >= 1", N=N)
    with logfire.span("connecting tilde", N=N):
        tilde = ConnectingTilde(cone=cone_lie(g, span), bound=N)
        defect = tilde.factor_defect()
        if defect is not None:
            labels = [tilde.algebra.labels[i] for i in defect]
            raise FactorFail("c̃ does not factor through U(C)", word="·".join(labels))
        d = symmetric_differential(tilde.symmetric, tilde.algebra.complex)
        failed = twisting_defect(tilde.symmetric, tilde.chevalley, tilde.twisting, d)
        if failed:
            word = next(iter(failed))
            raise NotMaurerCartan("c̃ is not twisting", word=tilde.symmetric.label(word))
    return tilde


class ConnectingMorphism(BaseModel):
    """c: U(g/h) -> C(h) on Sym(g/h) words, through the section s: g/h -> C."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    tilde: ConnectingTilde
    quotient: Quotient
    source: WordCoalgebra
    images: dict[Word, WordVector]
    section: dict[int, dict[int, Any]]
    transport_quasi_iso: bool

    @property
    def target(self) -> ChevalleyComplex:
        return self.tilde.chevalley

    def apply(self, vec: Mapping[Word, Any]) -> WordVector:
        out: WordVector = {}
        for word, value in vec.items():
            add_into(out, self.images.get(word, {}), value)
        return out

    def first_order(self) -> Matrix:
        """c¹: g/h -> h[1] as a matrix on flat bases."""
        h, q = self.tilde.ideal, self.quotient.algebra
        out = zeros(h.dim, q.dim)
        for a in range(q.dim):
            for w, value in self.images.get((a,), {}).items():
                if len(w) == 1:
                    out[w[0], a] = value
        return out

    def on_cohomology(self) -> dict[int, Matrix]:
        """H^p(g/h) -> H^(p+1)(h) induced by c¹, in representative coordinates."""
        first = self.first_order()
        h, q = self.tilde.ideal, self.quotient.algebra
        return coboundary_classes(h, q, lambda vec: first * vec)

    def coproduct_defect(self, length: Optional[int] = None) -> Optional[Word]:
        """First source word (of at most `length` letters) where Δ∘c and (c⊗c)∘Δ differ."""
        target = self.target
        for word in self.source.words:
            if length is not None and len(word) > length:
                continue
            pushed: dict = {}
            for (u, v), a in self.source.coproduct(word).items():
                for (u2, b), (v2, c) in product(
                    self.apply({u: 1}).items(), self.apply({v: 1}).items()
                ):
                    add_into(pushed, {(u2, v2): a * b * c})
            image = self.images.get(word, {})
            if combine((1, target.vector_coproduct(image)), (-1, pushed)):
                return word
        return None

    def check(self) -> "ConnectingMorphism":
        d = symmetric_differential(self.source, self.quotient.algebra.complex)
        target = self.target
        for word in self.source.words:
            image = self.images.get(word, {})
            label = self.source.label(word)
            if any(target.degree(w) != self.source.degree(word) for w in image):
                raise NotCoalgebraMorphism("map does not have degree 0", word=label)
            if combine((1, target.apply_q(image)), (-1, self.apply(d(word)))):
                raise NotCoalgebraMorphism(
                    "map does not commute with the differentials", word=label
                )
        found = self.coproduct_defect()
        if found is not None:
            raise NotCoalgebraMorphism(
                "map does not commute with the coproducts", word=self.source.label(found)
            )
        return self


def _section(tilde: ConnectingTilde, Q: Quotient) -> dict[int, dict[int, Any]]:
    """s(ȳ) = (σ(dȳ) - dσ(ȳ), σ(ȳ)) in cone coordinates."""
    g, q = tilde.cone.parent, Q.algebra
    index = tilde.cone.keyed.index
    out = {}
    for a in range(q.dim):
        lifted = sparse_column(Q.section, a)
        defect = sparse_column(Q.section * column(q.d({a: 1}), q.dim))
        add_into(defect, g.d(lifted), -1)
        value = {index[("s", b)]: c for b, c in tilde.to_ideal(defect).items()}
        for i, c in lifted.items():
            add_into(value, {index[("t", i)]: c})
        out[a] = value
    return out


def connecting_morphism(g: DgLieAlgebra, span: Matrix, N: int) -> ConnectingMorphism:
    """The connecting morphism of h ⊂ g up to words of length N.

    Examples:
        >>> from sympy import Matrix
        >>> from src.sdk.graded import GradedSpace, ChainMap, make_complex
        >>> space = GradedSpace(components={0: ("u",), 1: ("w",)})
        >>> d = ChainMap(source=space, target=space, degree=1, blocks={0: Matrix([[1]])})
        >>> g = DgLieAlgebra(complex=make_complex(space, d))
        >>> connecting_morphism(g, Matrix([[0], [1]]), 1).first_order()
        Matrix([[-1]])
    """
    tilde = connecting_tilde(g, span, N)
    Q = quotient_lie(g, span)
    q = Q.algebra
    source = WordCoalgebra(letter_degrees=q.degrees, letter_labels=q.labels, n=N)
    section = _section(tilde, Q)
    symmetric = tilde.symmetric
    transported: dict[Word, WordVector] = {}
    for word in source.words:
        image: WordVector = {(): 1}
        for letter in word:
            image = symmetric.multiply(image, {(i,): c for i, c in section[letter].items()})
        transported[word] = image
    sym_q = symmetric_complex(source, q.complex)
    sym_c = symmetric_complex(symmetric, tilde.algebra.complex)
    transport = map_from_rule(
        sym_q.complex.space,
        sym_c.complex.space,
        lambda i: {sym_c.index[w]: v for w, v in transported[sym_q.keys[i]].items()},
    )
    images = {}
    for word, image in transported.items():
        out: WordVector = {}
        for w, value in image.items():
            add_into(out, cofree_extension(symmetric, tilde.chevalley, tilde.twisting, w), value)
        images[word] = out
    c = ConnectingMorphism(
        tilde=tilde,
        quotient=Q,
        source=source,
        images=images,
        section=section,
        transport_quasi_iso=is_quasi_iso(transport, sym_q.complex, sym_c.complex),
    ).check()
    logfire.info("connecting morphism", N=N, words=len(images), quasi_iso=c.transport_quasi_iso)
    return c


def coboundary_classes(
    h: DgLieAlgebra, q: DgLieAlgebra, delta: Callable[[Matrix], Matrix]
) -> dict[int, Matrix]:
    """Applies a flat-column map to cocycle representatives of H(g/h) and classifies in H(h)."""
    Hq, Hh = cohomology(q.complex), cohomology(h.complex)
    out = {}
    for p, group in Hq.items():
        target = Hh.get(p + 1)
        if target is None or not group.dim:
            out[p] = zeros(target.dim if target is not None else 0, group.dim)
            continue
        columns = []
        for j in range(group.dim):
            reps = group.representatives
            flat = {q.space.flat(p, r): reps[r, j] for r in range(reps.rows)}
            image = delta(column(flat, q.dim))
            local = Matrix([image[h.space.flat(p + 1, r), 0] for r in range(h.space.dim(p + 1))])
            columns.append(target.classify(local))
        out[p] = Matrix.hstack(*columns)
    return out


def les_coboundary(g: DgLieAlgebra, span: Matrix) -> dict[int, Matrix]:
    """H^p(g/h) -> H^(p+1)(h) of the cone triangle: lift, apply d, and negate.

    The lift is any preimage under the projection, so this does not go through c.

    Raises:
        AxiomFail: If the boundary of a lifted cocycle leaves the ideal.
    """
    h, ordered = subalgebra(g, check_ideal(g, span))
    Q = quotient_lie(g, span)

    def delta(cocycle: Matrix) -> Matrix:
        lift = solve(Q.projection, cocycle)
        coords = solve(ordered, g.d_matrix() * lift)
        if coords is None:
            witness = str(sparse_column(cocycle))
            raise AxiomFail("boundary of a lift leaves the ideal", cocycle=witness)
        return -coords

    return coboundary_classes(h, Q.algebra, delta)

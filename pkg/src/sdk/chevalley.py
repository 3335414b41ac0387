"""Truncated Chevalley complexes and the coalgebra machinery on symmetric words.

A word is a sorted tuple of letter indices. Letters carry degrees and commute with the Koszul sign
of those degrees, so odd letters never repeat. Chevalley letters are the suspended basis vectors
s e_i of degree |e_i| - 1; the enveloping coalgebra reuses the same base with unshifted letters.
"""

from typing import Any, Optional
from functools import cached_property
from itertools import product, combinations, combinations_with_replacement
from collections.abc import Callable, Mapping, Iterator, Sequence

import logfire
from sympy import Matrix, Rational, factorial
from pydantic import BaseModel, ConfigDict

from src.sdk.signs import koszul, sort_word, symmetric_rule, extraction_sign, permutation_sign
from src.sdk.dg_lie import DgLieAlgebra, DgLieModule
from src.sdk.graded import (
    ChainMap,
    Complex,
    KeyedComplex,
    FilteredComplex,
    tensor,
    keyed_complex,
    map_from_rule,
    check_chain_map,
)
from src.sdk.linalg import add_into, combine, nullspace, same_span, sparse_matrix, zeros
from src.types.errors import (
    ShapeMismatch,
    SquareNonzero,
    NotMaurerCartan,
    NotCoalgebraMorphism,
)

Word = tuple[int, ...]
WordVector = dict[Word, Any]


class WordCoalgebra(BaseModel):
    """Symmetric words of length <= n (>= 1 when reduced) with the unshuffle coproduct."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    letter_degrees: tuple[int, ...]
    letter_labels: tuple[str, ...]
    n: int
    reduced: bool = False

    @cached_property
    def rules(self) -> tuple[Any, Any]:
        return symmetric_rule(lambda a: self.letter_degrees[a])

    @cached_property
    def words(self) -> tuple[Word, ...]:
        swap, vanishes = self.rules
        out: list[Word] = []
        for length in range(1 if self.reduced else 0, self.n + 1):
            for word in combinations_with_replacement(range(len(self.letter_degrees)), length):
                if all(
                    not (word[i] == word[i + 1] and vanishes(word[i]))
                    for i in range(length - 1)
                ):
                    out.append(word)
        return tuple(out)

    def degree(self, word: Word) -> int:
        return sum(self.letter_degrees[a] for a in word)

    def label(self, word: Word) -> str:
        return "·".join(self.letter_labels[a] for a in word) if word else "1"

    def parities(self, word: Word) -> list[int]:
        return [self.letter_degrees[a] % 2 for a in word]

    def normalize(self, word: Sequence[int]) -> Optional[tuple[int, Word]]:
        swap, vanishes = self.rules
        return sort_word(word, swap, vanishes)

    def multiply(self, left: Mapping[Word, Any], right: Mapping[Word, Any]) -> WordVector:
        """Symmetric product of word vectors; words past the truncation are dropped."""
        out: WordVector = {}
        for u, a in left.items():
            for v, b in right.items():
                if len(u) + len(v) > self.n:
                    continue
                moved = self.normalize(u + v)
                if moved is not None:
                    add_into(out, {moved[1]: moved[0] * a * b})
        return out

    def counit(self, word: Word) -> int:
        return 1 if not word else 0

    def split(
        self, word: Word, blocks: int, surjective: bool
    ) -> Iterator[tuple[int, tuple[Word, ...]]]:
        """Signed ordered splittings of a word into `blocks` subwords (iterated coproduct)."""
        parities = self.parities(word)
        for assignment in product(range(blocks), repeat=len(word)):
            if surjective and len(set(assignment)) < blocks:
                continue
            order = [i for b in range(blocks) for i in range(len(word)) if assignment[i] == b]
            parts = tuple(
                tuple(word[i] for i in range(len(word)) if assignment[i] == b)
                for b in range(blocks)
            )
            yield permutation_sign(parities, order), parts

    def coproduct(self, word: Word, reduced: bool = False) -> dict[tuple[Word, Word], Any]:
        out: dict[tuple[Word, Word], Any] = {}
        parities = self.parities(word)
        for size in range(len(word) + 1):
            if reduced and size in (0, len(word)):
                continue
            for chosen in combinations(range(len(word)), size):
                rest = tuple(word[i] for i in range(len(word)) if i not in chosen)
                picked = tuple(word[i] for i in chosen)
                add_into(out, {(picked, rest): extraction_sign(parities, chosen)})
        return out

    def iterated(self, word: Word, blocks: int, surjective: bool) -> dict[tuple[Word, ...], Any]:
        out: dict[tuple[Word, ...], Any] = {}
        for sign, parts in self.split(word, blocks, surjective):
            add_into(out, {parts: sign})
        return out

    def vector_coproduct(self, vec: Mapping[Word, Any], reduced: bool = False) -> dict:
        out: dict = {}
        for word, value in vec.items():
            add_into(out, self.coproduct(word, reduced), value)
        return out


class ChevalleyComplex(WordCoalgebra):
    """C(L)_n or the reduced C̄(L)_n with differential Q = Q1 + Q2 on suspended letters.

    Q1(sx) = -s(dx) and Q2(sx·sy) = (-1)^|x| s[x, y], extended as coderivations. Q never
    lengthens a word, so the truncation is a subcomplex; the coproduct of a word of length
    <= n only has factors of length <= n.
    """

    algebra: DgLieAlgebra

    def letter(self, vec: Mapping[int, Any]) -> WordVector:
        return {(i,): value for i, value in vec.items() if value != 0}

    def q1(self, word: Word) -> WordVector:
        if len(word) != 1:
            return {}
        return self.letter({i: -v for i, v in self.algebra.complex.sparse_d[word[0]].items()})

    def q2(self, word: Word) -> WordVector:
        if len(word) != 2:
            return {}
        x, y = word
        sign = koszul(self.algebra.degrees[x], 1)
        return self.letter({k: sign * v for k, v in self.algebra.table.get((x, y), {}).items()})

    def coderivation(self, word: Word, arity: int) -> WordVector:
        """Extension of Q1 (arity 1) or Q2 (arity 2) to the whole word."""
        out: WordVector = {}
        parities = self.parities(word)
        piece = self.q1 if arity == 1 else self.q2
        for chosen in combinations(range(len(word)), arity):
            rest = tuple(word[i] for i in range(len(word)) if i not in chosen)
            sign = extraction_sign(parities, chosen)
            image = piece(tuple(word[i] for i in chosen))
            for head, value in image.items():
                moved = self.normalize(head + rest)
                if moved is not None:
                    add_into(out, {moved[1]: sign * moved[0] * value})
        return out

    def q(self, word: Word) -> WordVector:
        return combine((1, self.coderivation(word, 1)), (1, self.coderivation(word, 2)))

    def apply_q(self, vec: Mapping[Word, Any]) -> WordVector:
        out: WordVector = {}
        for word, value in vec.items():
            add_into(out, self.q(word), value)
        return out

    @cached_property
    def keyed(self) -> KeyedComplex:
        return keyed_complex(self.words, self.degree, self.label, self.q)

    @property
    def complex(self) -> Complex:
        return self.keyed.complex

    def part_matrix(self, arity: int) -> Matrix:
        keys = self.keyed.keys
        return sparse_matrix(keys, keys, {w: self.coderivation(w, arity) for w in keys})

    @cached_property
    def filtration(self) -> FilteredComplex:
        """Word-length filtration; step k is spanned by words of length <= k."""
        start = 1 if self.reduced else 0
        return FilteredComplex(
            complex=self.complex,
            steps=tuple(self.length_span(k) for k in range(start, self.n + 1)),
            lowest=start,
        )

    def length_span(self, k: int) -> dict[int, Matrix]:
        space = self.complex.space
        out = {}
        for p in space.degrees:
            picked = [
                i
                for i in range(space.dim(p))
                if len(self.keyed.keys[space.flat(p, i)]) <= k
            ]
            mat = zeros(space.dim(p), len(picked))
            for col, i in enumerate(picked):
                mat[i, col] = 1
            out[p] = mat
        return out

    @cached_property
    def square(self) -> KeyedComplex:
        return tensor(self.complex, self.complex)

    @cached_property
    def coproduct_map(self) -> ChainMap:
        keys, index = self.keyed.keys, self.keyed.index
        square = self.square

        def rule(position: int) -> dict:
            out: dict = {}
            for (u, v), value in self.coproduct(keys[position], self.reduced).items():
                add_into(out, {square.index[(index[u], index[v])]: value})
            return out

        return map_from_rule(self.complex.space, square.complex.space, rule)

    def square_defect(self) -> Optional[str]:
        """The first of d'², d''² and d'd'' + d''d' that is nonzero, or None."""
        d1, d2 = self.part_matrix(1), self.part_matrix(2)
        squares = (("d'", d1 * d1), ("d''", d2 * d2), ("d'd''+d''d'", d1 * d2 + d2 * d1))
        return next((name for name, mat in squares if not mat.is_zero_matrix), None)

    def check(self) -> "ChevalleyComplex":
        """d' and d'' square to zero separately and the coproduct is a chain map."""
        with logfire.span("validate Chevalley complex", n=self.n, reduced=self.reduced):
            found = self.square_defect()
            if found is not None:
                raise SquareNonzero(f"{found} is nonzero", part=found)
            check_chain_map(self.coproduct_map, self.complex, self.square.complex)
        return self


def chevalley(L: DgLieAlgebra, n: int) -> ChevalleyComplex:
    """The unital C(L)_n.

    Examples:
        >>> from src.sdk.graded import GradedSpace, zero_complex
        >>> space = GradedSpace(components={0: ("a", "b")})
        >>> C = chevalley(DgLieAlgebra(complex=zero_complex(space)), 2)
        >>> C.complex.dims()
        {-2: 1, -1: 2, 0: 1}
    """
    return _build(L, n, reduced=False)


def reduced_chevalley(L: DgLieAlgebra, n: int) -> ChevalleyComplex:
    if n < 1:
        raise ShapeMismatch("reduced Chevalley complexes need n >= 1", n=n)
    return _build(L, n, reduced=True)


def _build(L: DgLieAlgebra, n: int, reduced: bool) -> ChevalleyComplex:
    if n < 0:
        raise ShapeMismatch("truncation must be non-negative", n=n)
    C = ChevalleyComplex(
        letter_degrees=tuple(p - 1 for p in L.degrees),
        letter_labels=tuple(f"s{label}" for label in L.labels),
        n=n,
        reduced=reduced,
        algebra=L,
    )
    logfire.debug("Chevalley complex", n=n, reduced=reduced, dim=len(C.words))
    return C.check()


def coassociativity_defect(C: WordCoalgebra) -> Optional[Word]:
    """First word where (D x 1)D != (1 x D)D, or None."""
    for word in C.words:
        left: dict = {}
        right: dict = {}
        for (u, v), a in C.coproduct(word, C.reduced).items():
            for (u1, u2), b in C.coproduct(u, C.reduced).items():
                add_into(left, {(u1, u2, v): a * b})
            for (v1, v2), b in C.coproduct(v, C.reduced).items():
                add_into(right, {(u, v1, v2): a * b})
        if combine((1, left), (-1, right)):
            return word
    return None


def cocommutativity_defect(C: WordCoalgebra) -> Optional[Word]:
    for word in C.words:
        image = C.coproduct(word, C.reduced)
        swapped: dict = {}
        for (u, v), a in image.items():
            add_into(swapped, {(v, u): koszul(C.degree(u), C.degree(v)) * a})
        if combine((1, image), (-1, swapped)):
            return word
    return None


def counit_defect(C: WordCoalgebra) -> Optional[Word]:
    if C.reduced:
        return None
    for word in C.words:
        left = {v: a for (u, v), a in C.coproduct(word).items() if not u}
        right = {u: a for (u, v), a in C.coproduct(word).items() if not v}
        if left != {word: 1} or right != {word: 1}:
            return word
    return None


def coproduct_filtration(C: ChevalleyComplex) -> list[dict[int, Matrix]]:
    """F_k = ker(C -> C^(k+1) -> (C+)^(k+1)) by iterated reduced coproducts, per degree."""
    if C.reduced:
        raise ShapeMismatch("the coproduct filtration needs the unital complex")
    space, keys = C.complex.space, C.keyed.keys
    steps = []
    for k in range(C.n + 1):
        images = {w: C.iterated(w, k + 1, surjective=True) for w in keys}
        step = {}
        for p in space.degrees:
            columns = [keys[space.flat(p, i)] for i in range(space.dim(p))]
            targets = sorted({t for w in columns for t in images[w]})
            mat = sparse_matrix(targets, columns, images)
            step[p] = nullspace(mat) if targets else Matrix.eye(len(columns))
        steps.append(step)
    return steps


def filtration_matches_length(C: ChevalleyComplex) -> bool:
    for k, step in enumerate(coproduct_filtration(C)):
        expected = C.length_span(k)
        for p, span in step.items():
            if not same_span(span, expected[p]):
                logfire.info("coproduct filtration differs", step=k, degree=p)
                return False
    return True


def is_group_like(C: ChevalleyComplex, u: Mapping[Word, Any]) -> bool:
    if C.reduced:
        return False
    if C.apply_q(u):
        return False
    if sum(value for word, value in u.items() if not word) != 1:
        return False
    square: dict[tuple[Word, Word], Any] = {}
    for (a, x), (b, y) in product(u.items(), repeat=2):
        if len(a) + len(b) > C.n:
            return False
        square[(a, b)] = x * y
    return not combine((1, C.vector_coproduct(u)), (-1, square))


def group_like(C: ChevalleyComplex) -> list[Word]:
    """Basis words that are group-like."""
    return [w for w in C.words if is_group_like(C, {w: 1})]


def is_unit(C: ChevalleyComplex, u: Mapping[Word, Any]) -> bool:
    """Group-like with an exhaustive filtration F^u, checked at the truncation bound."""
    if not is_group_like(C, u):
        return False

    def project(word: Word) -> WordVector:
        return combine((1, {word: 1}), (-C.counit(word), u))

    for word in C.words:
        total: dict = {}
        for sign, parts in C.split(word, C.n + 1, surjective=False):
            expanded: dict = {(): sign}
            for part in parts:
                nxt: dict = {}
                for prefix, a in expanded.items():
                    for piece, b in project(part).items():
                        add_into(nxt, {prefix + (piece,): a * b})
                expanded = nxt
            add_into(total, expanded)
        if total:
            return False
    return True


def chevalley_with_coefficients(L: DgLieAlgebra, M: DgLieModule, n: int) -> KeyedComplex:
    """Hom(C̄(L)_n, M) on keys (word, module index) of degree |m| - |word|.

    The differential is d_M g - (-1)^|g| g Q + rho (tau x g) D̄ with tau(sx) = x.
    """
    C = reduced_chevalley(L, n)
    q_image = {w: C.q(w) for w in C.words}
    incoming: dict[Word, dict[Word, Any]] = {}
    for w, image in q_image.items():
        for target, value in image.items():
            incoming.setdefault(target, {})[w] = value
    letters_into: dict[Word, list[tuple[Word, int, Any]]] = {}
    for w in C.words:
        for (head, rest), value in C.coproduct(w, reduced=True).items():
            if len(head) == 1:
                letters_into.setdefault(rest, []).append((w, head[0], value))

    def degree(key: tuple[Word, int]) -> int:
        return M.degrees[key[1]] - C.degree(key[0])

    def differential(key: tuple[Word, int]) -> dict:
        w0, m = key
        g_degree = degree(key)
        out: dict = {}
        for target, value in M.complex.sparse_d[m].items():
            add_into(out, {(w0, target): value})
        for w, value in incoming.get(w0, {}).items():
            add_into(out, {(w, m): -koszul(g_degree, 1) * value})
        for w, x, value in letters_into.get(w0, []):
            sign = koszul(g_degree, C.letter_degrees[x])
            for target, c in M.action.get((x, m), {}).items():
                add_into(out, {(w, target): sign * value * c})
        return out

    keys = [(w, m) for w in C.words for m in range(M.dim)]
    return keyed_complex(
        keys,
        degree,
        label=lambda key: f"{C.label(key[0])}*⊗{M.labels[key[1]]}",
        differential=differential,
    )


def chevalley_eilenberg_oracle(L: DgLieAlgebra, M: DgLieModule, n: int) -> Complex:
    """Classical Hom(Λ^k L, M) for k = 1..n, algebras and modules concentrated in degree 0."""
    if any(L.degrees) or any(M.degrees):
        raise ShapeMismatch("the classical oracle needs everything in degree 0")
    keys = [
        (subset, m)
        for k in range(1, n + 1)
        for subset in combinations(range(L.dim), k)
        for m in range(M.dim)
    ]

    def differential(key: tuple[Word, int]) -> dict:
        subset, m = key
        out: dict = {}
        k = len(subset)
        if k == n:
            return out
        # (dφ)(x_0..x_k) = Σ (-1)^i x_i φ(..x̂_i..) + Σ_(i<j) (-1)^(i+j) φ([x_i, x_j], ..)
        for bigger in combinations(range(L.dim), k + 1):
            for i, x in enumerate(bigger):
                rest = bigger[:i] + bigger[i + 1 :]
                if rest == subset:
                    for target, c in M.action.get((x, m), {}).items():
                        add_into(out, {(bigger, target): (-1) ** i * c})
            for i, j in combinations(range(k + 1), 2):
                xi, xj = bigger[i], bigger[j]
                rest = bigger[:i] + bigger[i + 1 : j] + bigger[j + 1 :]
                for z, c in L.table.get((xi, xj), {}).items():
                    if z in rest:
                        continue
                    moved = sorted((z, *rest))
                    if tuple(moved) != subset:
                        continue
                    position = moved.index(z)
                    add_into(out, {(bigger, m): (-1) ** (i + j + position) * c})
        return out

    return keyed_complex(
        keys,
        degree=lambda key: len(key[0]),
        label=lambda key: "∧".join(L.labels[a] for a in key[0]) + f"*⊗{M.labels[key[1]]}",
        differential=differential,
    ).complex


class CoalgebraMorphism(BaseModel):
    """A degree-0 map between word coalgebras given on basis words."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    source: ChevalleyComplex
    target: ChevalleyComplex
    images: dict[Word, dict[Word, Any]]

    def apply(self, vec: Mapping[Word, Any]) -> WordVector:
        out: WordVector = {}
        for word, value in vec.items():
            add_into(out, self.images.get(word, {}), value)
        return out

    def check(self) -> "CoalgebraMorphism":
        for word in self.source.words:
            image = self.apply({word: 1})
            if any(self.target.degree(w) != self.source.degree(word) for w in image):
                raise NotCoalgebraMorphism(
                    "map does not have degree 0", word=self.source.label(word)
                )
            left = combine(
                (1, self.target.apply_q(image)), (-1, self.apply(self.source.q(word)))
            )
            if left:
                raise NotCoalgebraMorphism(
                    "map does not commute with the differentials", word=self.source.label(word)
                )
            pushed: dict = {}
            for (u, v), a in self.source.coproduct(word).items():
                for (u2, b), (v2, c) in product(
                    self.apply({u: 1}).items(), self.apply({v: 1}).items()
                ):
                    add_into(pushed, {(u2, v2): a * b * c})
            if combine((1, self.target.vector_coproduct(image)), (-1, pushed)):
                raise NotCoalgebraMorphism(
                    "map does not commute with the coproducts", word=self.source.label(word)
                )
        return self

    def matrix(self) -> Matrix:
        return sparse_matrix(self.target.keyed.keys, self.source.keyed.keys, self.images)


def quillen_forward(F: CoalgebraMorphism) -> dict[Word, dict[int, Any]]:
    """f1 = p1 o F as a map source words -> L."""
    return {
        word: {w[0]: value for w, value in image.items() if len(w) == 1}
        for word, image in F.images.items()
    }


def twisting_defect(
    source: WordCoalgebra,
    target: ChevalleyComplex,
    f1: Mapping[Word, Mapping[int, Any]],
    differential: Optional[Callable[[Word], WordVector]] = None,
) -> dict[Word, dict[int, Any]]:
    """Q1 f1 + 1/2 Q2 (f1 ⊙ f1) D̄ - f1 d on every source word; zero iff f1 is Maurer-Cartan.

    `differential` defaults to the Chevalley differential of `source`.
    """
    d = source.q if differential is None else differential
    out: dict[Word, dict[int, Any]] = {}
    for word in source.words:
        lifted = cofree_extension(source, target, f1, word, max_blocks=2)
        image = target.apply_q(lifted)
        value = {w[0]: c for w, c in image.items() if len(w) == 1}
        for w, c in d(word).items():
            add_into(value, f1.get(w, {}), -c)
        if value:
            out[word] = value
    return out


def cofree_extension(
    source: WordCoalgebra,
    target: WordCoalgebra,
    f1: Mapping[Word, Mapping[int, Any]],
    word: Word,
    max_blocks: Optional[int] = None,
) -> WordVector:
    """F(w) = ε(w) 1 + Σ_k 1/k! Σ f1(w_B1) ⊙ ... ⊙ f1(w_Bk) over ordered splittings."""
    unit = source.counit(word)
    out: WordVector = {(): unit} if unit and not target.reduced else {}
    top = len(word) if max_blocks is None else min(len(word), max_blocks)
    for k in range(1, top + 1):
        for sign, parts in source.split(word, k, surjective=True):
            term: WordVector = {(): Rational(sign, factorial(k))}
            for part in parts:
                term = target.multiply(term, {(a,): v for a, v in f1.get(part, {}).items()})
                if not term:
                    break
            add_into(out, term)
    return out


def quillen_inverse(
    source: ChevalleyComplex, target: ChevalleyComplex, f1: Mapping[Word, Mapping[int, Any]]
) -> CoalgebraMorphism:
    """The unique coalgebra morphism with p1 o F = f1.

    Raises:
        NotMaurerCartan: If f1 fails the twisting equation or does not kill the unit.
    """
    if f1.get((), {}):
        raise NotMaurerCartan("f1 must vanish on the unit")
    defect = twisting_defect(source, target, f1)
    if defect:
        word = next(iter(defect))
        raise NotMaurerCartan("f1 is not a twisting morphism", word=source.label(word))
    if target.n < source.n:
        raise ShapeMismatch(
            "target truncation must cover the source", source=source.n, target=target.n
        )
    images = {word: cofree_extension(source, target, f1, word) for word in source.words}
    return CoalgebraMorphism(source=source, target=target, images=images).check()


def induced_chevalley_map(
    f_images: Mapping[int, Mapping[int, Any]], source: ChevalleyComplex, target: ChevalleyComplex
) -> ChainMap:
    """C(f): s x_1 ... s x_k -> s f(x_1) ... s f(x_k) for a Lie morphism given on letters."""
    keys, index = source.keyed.keys, target.keyed.index

    def rule(position: int) -> dict:
        image: WordVector = {(): 1}
        for letter in keys[position]:
            image = target.multiply(image, {(a,): v for a, v in f_images[letter].items()})
        return {index[w]: value for w, value in image.items()}

    f = map_from_rule(source.complex.space, target.complex.space, rule)
    check_chain_map(f, source.complex, target.complex)
    return f

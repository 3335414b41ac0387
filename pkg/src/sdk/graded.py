"""Graded vector spaces, complexes and chain maps over the rationals.

Every basis is totally ordered by (degree, position); flat indices follow that order and all
matrices, words and structure constants are written relative to it.
"""

from typing import Any, Optional
from random import Random
from functools import cached_property
from itertools import product, combinations_with_replacement
from collections.abc import Hashable, Callable, Mapping, Sequence

import logfire
from sympy import Matrix, Rational
from pydantic import Field, BaseModel, ConfigDict, field_validator, model_validator

from src.sdk.signs import (
    koszul,
    sort_word,
    shift_sign,
    decalage_sign,
    exterior_rule,
    symmetric_rule,
)
from src.sdk.linalg import (
    rank,
    solve,
    zeros,
    hstack,
    is_zero,
    add_into,
    contains,
    nullspace,
    complement,
    column_basis,
    extend_basis,
)
from src.sdk.runtime import runtime, ordered_map
from src.types.errors import (
    NotChainMap,
    ShapeMismatch,
    SquareNonzero,
    DegreeWindowExceeded,
    FiltrationNotRespected,
)


class GradedSpace(BaseModel):
    """Finite-dimensional Z-graded space, one list of basis labels per degree."""

    model_config = ConfigDict(frozen=True)
    components: dict[int, tuple[str, ...]] = Field(default_factory=dict)

    @field_validator("components", mode="before")
    @classmethod
    def _drop_empty(cls, value: Mapping[int, Sequence[str]]) -> dict[int, tuple[str, ...]]:
        return {int(p): tuple(labels) for p, labels in sorted(value.items()) if len(labels)}

    @model_validator(mode="after")
    def _check_labels(self) -> "GradedSpace":
        for p, labels in self.components.items():
            if abs(p) > runtime.window:
                raise DegreeWindowExceeded(
                    "degree outside the configured window", degree=p, window=runtime.window
                )
            if len(set(labels)) != len(labels):
                raise ShapeMismatch("basis labels repeat within a degree", degree=p)
        return self

    def dim(self, p: int) -> int:
        return len(self.components.get(p, ()))

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(sorted(self.components))

    @cached_property
    def offsets(self) -> dict[int, int]:
        out, start = {}, 0
        for p in self.degrees:
            out[p] = start
            start += self.dim(p)
        return out

    @cached_property
    def total_dim(self) -> int:
        return sum(self.dim(p) for p in self.degrees)

    @cached_property
    def flat_degrees(self) -> tuple[int, ...]:
        return tuple(p for p in self.degrees for _ in range(self.dim(p)))

    @cached_property
    def flat_labels(self) -> tuple[str, ...]:
        return tuple(label for p in self.degrees for label in self.components[p])

    def flat(self, p: int, i: int) -> int:
        return self.offsets[p] + i

    def locate(self, index: int) -> tuple[int, int]:
        p = self.flat_degrees[index]
        return p, index - self.offsets[p]

    def index_of(self, label: str, degree: Optional[int] = None) -> int:
        for index, (p, name) in enumerate(zip(self.flat_degrees, self.flat_labels)):
            if name == label and (degree is None or p == degree):
                return index
        raise KeyError(label)

    def dims(self) -> dict[int, int]:
        return {p: self.dim(p) for p in self.degrees}


class ChainMap(BaseModel):
    """Graded linear map; block p sends component p to component p + degree."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    source: GradedSpace
    target: GradedSpace
    degree: int = 0
    blocks: dict[int, Matrix] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_shapes(self) -> "ChainMap":
        for p, block in self.blocks.items():
            expected = (self.target.dim(p + self.degree), self.source.dim(p))
            if block.shape != expected:
                raise ShapeMismatch(
                    "block shape does not match the components",
                    degree=p,
                    shape=block.shape,
                    expected=expected,
                )
        return self

    def block(self, p: int) -> Matrix:
        stored = self.blocks.get(p)
        if stored is not None:
            return stored
        return zeros(self.target.dim(p + self.degree), self.source.dim(p))

    def compose(self, inner: "ChainMap") -> "ChainMap":
        """self after inner."""
        blocks = {
            p: self.block(p + inner.degree) * inner.block(p) for p in inner.source.degrees
        }
        return ChainMap(
            source=inner.source,
            target=self.target,
            degree=self.degree + inner.degree,
            blocks=blocks,
        )

    def combine(self, other: "ChainMap", a: Any = 1, b: Any = 1) -> "ChainMap":
        blocks = {p: a * self.block(p) + b * other.block(p) for p in self.source.degrees}
        return ChainMap(source=self.source, target=self.target, degree=self.degree, blocks=blocks)

    def is_zero(self) -> bool:
        return all(is_zero(self.block(p)) for p in self.source.degrees)

    def equals(self, other: "ChainMap") -> bool:
        return self.degree == other.degree and all(
            self.block(p) == other.block(p) for p in self.source.degrees
        )

    def apply(self, index: int) -> dict[int, Rational]:
        """Image of a flat basis vector, as a sparse flat vector of the target."""
        p, i = self.source.locate(index)
        block = self.block(p)
        q = p + self.degree
        return {
            self.target.flat(q, r): block[r, i] for r in range(block.rows) if block[r, i] != 0
        }

    @cached_property
    def sparse(self) -> dict[int, dict[int, Rational]]:
        return {index: self.apply(index) for index in range(self.source.total_dim)}

    def flat_matrix(self) -> Matrix:
        out = zeros(self.target.total_dim, self.source.total_dim)
        for j, image in self.sparse.items():
            for i, value in image.items():
                out[i, j] = value
        return out


def identity_map(space: GradedSpace) -> ChainMap:
    return ChainMap(
        source=space, target=space, blocks={p: Matrix.eye(space.dim(p)) for p in space.degrees}
    )


def zero_map(source: GradedSpace, target: GradedSpace, degree: int = 0) -> ChainMap:
    return ChainMap(source=source, target=target, degree=degree)


def map_from_rule(
    source: GradedSpace,
    target: GradedSpace,
    rule: Callable[[int], Mapping[int, Any]],
    degree: int = 0,
) -> ChainMap:
    """Builds a graded map from the images of flat basis vectors."""
    blocks = {p: zeros(target.dim(p + degree), source.dim(p)) for p in source.degrees}
    for index in range(source.total_dim):
        p, i = source.locate(index)
        for image, value in rule(index).items():
            q, r = target.locate(image)
            if q != p + degree:
                raise ShapeMismatch("image has the wrong degree", source=index, target=image)
            blocks[p][r, i] += value
    return ChainMap(source=source, target=target, degree=degree, blocks=blocks)


class Complex(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    space: GradedSpace
    differential: ChainMap

    def d(self, p: int) -> Matrix:
        return self.differential.block(p)

    @cached_property
    def sparse_d(self) -> dict[int, dict[int, Rational]]:
        return self.differential.sparse

    @property
    def degrees(self) -> tuple[int, ...]:
        return self.space.degrees

    def dims(self) -> dict[int, int]:
        return self.space.dims()


def make_complex(space: GradedSpace, d: ChainMap) -> Complex:
    """Validates a differential and wraps it into a Complex.

    Raises:
        ShapeMismatch: If `d` is not a degree +1 endomorphism of `space`.
        SquareNonzero: At the first degree where d o d is nonzero.

    Examples:
        >>> from sympy import Matrix
        >>> space = GradedSpace(components={0: ("a",), 1: ("b",)})
        >>> d = ChainMap(source=space, target=space, degree=1, blocks={0: Matrix([[1]])})
        >>> make_complex(space, d).dims()
        {0: 1, 1: 1}
    """
    if d.degree != 1 or d.source != space or d.target != space:
        raise ShapeMismatch("differential must be a degree +1 endomorphism", degree=d.degree)
    for p in space.degrees:
        if space.dim(p + 2) and not is_zero(d.block(p + 1) * d.block(p)):
            raise SquareNonzero("d o d is nonzero", degree=p)
    return Complex(space=space, differential=d)


def zero_complex(space: GradedSpace) -> Complex:
    return make_complex(space, zero_map(space, space, 1))


class KeyedComplex(BaseModel):
    """A Complex whose flat basis is indexed by hashable keys (words, pairs, tagged indices)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    complex: Complex
    keys: tuple[Hashable, ...]

    @cached_property
    def index(self) -> dict[Hashable, int]:
        return {key: i for i, key in enumerate(self.keys)}

    def degree_of(self, key: Hashable) -> int:
        return self.complex.space.flat_degrees[self.index[key]]

    def to_flat(self, vec: Mapping[Hashable, Any]) -> dict[int, Any]:
        return {self.index[key]: value for key, value in vec.items() if value != 0}

    def from_flat(self, vec: Mapping[int, Any]) -> dict[Hashable, Any]:
        return {self.keys[i]: value for i, value in vec.items() if value != 0}


def keyed_complex(
    keys: Sequence[Hashable],
    degree: Callable[[Hashable], int],
    label: Callable[[Hashable], str],
    differential: Callable[[Hashable], Mapping[Hashable, Any]],
) -> KeyedComplex:
    """Assembles a complex from basis keys and an element-level differential.

    Keys are stably ordered by degree, so within a degree the given order is kept.
    """
    ordered = sorted(keys, key=degree)
    components: dict[int, list[str]] = {}
    for key in ordered:
        components.setdefault(degree(key), []).append(label(key))
    space = GradedSpace(components=components)
    index = {key: i for i, key in enumerate(ordered)}
    d = map_from_rule(
        space, space, lambda i: {index[k]: v for k, v in differential(ordered[i]).items()}, 1
    )
    return KeyedComplex(complex=make_complex(space, d), keys=tuple(ordered))


class CohomologyGroup(BaseModel):
    """H^p with cocycle representatives and a projection onto class coordinates.

    The projection kills the coboundaries and a fixed complement of the cocycles, so it is a
    chain map onto cohomology with zero differential.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    degree: int
    dim: int
    representatives: Matrix
    projection: Matrix

    def classify(self, vec: Matrix) -> Matrix:
        return self.projection * vec


def _cohomology_at(C: Complex, p: int) -> CohomologyGroup:
    n = C.space.dim(p)
    incoming = C.d(p - 1)
    cocycles = nullspace(C.d(p)) if C.space.dim(p + 1) else Matrix.eye(n)
    boundaries = column_basis(incoming) if incoming.cols else zeros(n, 0)
    picked = extend_basis(boundaries, cocycles)
    reps = cocycles.extract(list(range(n)), picked) if picked else zeros(n, 0)
    others = complement(hstack(boundaries, reps, rows=n), n) if n else []
    outside = Matrix.eye(n).extract(list(range(n)), others) if others else zeros(n, 0)
    frame = hstack(boundaries, reps, outside, rows=n)
    if n:
        inverse = frame.inv()
        start = boundaries.cols
        projection = inverse.extract(list(range(start, start + reps.cols)), list(range(n)))
    else:
        projection = zeros(0, 0)
    return CohomologyGroup(degree=p, dim=reps.cols, representatives=reps, projection=projection)


def cohomology(C: Complex) -> dict[int, CohomologyGroup]:
    """Cohomology in every degree of the support, computed exactly.

    Examples:
        >>> space = GradedSpace(components={0: ("a", "b"), 1: ("c",)})
        >>> H = cohomology(zero_complex(space))
        >>> {p: group.dim for p, group in H.items()}
        {0: 2, 1: 1}
    """
    with logfire.span("cohomology", dims=str(C.dims())):
        groups = ordered_map(lambda p: _cohomology_at(C, p), C.space.degrees)
    return {group.degree: group for group in groups}


def betti(C: Complex) -> dict[int, int]:
    return {p: group.dim for p, group in cohomology(C).items()}


def rank_betti(C: Complex) -> dict[int, int]:
    """dim C^p - rank d_p - rank d_(p-1), without going through cocycle representatives."""
    ranks = dict(zip(C.degrees, ordered_map(lambda p: rank(C.d(p)), C.degrees)))
    return {p: C.space.dim(p) - ranks[p] - ranks.get(p - 1, 0) for p in C.degrees}


def euler_characteristic(dims: Mapping[int, int]) -> int:
    return sum((-1) ** (p % 2) * n for p, n in dims.items())


def shift(C: Complex, n: int) -> Complex:
    """C[n]: component p is C^(n+p) and the differential is multiplied by (-1)^n."""
    space = GradedSpace(components={p - n: labels for p, labels in C.space.components.items()})
    sign = shift_sign(n)
    blocks = {p - n: sign * block for p, block in C.differential.blocks.items()}
    d = ChainMap(source=space, target=space, degree=1, blocks=blocks)
    return make_complex(space, d)


def tensor(C: Complex, D: Complex) -> KeyedComplex:
    """Graded tensor product with d(a x b) = da x b + (-1)^|a| a x db; keys are flat pairs."""
    dc, dd = C.space.flat_degrees, D.space.flat_degrees
    keys = list(product(range(C.space.total_dim), range(D.space.total_dim)))

    def differential(key: tuple[int, int]) -> dict:
        a, b = key
        out: dict = {}
        for a2, value in C.sparse_d[a].items():
            add_into(out, {(a2, b): value})
        sign = -1 if dc[a] % 2 else 1
        for b2, value in D.sparse_d[b].items():
            add_into(out, {(a, b2): sign * value})
        return out

    return keyed_complex(
        keys,
        degree=lambda key: dc[key[0]] + dd[key[1]],
        label=lambda key: f"{C.space.flat_labels[key[0]]}⊗{D.space.flat_labels[key[1]]}",
        differential=differential,
    )


def commutator(C: Complex, D: Complex) -> ChainMap:
    """The Koszul swap C x D -> D x C, v x w -> (-1)^(|v||w|) w x v."""
    source, target = tensor(C, D), tensor(D, C)
    dc, dd = C.space.flat_degrees, D.space.flat_degrees

    def rule(index: int) -> dict[int, int]:
        a, b = source.keys[index]
        return {target.index[(b, a)]: koszul(dc[a], dd[b])}

    return map_from_rule(source.complex.space, target.complex.space, rule)


def associator(C: Complex, D: Complex, E: Complex) -> ChainMap:
    """(C x D) x E -> C x (D x E) on bases; the sign is +1 with Koszul ordering kept."""
    left_inner = tensor(C, D)
    left = tensor(left_inner.complex, E)
    right_inner = tensor(D, E)
    right = tensor(C, right_inner.complex)

    def rule(index: int) -> dict[int, int]:
        ab, c = left.keys[index]
        a, b = left_inner.keys[ab]
        return {right.index[(a, right_inner.index[(b, c)])]: 1}

    return map_from_rule(left.complex.space, right.complex.space, rule)


def word_power(
    C: Complex, n: int, exterior: bool = False, joiner: Optional[str] = None
) -> KeyedComplex:
    """Sym^n(C) or Lambda^n(C) on sorted words of flat indices."""
    degrees = C.space.flat_degrees
    if exterior:
        swap, vanishes = exterior_rule(lambda a: degrees[a])
    else:
        swap, vanishes = symmetric_rule(lambda a: degrees[a])
    joiner = joiner or ("∧" if exterior else "·")
    words = [
        word
        for word in combinations_with_replacement(range(C.space.total_dim), n)
        if all(not (word[i] == word[i + 1] and vanishes(word[i])) for i in range(n - 1))
    ]

    def differential(word: tuple[int, ...]) -> dict:
        out: dict = {}
        passed = 0
        for position, letter in enumerate(word):
            sign = -1 if passed % 2 else 1
            for image, value in C.sparse_d[letter].items():
                replaced = word[:position] + (image,) + word[position + 1 :]
                moved = sort_word(replaced, swap, vanishes)
                if moved is not None:
                    add_into(out, {moved[1]: sign * moved[0] * value})
            passed += degrees[letter]
        return out

    labels = C.space.flat_labels
    return keyed_complex(
        words,
        degree=lambda word: sum(degrees[a] for a in word),
        label=lambda word: joiner.join(labels[a] for a in word) if word else "1",
        differential=differential,
    )


def sym_power(C: Complex, n: int) -> KeyedComplex:
    """Koszul coinvariants of T^n(C).

    Examples:
        >>> space = GradedSpace(components={1: ("x",)})
        >>> sym_power(zero_complex(space), 2).complex.space.total_dim
        0
    """
    return word_power(C, n)


def ext_power(C: Complex, n: int) -> KeyedComplex:
    """Sign-twisted Koszul coinvariants of T^n(C)."""
    return word_power(C, n, exterior=True)


def decalage(C: Complex, n: int) -> ChainMap:
    """The isomorphism Sym^n(C[1]) -> Lambda^n(C)[n], validated as a chain map."""
    shifted = shift(C, 1)
    source = sym_power(shifted, n)
    target_keyed = ext_power(C, n)
    target = shift(target_keyed.complex, n)
    degrees = C.space.flat_degrees

    def rule(index: int) -> dict[int, int]:
        word = source.keys[index]
        return {target_keyed.index[word]: decalage_sign([degrees[a] for a in word])}

    f = map_from_rule(source.complex.space, target.space, rule)
    check_chain_map(f, source.complex, target)
    return f


def check_chain_map(f: ChainMap, C: Complex, D: Complex) -> None:
    sign = -1 if f.degree % 2 else 1
    for p in C.space.degrees:
        lhs = D.d(p + f.degree) * f.block(p)
        rhs = sign * f.block(p + 1) * C.d(p)
        if lhs != rhs:
            raise NotChainMap("map does not commute with the differentials", degree=p)


def direct_sum(C: Complex, D: Complex) -> KeyedComplex:
    keys = [("L", i) for i in range(C.space.total_dim)] + [
        ("R", j) for j in range(D.space.total_dim)
    ]

    def differential(key: tuple[str, int]) -> dict:
        side, i = key
        source = C if side == "L" else D
        return {(side, j): v for j, v in source.sparse_d[i].items()}

    def degree(key: tuple[str, int]) -> int:
        side, i = key
        return (C if side == "L" else D).space.flat_degrees[i]

    def label(key: tuple[str, int]) -> str:
        side, i = key
        return (C if side == "L" else D).space.flat_labels[i] + ("" if side == "L" else "'")

    return keyed_complex(keys, degree, label, differential)


def cone(f: ChainMap, C: Complex, D: Complex) -> KeyedComplex:
    """Cone(f)^n = C^(n+1) + D^n with d(x, y) = (-dx, f(x) + dy).

    Keys are ("s", i) for the shifted source and ("t", j) for the target.
    """
    check_chain_map(f, C, D)
    keys = [("s", i) for i in range(C.space.total_dim)] + [
        ("t", j) for j in range(D.space.total_dim)
    ]

    def differential(key: tuple[str, int]) -> dict:
        side, i = key
        if side == "t":
            return {("t", j): v for j, v in D.sparse_d[i].items()}
        out = {("s", j): -v for j, v in C.sparse_d[i].items()}
        add_into(out, {("t", j): v for j, v in f.apply(i).items()})
        return out

    def degree(key: tuple[str, int]) -> int:
        side, i = key
        return C.space.flat_degrees[i] - 1 if side == "s" else D.space.flat_degrees[i]

    def label(key: tuple[str, int]) -> str:
        side, i = key
        return f"s({C.space.flat_labels[i]})" if side == "s" else D.space.flat_labels[i]

    return keyed_complex(keys, degree, label, differential)


def induced_map(
    f: ChainMap, HC: Mapping[int, CohomologyGroup], HD: Mapping[int, CohomologyGroup]
) -> dict[int, Matrix]:
    """Matrices of H(f) in the representative bases; independent of the chosen cocycles."""
    out = {}
    for p, group in HC.items():
        q = p + f.degree
        target = HD.get(q)
        if target is None:
            out[p] = zeros(0, group.dim)
            continue
        out[p] = target.classify(f.block(p) * group.representatives)
    return out


def is_quasi_iso(f: ChainMap, C: Complex, D: Complex) -> bool:
    """True iff f is a chain map inducing isomorphisms H^p(C) -> H^(p+deg f)(D) for all p."""
    check_chain_map(f, C, D)
    HC, HD = cohomology(C), cohomology(D)
    induced = induced_map(f, HC, HD)
    for p in set(HC) | {q - f.degree for q in HD}:
        source_dim = HC[p].dim if p in HC else 0
        target_dim = HD[p + f.degree].dim if p + f.degree in HD else 0
        if source_dim != target_dim:
            return False
        if source_dim and rank(induced[p]) != source_dim:
            return False
    return True


class Subquotient(BaseModel):
    """A subquotient big/small of a complex, with the projection from big coordinates."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    complex: Complex
    lifts: dict[int, Matrix]
    frames: dict[int, Matrix]
    offset: dict[int, int]

    def project(self, p: int, vec: Matrix) -> Matrix:
        frame = self.frames.get(p)
        if frame is None or frame.cols == 0:
            return zeros(0, 1)
        coords = solve(frame, vec)
        if coords is None:
            raise FiltrationNotRespected("vector leaves the filtration step", degree=p)
        start = self.offset[p]
        return coords.extract(list(range(start, frame.cols)), [0])


def subquotient(
    C: Complex, big: Mapping[int, Matrix], small: Mapping[int, Matrix], name: str = "q"
) -> Subquotient:
    lifts: dict[int, Matrix] = {}
    frames: dict[int, Matrix] = {}
    offset: dict[int, int] = {}
    for p in C.space.degrees:
        n = C.space.dim(p)
        b = column_basis(big[p]) if p in big and big[p].cols else zeros(n, 0)
        s = column_basis(small[p]) if p in small and small[p].cols else zeros(n, 0)
        picked = extend_basis(s, b)
        lift = b.extract(list(range(n)), picked) if picked else zeros(n, 0)
        lifts[p] = lift
        frames[p] = hstack(s, lift, rows=n)
        offset[p] = s.cols
    partial = Subquotient(
        complex=zero_complex(GradedSpace()), lifts=lifts, frames=frames, offset=offset
    )
    components = {
        p: tuple(f"{name}{p}_{i}" for i in range(lifts[p].cols)) for p in C.space.degrees
    }
    space = GradedSpace(components=components)
    blocks = {}
    for p in space.degrees:
        if not space.dim(p + 1):
            continue
        images = C.d(p) * lifts[p]
        blocks[p] = Matrix.hstack(
            *[partial.project(p + 1, images[:, j]) for j in range(images.cols)]
        )
    d = ChainMap(source=space, target=space, degree=1, blocks=blocks)
    return Subquotient(
        complex=make_complex(space, d), lifts=lifts, frames=frames, offset=offset
    )


class FilteredComplex(BaseModel):
    """Increasing exhaustive filtration F_{n0} in F_{n0+1} in ... by subcomplexes."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    complex: Complex
    steps: tuple[dict[int, Matrix], ...]
    lowest: int = 0

    @model_validator(mode="after")
    def _check_steps(self) -> "FilteredComplex":
        C = self.complex
        for k, step in enumerate(self.steps):
            for p in C.space.degrees:
                span = step.get(p, zeros(C.space.dim(p), 0))
                if span.cols and C.space.dim(p + 1):
                    image = C.d(p) * span
                    if not contains(step.get(p + 1, zeros(C.space.dim(p + 1), 0)), image):
                        raise FiltrationNotRespected(
                            "filtration step is not a subcomplex", step=self.lowest + k, degree=p
                        )
                if k and not contains(span, self.steps[k - 1].get(p, zeros(span.rows, 0))):
                    raise FiltrationNotRespected(
                        "filtration steps are not nested", step=self.lowest + k, degree=p
                    )
        last = self.steps[-1] if self.steps else {}
        for p in C.space.degrees:
            if rank(last.get(p, zeros(C.space.dim(p), 0))) != C.space.dim(p):
                raise FiltrationNotRespected("filtration is not exhaustive", degree=p)
        return self

    def step(self, k: int) -> dict[int, Matrix]:
        if k < self.lowest:
            return {p: zeros(self.complex.space.dim(p), 0) for p in self.complex.space.degrees}
        return self.steps[min(k - self.lowest, len(self.steps) - 1)]

    def graded_piece(self, k: int) -> Subquotient:
        return subquotient(self.complex, self.step(k), self.step(k - 1), name=f"gr{k}_")


def trivial_filtration(C: Complex) -> FilteredComplex:
    whole = {p: Matrix.eye(C.space.dim(p)) for p in C.space.degrees}
    return FilteredComplex(complex=C, steps=(whole,))


def filtered_quasi_iso(f: ChainMap, FC: FilteredComplex, FD: FilteredComplex) -> bool:
    """True iff every gr_k(f) is a quasi-isomorphism.

    Raises:
        FiltrationNotRespected: If f(F_k C) is not contained in F_k D.
    """
    check_chain_map(f, FC.complex, FD.complex)
    top = max(FC.lowest + len(FC.steps), FD.lowest + len(FD.steps))
    for k in range(min(FC.lowest, FD.lowest), top):
        source_step, target_step = FC.step(k), FD.step(k)
        for p, span in source_step.items():
            if span.cols and not contains(
                target_step.get(p + f.degree, zeros(f.block(p).rows, 0)), f.block(p) * span
            ):
                raise FiltrationNotRespected("map leaves the filtration", step=k, degree=p)
        gc, gd = FC.graded_piece(k), FD.graded_piece(k)
        blocks = {}
        for p in gc.complex.space.degrees:
            images = f.block(p) * gc.lifts[p]
            blocks[p] = Matrix.hstack(
                *[gd.project(p, images[:, j]) for j in range(images.cols)]
            )
        gr = ChainMap(source=gc.complex.space, target=gd.complex.space, blocks=blocks)
        if not is_quasi_iso(gr, gc.complex, gd.complex):
            logfire.debug("graded piece is not a quasi-isomorphism", step=k)
            return False
    return True


def random_complex(
    seed: int, max_dim: int = 3, degrees: Sequence[int] = (-1, 0, 1, 2)
) -> Complex:
    """Seeded random complex; each block factors through the kernel of the next one."""
    rng = Random(seed)
    components = {
        p: tuple(f"v{p}_{i}" for i in range(rng.randint(0, max_dim))) for p in degrees
    }
    space = GradedSpace(components=components)
    blocks: dict[int, Matrix] = {}
    for p in sorted(space.degrees, reverse=True):
        rows = space.dim(p + 1)
        if not rows:
            continue
        kernel = nullspace(blocks[p + 1]) if p + 1 in blocks else Matrix.eye(rows)
        if not kernel.cols:
            continue
        mix = Matrix(kernel.cols, space.dim(p), lambda *_: Rational(rng.randint(-2, 2)))
        blocks[p] = kernel * mix
    return make_complex(space, ChainMap(source=space, target=space, degree=1, blocks=blocks))

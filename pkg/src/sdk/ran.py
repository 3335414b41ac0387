"""Finite discrete model of !-modules on the powers X^[n] of a finite set of points.

Objects are the skeleton sets [n] = {1..n} and morphisms are the surjections between them. A
module assigns a keyed complex F_[n](x) to every point x of X^[n], and to every surjection
π: [m] ->> [n] structure maps θ^(π): F_[m](Δ^(π) y) -> F_[n](y). Structure maps may be partial:
a key outside their domain imposes no relation on global sections and counts as zero when
admissibility is tested.
"""

from typing import Any, Optional
from itertools import product
from collections.abc import Hashable, Callable, Iterator, Mapping, Sequence

import logfire
from sympy import Matrix, Rational
from pydantic import Field, BaseModel, ConfigDict, field_validator, model_validator

from src.sdk.graded import (
    ChainMap,
    Complex,
    GradedSpace,
    KeyedComplex,
    betti,
    subquotient,
    zero_complex,
    is_quasi_iso,
    keyed_complex,
    map_from_rule,
)
from src.sdk.linalg import ONE, zeros, add_into, combine, from_columns
from src.sdk.signs import koszul
from src.sdk.runtime import ordered_map
from src.types.errors import AxiomFail, NotChainMap, ShapeMismatch, CutoffExceeded

Point = tuple[str, ...]
Theta = Callable[["FinSurjection", Point, Hashable], Optional[dict[Hashable, Any]]]
Node = tuple[int, Point, Hashable]

EMPTY = KeyedComplex(complex=zero_complex(GradedSpace()), keys=())


class FiniteSpace(BaseModel):
    """The finite set of points standing in for X."""

    model_config = ConfigDict(frozen=True)
    points: tuple[str, ...]

    @field_validator("points")
    @classmethod
    def _check_points(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        if not value:
            raise ShapeMismatch("a finite space needs at least one point")
        if len(set(value)) != len(value):
            raise ShapeMismatch("point labels repeat", points=value)
        return value

    def power(self, k: int) -> list[Point]:
        """Points of X^[k] as label tuples, lexicographic in the order of `points`."""
        return list(product(self.points, repeat=k))


class FinSurjection(BaseModel):
    """π: [source] ->> [target], with assignment[j - 1] = π(j)."""

    model_config = ConfigDict(frozen=True)
    source: int
    target: int
    assignment: tuple[int, ...]

    @model_validator(mode="after")
    def _check_surjective(self) -> "FinSurjection":
        if len(self.assignment) != self.source:
            raise ShapeMismatch(
                "assignment length differs from the source size", pi=self.assignment
            )
        if set(self.assignment) != set(range(1, self.target + 1)):
            raise ShapeMismatch(
                "assignment is not a surjection", pi=self.assignment, target=self.target
            )
        return self

    def __call__(self, j: int) -> int:
        return self.assignment[j - 1]

    def __str__(self) -> str:
        return "π(" + ",".join(map(str, self.assignment)) + ")"

    @property
    def is_identity(self) -> bool:
        return self.assignment == tuple(range(1, self.source + 1))

    def fiber(self, i: int) -> tuple[int, ...]:
        return tuple(j for j in range(1, self.source + 1) if self(j) == i)

    def compose(self, inner: "FinSurjection") -> "FinSurjection":
        """self o inner."""
        if inner.target != self.source:
            raise ShapeMismatch(
                "surjections are not composable", inner=str(inner), outer=str(self)
            )
        return FinSurjection(
            source=inner.source,
            target=self.target,
            assignment=tuple(self(inner(j)) for j in range(1, inner.source + 1)),
        )

    def factors(self, labels: Sequence[Any]) -> bool:
        """True iff the labelling of [source] is constant on the fibers of self."""
        seen: dict[int, Any] = {}
        for j, label in enumerate(labels, start=1):
            if seen.setdefault(self(j), label) != label:
                return False
        return True

    def restrict(self, block: Sequence[int], image: Sequence[int]) -> "FinSurjection":
        """Restriction block ->> image, both reindexed order-preservingly."""
        position = {i: k for k, i in enumerate(image, start=1)}
        return FinSurjection(
            source=len(block),
            target=len(image),
            assignment=tuple(position[self(j)] for j in block),
        )


def identity_surjection(n: int) -> FinSurjection:
    return FinSurjection(source=n, target=n, assignment=tuple(range(1, n + 1)))


def surjections(m: int, n: int) -> list[FinSurjection]:
    """All surjections [m] ->> [n] in lexicographic order of their assignments.

    Examples:
        >>> len(surjections(3, 2)), len(surjections(4, 2))
        (6, 14)
    """
    if m < 1 or n < 1:
        raise ShapeMismatch("skeleton objects start at [1]", m=m, n=n)
    return [
        FinSurjection(source=m, target=n, assignment=a)
        for a in product(range(1, n + 1), repeat=m)
        if len(set(a)) == n
    ]


def set_partitions(k: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Partitions of [k] into blocks, each block sorted and blocks ordered by their minimum."""
    if k == 0:
        yield ()
        return
    for rest in set_partitions(k - 1):
        for b in range(len(rest)):
            yield rest[:b] + (rest[b] + (k,),) + rest[b + 1 :]
        yield rest + ((k,),)


def diagonal(pi: FinSurjection, X: FiniteSpace) -> dict[Point, Point]:
    """Δ^(π): X^[n] -> X^[m], (x_i) -> (x_π(j))."""
    return {y: tuple(y[pi(j) - 1] for j in range(1, pi.source + 1)) for y in X.power(pi.target)}


def union_map(S: frozenset[str], T: frozenset[str]) -> frozenset[str]:
    return frozenset(S | T)


def project_r(point: Sequence[str]) -> frozenset[str]:
    return frozenset(point)


def check_union_relation(X: FiniteSpace, m: int, n: int) -> bool:
    """r_(m+n) = u o (r_m x r_n) on every pair of tuples."""
    return all(
        project_r(a + b) == union_map(project_r(a), project_r(b))
        for a in X.power(m)
        for b in X.power(n)
    )


def keyed_fiber(C: Complex) -> KeyedComplex:
    return KeyedComplex(complex=C, keys=tuple(range(C.space.total_dim)))


class RanModule(BaseModel):
    """A !-module on X^S truncated at objects [n] with n <= cutoff.

    Fibers carry differentials, so this is also the type of Ran complexes; a plain module has
    zero differentials.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    space: FiniteSpace
    cutoff: int
    fibers: dict[tuple[int, Point], KeyedComplex] = Field(default_factory=dict)
    theta: Theta

    @model_validator(mode="after")
    def _check_fibers(self) -> "RanModule":
        if self.cutoff < 1:
            raise ShapeMismatch("cutoff must be at least 1", cutoff=self.cutoff)
        for k, point in self.fibers:
            if not 1 <= k <= self.cutoff or len(point) != k:
                raise ShapeMismatch("fiber outside the truncated skeleton", k=k, point=point)
            if any(x not in self.space.points for x in point):
                raise ShapeMismatch("fiber over an unknown point", point=point)
        return self

    def fiber(self, k: int, point: Point) -> KeyedComplex:
        if k > self.cutoff:
            raise CutoffExceeded("object beyond the cutoff", k=k, cutoff=self.cutoff)
        return self.fibers.get((k, tuple(point)), EMPTY)

    def dims(self, k: int) -> dict[Point, int]:
        return {x: self.fiber(k, x).complex.space.total_dim for x in self.space.power(k)}

    def image(self, pi: FinSurjection, y: Point, key: Hashable) -> Optional[dict[Hashable, Any]]:
        return self.theta(pi, tuple(y), key)

    def restrict_to_diagonal(self, pi: FinSurjection, y: Point) -> KeyedComplex:
        """Δ^(π)! F_[m] at y, which for discrete X is the fiber at Δ^(π) y."""
        return self.fiber(pi.source, tuple(y[pi(j) - 1] for j in range(1, pi.source + 1)))

    def transition(self, pi: FinSurjection, y: Point) -> ChainMap:
        """θ^(π) at y as a degree-0 map, zero outside its domain."""
        source = self.restrict_to_diagonal(pi, y)
        target = self.fiber(pi.target, y)

        def rule(index: int) -> dict:
            found = self.image(pi, y, source.keys[index]) or {}
            return target.to_flat(found)

        return map_from_rule(source.complex.space, target.complex.space, rule)

    def pairs(self) -> Iterator[tuple[FinSurjection, Point]]:
        for m in range(1, self.cutoff + 1):
            for n in range(1, m + 1):
                for pi in surjections(m, n):
                    for y in self.space.power(n):
                        yield pi, y

    def check(self) -> "RanModule":
        """θ^(id) = id, θ respects composition and is a chain map on its domain."""
        with logfire.span("validate Ran module", cutoff=self.cutoff):
            for k in range(1, self.cutoff + 1):
                identity = identity_surjection(k)
                for x in self.space.power(k):
                    for key in self.fiber(k, x).keys:
                        if self.image(identity, x, key) != {key: ONE}:
                            raise AxiomFail("θ of the identity is not the identity", k=k, point=x)
            for pi, y in self.pairs():
                self._check_chain(pi, y)
            self._check_composition()
        return self

    def _check_chain(self, pi: FinSurjection, y: Point) -> None:
        source = self.restrict_to_diagonal(pi, y)
        target = self.fiber(pi.target, y)
        for key in source.keys:
            image = self.image(pi, y, key)
            if image is None:
                continue
            lhs = self._apply(pi, y, source.from_flat(source.complex.sparse_d[source.index[key]]))
            if lhs is None:
                raise NotChainMap("domain of θ is not a subcomplex", pi=str(pi), point=y)
            rhs: dict = {}
            for k, value in image.items():
                add_into(rhs, target.from_flat(target.complex.sparse_d[target.index[k]]), value)
            if combine((1, lhs), (-1, rhs)):
                raise NotChainMap("θ does not commute with the differentials", pi=str(pi), point=y)

    def _apply(
        self, pi: FinSurjection, y: Point, vec: Mapping[Hashable, Any]
    ) -> Optional[dict]:
        out: dict = {}
        for key, value in vec.items():
            image = self.image(pi, y, key)
            if image is None:
                return None
            add_into(out, image, value)
        return out

    def _check_composition(self) -> None:
        for l in range(1, self.cutoff + 1):
            for k in range(1, l + 1):
                for n in range(1, k + 1):
                    for sigma, rho in product(surjections(l, k), surjections(k, n)):
                        both = rho.compose(sigma)
                        for z in self.space.power(n):
                            y = tuple(z[rho(j) - 1] for j in range(1, k + 1))
                            source = self.restrict_to_diagonal(both, z)
                            for key in source.keys:
                                direct = self.image(both, z, key) or {}
                                first = self.image(sigma, y, key)
                                second = (
                                    {} if first is None else self._apply(rho, z, first) or {}
                                )
                                if combine((1, direct), (-1, second)):
                                    raise AxiomFail(
                                        "θ does not respect composition",
                                        sigma=str(sigma),
                                        rho=str(rho),
                                        point=z,
                                    )


RanComplex = RanModule


def delta_pushforward(
    X: FiniteSpace, M: Mapping[str, Complex], cutoff: int
) -> RanModule:
    """Δ^(S)_* M: the fiber of M at p over every constant point (p, ..., p), θ the identity."""
    if any(p not in X.points for p in M):
        raise ShapeMismatch("family over an unknown point", points=sorted(M))
    fibers = {
        (k, (p,) * k): keyed_fiber(C)
        for p, C in M.items()
        for k in range(1, cutoff + 1)
        if C.space.total_dim
    }
    return RanModule(space=X, cutoff=cutoff, fibers=fibers, theta=_identity_theta)


def _identity_theta(pi: FinSurjection, y: Point, key: Hashable) -> dict[Hashable, Any]:
    return {key: ONE}


def convolution(F: RanModule, G: RanModule) -> RanModule:
    """(F ⊗* G)_I = ⊕ over π: I ->> {1, 2} of F_(π⁻¹1) ⊠ G_(π⁻¹2).

    Keys are (assignment, F key, G key). θ^(σ) is defined on a summand when its assignment
    is constant on the fibers of σ, and is θ_F ⊠ θ_G there.
    """
    if F.space != G.space or F.cutoff != G.cutoff:
        raise ShapeMismatch("convolution needs a common space and cutoff")
    X = F.space

    def parts(k: int, point: Point, a: tuple[int, ...]) -> tuple:
        first = tuple(j for j in range(1, k + 1) if a[j - 1] == 1)
        second = tuple(j for j in range(1, k + 1) if a[j - 1] == 2)
        left = F.fiber(len(first), tuple(point[j - 1] for j in first))
        right = G.fiber(len(second), tuple(point[j - 1] for j in second))
        return first, second, left, right

    def build(obj: tuple[int, Point]) -> Optional[KeyedComplex]:
        k, point = obj
        if k < 2:
            return None
        keys, factors = [], {}
        for pi in surjections(k, 2):
            _, _, left, right = parts(k, point, pi.assignment)
            for f, g in product(left.keys, right.keys):
                keys.append((pi.assignment, f, g))
                factors[pi.assignment] = (left, right)
        if not keys:
            return None

        def degree(key: tuple) -> int:
            a, f, g = key
            left, right = factors[a]
            return left.degree_of(f) + right.degree_of(g)

        def differential(key: tuple) -> dict:
            a, f, g = key
            left, right = factors[a]
            out: dict = {}
            for f2, value in left.from_flat(left.complex.sparse_d[left.index[f]]).items():
                add_into(out, {(a, f2, g): value})
            sign = koszul(left.degree_of(f), 1)
            for g2, value in right.from_flat(right.complex.sparse_d[right.index[g]]).items():
                add_into(out, {(a, f, g2): sign * value})
            return out

        return keyed_complex(keys, degree, str, differential)

    objects = [(k, x) for k in range(1, F.cutoff + 1) for x in X.power(k)]
    built = ordered_map(build, objects)
    fibers = {obj: fiber for obj, fiber in zip(objects, built) if fiber is not None}

    def theta(sigma: FinSurjection, y: Point, key: Hashable) -> Optional[dict]:
        a_src, f, g = key
        if not sigma.factors(a_src):
            return None
        a = [0] * sigma.target
        for j, label in enumerate(a_src, start=1):
            a[sigma(j) - 1] = label
        a = tuple(a)
        src_first = tuple(j for j in range(1, sigma.source + 1) if a_src[j - 1] == 1)
        src_second = tuple(j for j in range(1, sigma.source + 1) if a_src[j - 1] == 2)
        first, second, _, _ = parts(sigma.target, y, a)
        left = F.image(
            sigma.restrict(src_first, first), tuple(y[j - 1] for j in first), f
        )
        right = G.image(
            sigma.restrict(src_second, second), tuple(y[j - 1] for j in second), g
        )
        if left is None or right is None:
            return None
        out: dict = {}
        for (f2, u), (g2, v) in product(left.items(), right.items()):
            add_into(out, {(a, f2, g2): u * v})
        return out

    return RanModule(space=X, cutoff=F.cutoff, fibers=fibers, theta=theta)


def swap_dims_match(F: RanModule, G: RanModule) -> bool:
    """F ⊗* G and G ⊗* F agree fiber by fiber in every degree."""
    FG, GF = convolution(F, G), convolution(G, F)
    for k in range(1, F.cutoff + 1):
        for x in F.space.power(k):
            if FG.fiber(k, x).complex.dims() != GF.fiber(k, x).complex.dims():
                return False
    return True


class _Classes:
    """Weighted union-find: node i equals weight[i] times parent[i]; dead roots are zero."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.weight: list[Any] = [ONE] * size
        self.dead: set[int] = set()

    def find(self, i: int) -> tuple[int, Any]:
        path = []
        while self.parent[i] != i:
            path.append(i)
            i = self.parent[i]
        root = i
        for node in reversed(path):
            parent = self.parent[node]
            if parent != root:
                self.weight[node] = self.weight[node] * self.weight[parent]
                self.parent[node] = root
        return root, ONE if not path else self.weight[path[0]]

    def kill(self, i: int) -> None:
        self.dead.add(self.find(i)[0])

    def relate(self, i: int, j: int, c: Any) -> None:
        """Imposes node i = c * node j with c nonzero."""
        ri, wi = self.find(i)
        rj, wj = self.find(j)
        if ri == rj:
            if wi != c * wj:
                self.dead.add(ri)
            return
        dead = ri in self.dead or rj in self.dead
        if ri < rj:
            self.parent[rj], self.weight[rj] = ri, Rational(wi) / (c * wj)
            root = ri
        else:
            self.parent[ri], self.weight[ri] = rj, Rational(c * wj) / wi
            root = rj
        if dead:
            self.dead.add(root)

    def resolve(self, i: int) -> dict[int, Any]:
        root, w = self.find(i)
        return {} if root in self.dead else {root: w}


class GlobalSections(BaseModel):
    """Γ(X^S, F) as a colimit over the skeleton, with the image of every node in it."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    keyed: KeyedComplex
    classes: dict[Node, dict[Hashable, Any]]
    stable: Optional[bool] = None
    monomial: bool = True

    @property
    def complex(self) -> Complex:
        return self.keyed.complex

    def of(self, vec: Mapping[Node, Any]) -> dict[Hashable, Any]:
        out: dict = {}
        for node, value in vec.items():
            add_into(out, self.classes[node], value)
        return out


def _nodes(F: RanModule, top: int) -> list[Node]:
    return [
        (k, x, key)
        for k in range(1, top + 1)
        for x in F.space.power(k)
        for key in F.fiber(k, x).keys
    ]


def _colimit(F: RanModule, top: int) -> GlobalSections:
    nodes = _nodes(F, top)
    index = {node: i for i, node in enumerate(nodes)}
    relations: list[tuple[int, dict[int, Any]]] = []
    for m in range(1, top + 1):
        for n in range(1, m + 1):
            for pi in surjections(m, n):
                if pi.is_identity:
                    continue
                for y in F.space.power(n):
                    source = F.restrict_to_diagonal(pi, y)
                    start = tuple(y[pi(j) - 1] for j in range(1, m + 1))
                    for key in source.keys:
                        image = F.image(pi, y, key)
                        if image is None:
                            continue
                        target = {index[(n, y, k)]: v for k, v in image.items()}
                        relations.append((index[(m, start, key)], target))
    if all(len(image) <= 1 for _, image in relations):
        return _union_find_colimit(F, nodes, index, relations)
    return _linear_colimit(F, nodes, index, relations)


def _node_d(F: RanModule, node: Node) -> dict[Node, Any]:
    k, x, key = node
    fiber = F.fiber(k, x)
    image = fiber.from_flat(fiber.complex.sparse_d[fiber.index[key]])
    return {(k, x, target): value for target, value in image.items()}


def _node_degree(F: RanModule, node: Node) -> int:
    k, x, key = node
    return F.fiber(k, x).degree_of(key)


def _union_find_colimit(
    F: RanModule, nodes: list[Node], index: dict[Node, int], relations: list
) -> GlobalSections:
    classes = _Classes(len(nodes))
    for i, image in relations:
        if not image:
            classes.kill(i)
        else:
            ((j, c),) = image.items()
            classes.relate(i, j, c)
    resolved = {node: classes.resolve(i) for i, node in enumerate(nodes)}
    roots = [node for i, node in enumerate(nodes) if resolved[node] == {i: ONE}]

    def project(node: Node) -> dict[Node, Any]:
        return {nodes[r]: w for r, w in resolved[node].items()}

    def differential(node: Node) -> dict:
        out: dict = {}
        for target, value in _node_d(F, node).items():
            add_into(out, project(target), value)
        return out

    keyed = keyed_complex(roots, lambda node: _node_degree(F, node), str, differential)
    return GlobalSections(keyed=keyed, classes={node: project(node) for node in nodes})


def _linear_colimit(
    F: RanModule, nodes: list[Node], index: dict[Node, int], relations: list
) -> GlobalSections:
    total = keyed_complex(nodes, lambda node: _node_degree(F, node), str, lambda n: _node_d(F, n))
    space = total.complex.space
    spans: dict[int, list[dict[int, Any]]] = {p: [] for p in space.degrees}
    for i, image in relations:
        node = nodes[i]
        p = _node_degree(F, node)
        vec = {total.index[node]: ONE}
        for j, c in image.items():
            add_into(vec, {total.index[nodes[j]]: c}, -1)
        spans[p].append({space.locate(a)[1]: v for a, v in vec.items()})
    small = {p: from_columns(columns, space.dim(p)) for p, columns in spans.items()}
    whole = {p: Matrix.eye(space.dim(p)) for p in space.degrees}
    quotient = subquotient(total.complex, whole, small, name="Γ")
    keys = quotient.complex.space.flat_labels
    keyed = KeyedComplex(complex=quotient.complex, keys=keys)
    classes = {}
    for node in nodes:
        p, i = space.locate(total.index[node])
        unit = zeros(space.dim(p), 1)
        unit[i, 0] = 1
        coords = quotient.project(p, unit)
        offset = quotient.complex.space.offsets.get(p, 0)
        classes[node] = {
            keys[offset + r]: coords[r, 0] for r in range(coords.rows) if coords[r, 0] != 0
        }
    return GlobalSections(keyed=keyed, classes=classes, monomial=False)


def global_sections(F: RanModule) -> GlobalSections:
    """Colimit of the diagram [n] -> Γ(X^[n], F_[n]) over the skeleton up to the cutoff.

    Relations x ~ θ^(π)(x) are merged by a weighted union-find when every structure map sends
    a key to a multiple of a single key, and by linear algebra otherwise. `stable` reports
    whether dropping the top object changes the dimensions.

    Examples:
        >>> X = FiniteSpace(points=("p", "q"))
        >>> line = zero_complex(GradedSpace(components={0: ("v",)}))
        >>> global_sections(delta_pushforward(X, {"p": line, "q": line}, 2)).complex.dims()
        {0: 2}
    """
    with logfire.span("global sections", cutoff=F.cutoff, points=len(F.space.points)):
        top = _colimit(F, F.cutoff)
        stable = None
        if F.cutoff > 1:
            below = _colimit(F, F.cutoff - 1)
            stable = below.complex.dims() == top.complex.dims()
        logfire.debug("colimit", dims=top.complex.dims(), stable=stable, monomial=top.monomial)
        return top.model_copy(update={"stable": stable})


def admissibility_witness(F: RanModule) -> Optional[dict[str, Any]]:
    """First (π, y) where θ^(π) is not a quasi-isomorphism Δ^(π)! F_[m] -> F_[n], or None."""
    for pi, y in F.pairs():
        source = F.restrict_to_diagonal(pi, y)
        outside = [key for key in source.keys if F.image(pi, y, key) is None]
        if outside:
            return {"pi": str(pi), "point": y, "reason": "partial", "key": str(outside[0])}
        target = F.fiber(pi.target, y)
        if not is_quasi_iso(F.transition(pi, y), source.complex, target.complex):
            return {"pi": str(pi), "point": y, "reason": "not a quasi-isomorphism"}
    return None


def admissible(F: RanModule) -> bool:
    witness = admissibility_witness(F)
    if witness is not None:
        logfire.info("not admissible", **witness)
    return witness is None


def _sections_dims(F: RanModule) -> dict[int, int]:
    return {p: d for p, d in global_sections(F).complex.dims().items() if d}


def _tensor_dims(a: Mapping[int, int], b: Mapping[int, int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for (p, u), (q, v) in product(a.items(), b.items()):
        out[p + q] = out.get(p + q, 0) + u * v
    return {p: d for p, d in out.items() if d}


def monoidality_check(F: RanModule, G: RanModule) -> bool:
    """Γ(F ⊗* G) and Γ(F) ⊗ Γ(G) have the same dimension in every degree."""
    return _sections_dims(convolution(F, G)) == _tensor_dims(_sections_dims(F), _sections_dims(G))


def tensor_functor_check(
    M: Mapping[str, Complex], N: Mapping[str, Complex], X: FiniteSpace, cutoff: int
) -> bool:
    """Δ_*(M ⊗ N) against Δ_* M ⊗* Δ_* N, point by point on the global sections."""
    for p in X.points:
        if p not in M or p not in N:
            continue
        here = FiniteSpace(points=(p,))
        left = betti(M[p])
        right = betti(N[p])
        product_dims = _tensor_dims(
            {q: d for q, d in left.items() if d}, {q: d for q, d in right.items() if d}
        )
        conv = convolution(
            delta_pushforward(here, {p: M[p]}, cutoff), delta_pushforward(here, {p: N[p]}, cutoff)
        )
        got = {q: d for q, d in betti(global_sections(conv).complex).items() if d}
        if got != product_dims:
            logfire.info("tensor functor check failed", point=p, got=got, expected=product_dims)
            return False
    return True

"""Jacobi complexes over the finite Ran model and the universal deformation algebras R^u_n.

J_n(g) is built fiber by fiber. Over a point x of X^[k] a basis key is a partition of [k] into
at most n blocks, x constant on every block, with one suspended letter of g_x per block. Blocks
are ordered by their minimum, which picks one summand from each orbit of the symmetric group
acting on the convolution power. Global sections are then identified with the reduced
Chevalley complex of the product of the g_x, and everything downstream (R^u_n, the tower,
moduli modules) is read off that identification.
"""

from typing import Any, Optional
from functools import cached_property
from itertools import product, combinations
from collections.abc import Hashable, Mapping

import logfire
from sympy import Matrix, Rational, factorial
from pydantic import BaseModel, ConfigDict, model_validator

from src.sdk.artin import AlgebraMorphism, ArtinLocalAlgebra, rationals, artin_from_table
from src.sdk.chevalley import (
    Word,
    ChevalleyComplex,
    reduced_chevalley,
    chevalley_with_coefficients,
)
from src.sdk.dg_lie import (
    DgLieAlgebra,
    DgLieModule,
    check_mc,
    validate_module,
    direct_sum_lie,
    direct_sum_index,
)
from src.sdk.graded import (
    ChainMap,
    KeyedComplex,
    CohomologyGroup,
    cohomology,
    keyed_complex,
    map_from_rule,
    check_chain_map,
)
from src.sdk.linalg import rank, zeros, add_into
from src.sdk.ran import (
    Point,
    RanModule,
    FiniteSpace,
    FinSurjection,
    GlobalSections,
    set_partitions,
    global_sections,
    admissibility_witness,
)
from src.sdk.runtime import ordered_map
from src.sdk.signs import koszul, extraction_sign, permutation_sign
from src.types.errors import (
    AxiomFail,
    NotAModule,
    NotChainMap,
    ShapeMismatch,
    NotMaurerCartan,
)

Blocks = tuple[tuple[int, ...], ...]
JacobiKey = tuple[Blocks, tuple[int, ...]]


def _fiber(
    algebras: Mapping[str, DgLieAlgebra], n: int, k: int, x: Point
) -> Optional[KeyedComplex]:
    keys: list[JacobiKey] = []
    for blocks in set_partitions(k):
        if len(blocks) > n:
            continue
        points = [x[block[0] - 1] for block in blocks]
        if any(x[j - 1] != p for block, p in zip(blocks, points) for j in block):
            continue
        if any(p not in algebras for p in points):
            continue
        for letters in product(*(range(algebras[p].dim) for p in points)):
            keys.append((blocks, letters))
    if not keys:
        return None

    def shifted(key: JacobiKey) -> list[int]:
        blocks, letters = key
        return [algebras[x[b[0] - 1]].degrees[a] - 1 for b, a in zip(blocks, letters)]

    def differential(key: JacobiKey) -> dict:
        blocks, letters = key
        points = [x[b[0] - 1] for b in blocks]
        degrees = shifted(key)
        parities = [p % 2 for p in degrees]
        out: dict = {}
        passed = 0
        for i, (p, a) in enumerate(zip(points, letters)):
            sign = koszul(passed, 1)
            for t, v in algebras[p].complex.sparse_d[a].items():
                add_into(out, {(blocks, letters[:i] + (t,) + letters[i + 1 :]): -sign * v})
            passed += degrees[i]
        for i, j in combinations(range(len(blocks)), 2):
            if points[i] != points[j]:
                continue
            g = algebras[points[i]]
            image = g.table.get((letters[i], letters[j]))
            if not image:
                continue
            sign = extraction_sign(parities, (i, j)) * koszul(g.degrees[letters[i]], 1)
            rest = [r for r in range(len(blocks)) if r not in (i, j)]
            merged = tuple(sorted(blocks[i] + blocks[j]))
            new_blocks = (
                tuple(blocks[r] for r in rest[:i]) + (merged,) + tuple(blocks[r] for r in rest[i:])
            )
            before = sum(parities[r] for r in rest[:i])
            for z, c in image.items():
                move = koszul(g.degrees[z] - 1, before)
                new_letters = (
                    tuple(letters[r] for r in rest[:i])
                    + (z,)
                    + tuple(letters[r] for r in rest[i:])
                )
                add_into(out, {(new_blocks, new_letters): sign * move * c})
        return out

    def label(key: JacobiKey) -> str:
        blocks, letters = key
        return "·".join(
            f"s{algebras[x[b[0] - 1]].labels[a]}{{{','.join(map(str, b))}}}"
            for b, a in zip(blocks, letters)
        )

    return keyed_complex(keys, lambda key: sum(shifted(key)), label, differential)


def _theta(algebras: Mapping[str, DgLieAlgebra]):
    def theta(sigma: FinSurjection, y: Point, key: Hashable) -> Optional[dict]:
        blocks, letters = key
        owner = {j: b for b, block in enumerate(blocks) for j in block}
        if not sigma.factors([owner[j] for j in range(1, sigma.source + 1)]):
            return None
        images = [tuple(sorted({sigma(j) for j in block})) for block in blocks]
        order = sorted(range(len(blocks)), key=lambda b: images[b][0])
        parities = [
            (algebras[y[images[b][0] - 1]].degrees[a] - 1) % 2 for b, a in enumerate(letters)
        ]
        moved = (tuple(images[b] for b in order), tuple(letters[b] for b in order))
        return {moved: permutation_sign(parities, order)}

    return theta


class JacobiComplex(BaseModel):
    """J_n(g) as a Ran complex, with its global sections and their Chevalley description."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    space: FiniteSpace
    algebras: dict[str, DgLieAlgebra]
    n: int
    ran: RanModule

    @cached_property
    def summands(self) -> tuple[str, ...]:
        return tuple(p for p in self.space.points if p in self.algebras)

    @cached_property
    def global_algebra(self) -> DgLieAlgebra:
        """The product of the g_x over the points of X."""
        return direct_sum_lie([self.algebras[p] for p in self.summands])

    @cached_property
    def letter_index(self) -> dict[tuple[str, int], int]:
        family = [self.algebras[p] for p in self.summands]
        return {
            (self.summands[s], i): flat for (s, i), flat in direct_sum_index(family).items()
        }

    @cached_property
    def chevalley(self) -> ChevalleyComplex:
        return reduced_chevalley(self.global_algebra, self.n)

    @cached_property
    def sections(self) -> GlobalSections:
        return global_sections(self.ran)

    @cached_property
    def admissibility(self) -> Optional[dict[str, Any]]:
        return admissibility_witness(self.ran)

    def word_of(self, node: Hashable) -> Optional[tuple[int, Word]]:
        """Signed Chevalley word of a basis node (k, x, (blocks, letters))."""
        _, x, (blocks, letters) = node
        glob = [self.letter_index[(x[b[0] - 1], a)] for b, a in zip(blocks, letters)]
        return self.chevalley.normalize(glob)

    @cached_property
    def identification(self) -> ChainMap:
        """Γ(X^S, J_n(g)) -> C̄(⊕_x g_x)_n, checked to be an isomorphism of complexes."""
        G, C = self.sections.keyed, self.chevalley.keyed

        def rule(index: int) -> dict:
            found = self.word_of(G.keys[index])
            if found is None:
                return {}
            sign, word = found
            return {C.index[word]: sign}

        f = map_from_rule(G.complex.space, C.complex.space, rule)
        check_chain_map(f, G.complex, C.complex)
        if G.complex.dims() != C.complex.dims() or any(
            rank(f.block(p)) != G.complex.space.dim(p) for p in G.complex.degrees
        ):
            raise AxiomFail(
                "global sections differ from the Chevalley complex",
                sections=G.complex.dims(),
                chevalley=C.complex.dims(),
            )
        return f


def jacobi_complex(
    X: FiniteSpace, g: Mapping[str, DgLieAlgebra], n: int, cutoff: Optional[int] = None
) -> JacobiComplex:
    """J_n(g) = C̄(Δ_*^(S) g)_n over the objects [k], k <= cutoff (default n + 1).

    Examples:
        >>> from src.sdk.graded import GradedSpace, zero_complex
        >>> g = DgLieAlgebra(complex=zero_complex(GradedSpace(components={1: ("a", "b")})))
        >>> J = jacobi_complex(FiniteSpace(points=("p",)), {"p": g}, 2)
        >>> J.sections.complex.dims()
        {0: 5}
    """
    if n < 1:
        raise ShapeMismatch("Jacobi complexes need n >= 1", n=n)
    if any(p not in X.points for p in g):
        raise ShapeMismatch("algebra over an unknown point", points=sorted(g))
    cutoff = n + 1 if cutoff is None else cutoff
    objects = [(k, x) for k in range(1, cutoff + 1) for x in X.power(k)]
    with logfire.span("Jacobi complex", n=n, cutoff=cutoff, points=len(X.points)):
        built = ordered_map(lambda obj: _fiber(g, n, *obj), objects)
        fibers = {obj: fiber for obj, fiber in zip(objects, built) if fiber is not None}
        ran = RanModule(space=X, cutoff=cutoff, fibers=fibers, theta=_theta(g)).check()
    return JacobiComplex(space=X, algebras=dict(g), n=n, ran=ran)


def _degree_zero(C: ChevalleyComplex) -> tuple[list[Word], Optional[CohomologyGroup]]:
    space = C.complex.space
    words = [C.keyed.keys[space.flat(0, i)] for i in range(space.dim(0))]
    group = cohomology(C.complex).get(0) if words else None
    return words, group


def class_functionals(C: ChevalleyComplex) -> list[dict[Word, Any]]:
    """Cocycles on degree-0 words dual to the classes of H^0(C̄), one per class."""
    words, group = _degree_zero(C)
    if group is None:
        return []
    return [
        {w: group.projection[k, r] for r, w in enumerate(words) if group.projection[k, r] != 0}
        for k in range(group.dim)
    ]


def class_representatives(C: ChevalleyComplex) -> list[dict[Word, Any]]:
    words, group = _degree_zero(C)
    if group is None:
        return []
    reps = group.representatives
    return [
        {w: reps[r, k] for r, w in enumerate(words) if reps[r, k] != 0} for k in range(group.dim)
    ]


def deformation_algebra(C: ChevalleyComplex) -> ArtinLocalAlgebra:
    """Q + H^0(C̄)^* with the product dual to the reduced coproduct."""
    phis, reps = class_functionals(C), class_representatives(C)
    h = len(phis)
    if not h:
        return rationals()
    values: dict[Word, dict[int, Any]] = {}
    for k, phi in enumerate(phis):
        for w, value in phi.items():
            values.setdefault(w, {})[k] = value
    table: dict[tuple[int, int], dict[int, Any]] = {(0, i): {i: Rational(1)} for i in range(h + 1)}
    for k, z in enumerate(reps):
        for w, zc in z.items():
            for (u, v), sign in C.coproduct(w, reduced=True).items():
                if C.degree(u) != 0:
                    continue
                pairs = product(values.get(u, {}).items(), values.get(v, {}).items())
                for (i, a), (j, b) in pairs:
                    add_into(table.setdefault((1 + i, 1 + j), {}), {1 + k: zc * sign * a * b})
    table = {pair: image for pair, image in table.items() if image}
    labels = ("1",) + tuple(f"φ{k}" for k in range(h))
    A = artin_from_table(labels, table)
    if A.exponent > C.n:
        raise AxiomFail(
            "deformation algebra exceeds the expected exponent", exponent=A.exponent, n=C.n
        )
    return A


def universal_deformation_algebra(
    X: FiniteSpace, g: Mapping[str, DgLieAlgebra], n: int
) -> ArtinLocalAlgebra:
    """R^u_n(g) = Q + (H^0 Γ(X^S, J_n(g)))^*."""
    J = jacobi_complex(X, g, n)
    J.identification
    R = deformation_algebra(J.chevalley)
    logfire.info("universal deformation algebra", n=n, dim=R.dim, exponent=R.exponent)
    return R


class UdrTower(BaseModel):
    """R^u_1 <- R^u_2 <- ... with the surjections dual to the filtration inclusions."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    algebras: tuple[ArtinLocalAlgebra, ...]
    maps: tuple[AlgebraMorphism, ...]

    @model_validator(mode="after")
    def _check_surjective(self) -> "UdrTower":
        for n, f in enumerate(self.maps, start=1):
            if not f.is_surjective():
                raise AxiomFail("tower map is not surjective", source=n + 1, target=n)
        return self


def udr_system(X: FiniteSpace, g: Mapping[str, DgLieAlgebra], n_max: int) -> UdrTower:
    if n_max < 1:
        raise ShapeMismatch("the tower starts at n = 1", n_max=n_max)
    complexes = []
    for n in range(1, n_max + 1):
        J = jacobi_complex(X, g, n)
        J.identification
        complexes.append(J.chevalley)
    algebras = [deformation_algebra(C) for C in complexes]
    maps = []
    for n in range(1, n_max):
        small, big = complexes[n - 1], complexes[n]
        reps, phis = class_representatives(small), class_functionals(big)
        matrix = zeros(algebras[n - 1].dim, algebras[n].dim)
        matrix[0, 0] = 1
        for k, z in enumerate(reps):
            for i, phi in enumerate(phis):
                matrix[1 + k, 1 + i] = sum((c * phi.get(w, 0) for w, c in z.items()), Rational(0))
        maps.append(AlgebraMorphism(source=algebras[n], target=algebras[n - 1], matrix=matrix))
    return UdrTower(algebras=tuple(algebras), maps=tuple(maps))


def _global_module(J: JacobiComplex, V: Mapping[str, DgLieModule]) -> DgLieModule:
    if any(p not in J.algebras for p in V):
        raise ShapeMismatch("module over a point without an algebra", points=sorted(V))
    present = [p for p in J.summands if p in V]
    keys = [(p, m) for p in present for m in range(V[p].dim)]
    keyed = keyed_complex(
        keys,
        degree=lambda key: V[key[0]].degrees[key[1]],
        label=lambda key: f"{V[key[0]].labels[key[1]]}#{key[0]}",
        differential=lambda key: {
            (key[0], t): v for t, v in V[key[0]].complex.sparse_d[key[1]].items()
        },
    )
    action: dict[tuple[int, int], dict[int, Any]] = {}
    for p in present:
        for (i, m), image in V[p].action.items():
            action[(J.letter_index[(p, i)], keyed.index[(p, m)])] = {
                keyed.index[(p, t)]: c for t, c in image.items()
            }
    module = DgLieModule(algebra=J.global_algebra, complex=keyed.complex, action=action)
    return validate_module(module)


def jacobi_with_coefficients(
    X: FiniteSpace, g: Mapping[str, DgLieAlgebra], V: Mapping[str, DgLieModule], n: int
) -> KeyedComplex:
    """J_n(g, V) through its global sections C̄(⊕ g_x, ⊕ V_x)_n."""
    J = jacobi_complex(X, g, n)
    J.identification
    return chevalley_with_coefficients(J.global_algebra, _global_module(J, V), n)


class ModuliModule(BaseModel):
    """H(M_n(g, V)) as a module over R^u_n; `action[r][p]` is the matrix of r on H^p."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    ring: ArtinLocalAlgebra
    keyed: KeyedComplex
    groups: dict[int, CohomologyGroup]
    action: tuple[dict[int, Matrix], ...]

    @model_validator(mode="after")
    def _check_module(self) -> "ModuliModule":
        R = self.ring
        for p, group in self.groups.items():
            if self.action[0][p] != Matrix.eye(group.dim):
                raise NotAModule("unit does not act as the identity", degree=p)
            for i, j in product(range(R.dim), repeat=2):
                lhs = self.action[i][p] * self.action[j][p]
                rhs = zeros(group.dim, group.dim)
                for k, c in R.product(i, j).items():
                    rhs += c * self.action[k][p]
                if lhs != rhs:
                    raise NotAModule(
                        "action is not associative", pair=(R.labels[i], R.labels[j]), degree=p
                    )
        return self


def moduli_module(
    X: FiniteSpace, g: Mapping[str, DgLieAlgebra], V: Mapping[str, DgLieModule], n: int
) -> ModuliModule:
    """M_n(g, V) = Γ(X^S, J_n(g, V)) with R^u_n acting through the coproduct on the g-factor."""
    J = jacobi_complex(X, g, n)
    J.identification
    C = J.chevalley
    R = deformation_algebra(C)
    phis = class_functionals(C)
    M = chevalley_with_coefficients(J.global_algebra, _global_module(J, V), n)
    into: dict[Word, list[tuple[Word, Word, Any]]] = {}
    for w in C.words:
        for (u, v), sign in C.coproduct(w, reduced=True).items():
            into.setdefault(v, []).append((w, u, sign))

    def cochain_action(phi: Mapping[Word, Any]) -> ChainMap:
        def rule(index: int) -> dict:
            w0, m = M.keys[index]
            out: dict = {}
            for w, u, sign in into.get(w0, []):
                if u in phi:
                    add_into(out, {M.index[(w, m)]: sign * phi[u]})
            return out

        f = map_from_rule(M.complex.space, M.complex.space, rule)
        try:
            check_chain_map(f, M.complex, M.complex)
        except NotChainMap as e:
            raise NotAModule("class does not act by a chain map", **e.witness) from e
        return f

    H = cohomology(M.complex)
    action = [{p: Matrix.eye(group.dim) for p, group in H.items()}]
    for phi in phis:
        f = cochain_action(phi)
        action.append(
            {p: group.classify(f.block(p) * group.representatives) for p, group in H.items()}
        )
    return ModuliModule(ring=R, keyed=M, groups=H, action=tuple(action))


def _multiply(
    C: ChevalleyComplex,
    A: ArtinLocalAlgebra,
    left: Mapping[Word, dict],
    right: Mapping[Word, dict],
) -> dict[Word, dict[int, Any]]:
    out: dict[Word, dict[int, Any]] = {}
    for (u, a), (v, b) in product(left.items(), right.items()):
        if len(u) + len(v) > C.n:
            continue
        moved = C.normalize(u + v)
        if moved is None:
            continue
        value = A.mul(a, b)
        if value:
            add_into(out.setdefault(moved[1], {}), value, moved[0])
    return {w: value for w, value in out.items() if value}


def classifying_map(
    X: FiniteSpace,
    g: Mapping[str, DgLieAlgebra],
    n: int,
    alpha: Mapping[int, Any],
    A: ArtinLocalAlgebra,
) -> AlgebraMorphism:
    """The base map R^u_n -> A of the deformation given by an MC element of (⊕ g_x) ⊗ m_A.

    A class φ of R^u_n is sent to φ(e^(sα) - 1), evaluated word by word.
    """
    J = jacobi_complex(X, g, n)
    J.identification
    L, C = J.global_algebra, J.chevalley
    if not check_mc(L, alpha, A):
        raise NotMaurerCartan("element does not solve the Maurer-Cartan equation")
    R = deformation_algebra(C)
    s_alpha: dict[Word, dict[int, Any]] = {}
    for index, value in alpha.items():
        i, k = divmod(index, A.dim)
        add_into(s_alpha.setdefault((i,), {}), {k: value})
    exponential: dict[Word, dict[int, Any]] = {}
    power: dict[Word, dict[int, Any]] = {(): dict(A.unit)}
    for k in range(1, n + 1):
        power = _multiply(C, A, power, s_alpha)
        for w, value in power.items():
            add_into(exponential.setdefault(w, {}), value, Rational(1, factorial(k)))
    matrix = zeros(A.dim, R.dim)
    matrix[:, 0] = A.unit_column()
    for k, phi in enumerate(class_functionals(C)):
        image: dict[int, Any] = {}
        for w, c in phi.items():
            add_into(image, exponential.get(w, {}), c)
        for r, value in image.items():
            matrix[r, 1 + k] = value
    return AlgebraMorphism(source=R, target=A, matrix=matrix)

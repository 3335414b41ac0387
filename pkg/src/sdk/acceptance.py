"""The acceptance scoreboard run by `selftest`.

Every criterion is a function of a `Suite` returning a one-line deterministic detail; a
`ValidationFailure` raised inside it marks the criterion as failed with the failure's text.
"""

from math import factorial
from random import Random
from functools import cached_property
from collections.abc import Callable, Mapping, Sequence

import logfire
from sympy import Matrix
from pydantic import BaseModel, ConfigDict

from src.sdk.bv import check_bv, rigidity_check, bv_from_chevalley
from src.sdk.ran import (
    FiniteSpace,
    surjections,
    delta_pushforward,
    monoidality_check,
    tensor_functor_check,
)
from src.sdk.artin import ArtinLocalAlgebra, dual_numbers, match_generators, truncated_polynomial
from src.sdk.dg_lie import (
    DgLieAlgebra,
    twist,
    check_mc,
    random_mc,
    adjoint_module,
    extend_scalars,
    trivial_module,
    identity_morphism,
    random_nilpotent_lie,
)
from src.sdk.graded import GradedSpace, betti, decalage, rank_betti, zero_complex
from src.sdk.jacobi import udr_system, jacobi_complex
from src.sdk.linalg import solve, zeros, hstack, same_span
from src.sdk.loader import Workspace, load_document
from src.sdk.runtime import runtime
from src.sdk.algebroid import derivations, twisted_enveloping
from src.sdk.chevalley import (
    chevalley,
    counit_defect,
    coassociativity_defect,
    cocommutativity_defect,
    filtration_matches_length,
    chevalley_with_coefficients,
    chevalley_eilenberg_oracle,
)
from src.sdk.connecting import les_coboundary, connecting_morphism
from src.sdk.resolution import CoverDatum, constant_cover, dolbeault_check
from src.sdk.deformation import (
    LieSheaf,
    DeformationDatum,
    higher_ks,
    equivalence,
    classical_ks,
    resolve_datum,
    glued_sections,
    derivation_sheaf,
    class_to_deformation,
)
from src.types.errors import AxiomFail, SquareNonzero, NotMaurerCartan, ValidationFailure

BETTI = {
    "sl2": {-3: 1, -2: 0, -1: 0, 0: 1},
    "h3": {-3: 1, -2: 2, -1: 2, 0: 1},
}


def require(condition: bool, message: str, **witness: object) -> None:
    if not condition:
        raise AxiomFail(message, **witness)


def stirling(m: int, n: int) -> int:
    """Stirling numbers of the second kind.

    Examples:
        >>> [stirling(4, k) for k in range(1, 5)]
        [1, 7, 6, 1]
    """
    if m == n:
        return 1
    if n == 0 or n > m:
        return 0
    return n * stirling(m - 1, n) + stirling(m - 1, n - 1)


def same_maps(a: Mapping[int, Matrix], b: Mapping[int, Matrix]) -> bool:
    """Equal per degree, a degree missing on one side counting as the zero map."""
    for p in set(a) | set(b):
        if p in a and p in b:
            if a[p] != b[p]:
                return False
        elif not (a[p] if p in a else b[p]).is_zero_matrix:
            return False
    return True


def fixture(name: str) -> Workspace:
    document, stem = load_document(name)
    return Workspace(document=document, name=stem)


def gluing(
    theta: LieSheaf, edge: tuple[str, ...], operator: Matrix, base: ArtinLocalAlgebra, scale: int
) -> Matrix:
    """operator ⊗ scale·t in the derivation basis of `edge`, t the first ideal generator."""
    ops = theta.operator(edge)
    size = operator.rows * operator.cols
    frame = hstack(*[X.reshape(size, 1) for X in ops], rows=size)
    coords = solve(frame, operator.reshape(size, 1))
    if coords is None:
        raise AxiomFail("gluing operator is not a derivation", edge=",".join(edge))
    out = zeros(len(ops), base.dim)
    out[:, 1] = scale * coords
    return out


def _diagonal_operator(*entries: int) -> Matrix:
    out = zeros(len(entries), len(entries))
    for i, value in enumerate(entries):
        out[i, i] = value
    return out


class Suite(BaseModel):
    """Inputs shared by the criteria: the seed, the form window and the regression objects."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    seed: int = 0
    poly_degree: int = 3

    @cached_property
    def regression(self) -> dict[str, DgLieAlgebra]:
        return {
            "sl2": fixture("sl2").algebra(),
            "h3": fixture("heisenberg").algebra(),
            "arrow": fixture("arrow").algebra(),
            "odd_plane": fixture("odd_plane").algebra(),
            "odd": fixture("odd_mc").algebra(),
        }

    @cached_property
    def covers(self) -> dict[str, CoverDatum]:
        return {"loop": fixture("loop").cover(), "pinched": fixture("pinched").cover()}

    @cached_property
    def recorded(self) -> dict[str, "Outcome"]:
        return {}

    def seeds(self, count: int) -> range:
        return range(self.seed, self.seed + count)

    def family(
        self, cover: str, operator: Matrix, base: ArtinLocalAlgebra, scale: int = 1
    ) -> DeformationDatum:
        theta = derivation_sheaf(self.covers[cover])
        edge = ("a", "b")
        return DeformationDatum(
            theta=theta, base=base, gluing={edge: gluing(theta, edge, operator, base, scale)}
        )


class Outcome(BaseModel):
    model_config = ConfigDict(frozen=True)
    key: str
    name: str
    passed: bool
    detail: str


Check = Callable[[Suite], str]
CRITERIA: dict[str, tuple[str, Check]] = {}


def criterion(key: str, name: str) -> Callable[[Check], Check]:
    def register(func: Check) -> Check:
        CRITERIA[key] = (name, func)
        return func

    return register


@criterion("01", "Chevalley axioms on seeded algebras")
def axiom_suite(suite: Suite) -> str:
    words = 0
    for k, seed in enumerate(suite.seeds(50)):
        n = 1 + k % 3
        C = chevalley(random_nilpotent_lie(seed), n)
        square = C.square_defect()
        if square is not None:
            raise SquareNonzero(f"{square} is nonzero", seed=seed, n=n)
        for name, found in (
            ("coassociativity", coassociativity_defect(C)),
            ("cocommutativity", cocommutativity_defect(C)),
            ("counit", counit_defect(C)),
        ):
            if found is not None:
                raise AxiomFail(f"{name} fails", seed=seed, n=n, word=C.label(found))
        words += len(C.words)
    return f"50 algebras, n = 1..3, {words} words, all three squares vanish"


@criterion("02", "classical cohomology oracles")
def classical_oracles(suite: Suite) -> str:
    parts = []
    for name, expected in BETTI.items():
        L = suite.regression[name]
        C = chevalley(L, 3).complex
        require(betti(C) == expected, "Betti numbers differ", algebra=name, got=betti(C))
        require(rank_betti(C) == expected, "rank oracle differs", algebra=name)
        M = adjoint_module(L) if name == "sl2" else trivial_module(L)
        ours = betti(chevalley_with_coefficients(L, M, 3).complex)
        theirs = betti(chevalley_eilenberg_oracle(L, M, 3))
        require(ours == theirs, "module pipeline differs from the oracle", algebra=name)
        parts.append(f"{name} {[expected[p] for p in sorted(expected, reverse=True)]}")
    return ", ".join(parts)


@criterion("03", "décalage")
def decalage_suite(suite: Suite) -> str:
    count = 0
    for L in suite.regression.values():
        for k in range(1, 4):
            decalage(L.complex, k)
            count += 1
    return f"{count} isomorphisms"


@criterion("04", "coproduct filtration is word length")
def filtration_suite(suite: Suite) -> str:
    plan = {"sl2": 2, "h3": 2, "arrow": 3, "odd_plane": 3}
    for name, n in plan.items():
        require(filtration_matches_length(chevalley(suite.regression[name], n)), name, n=n)
    return ", ".join(f"{name} n={n}" for name, n in plan.items())


@criterion("05", "Ran layer")
def ran_suite(suite: Suite) -> str:
    for m in range(1, 7):
        for n in range(1, 7):
            count = len(surjections(m, n))
            require(count == factorial(n) * stirling(m, n), "surjection count", m=m, n=n)
    line = zero_complex(GradedSpace(components={0: ("v",)}))
    plane = zero_complex(GradedSpace(components={1: ("a", "b")}))
    for points in (("p",), ("p", "q"), ("p", "q", "r")):
        X = FiniteSpace(points=points)
        M = {x: (line, plane)[i % 2] for i, x in enumerate(points)}
        N = {x: (plane, line)[i % 2] for i, x in enumerate(points)}
        require(
            tensor_functor_check(M, {x: plane for x in points}, X, 3),
            "tensor functor identity fails",
            points=len(points),
        )
        F, G = delta_pushforward(X, M, 3), delta_pushforward(X, N, 3)
        require(monoidality_check(F, G), "global sections are not monoidal", points=len(points))
    sl2 = suite.regression["sl2"]
    J = jacobi_complex(FiniteSpace(points=("p",)), {"p": sl2}, 2)
    J.identification
    sections = betti(J.sections.complex)
    require(sections == betti(J.chevalley.complex), "Jacobi sections differ from C̄(sl2)")
    dims = J.sections.complex.dims()
    return f"36 surjection counts, |X| = 1..3, cutoff 3, Γ(J_2(sl2)) = {dims}"


@criterion("06", "universal deformation algebras")
def udr_suite(suite: Suite) -> str:
    tower = udr_system(FiniteSpace(points=("p",)), {"p": suite.regression["odd_plane"]}, 3)
    dims = [A.dim for A in tower.algebras]
    require(dims == [3, 6, 10], "tower dimensions", dims=dims)
    for n, R in enumerate(tower.algebras, start=1):
        found = match_generators(R, truncated_polynomial(("x", "y"), n))
        require(found is not None, "no isomorphism with Q[x, y]/m^(n+1)", n=n)
    require(all(f.is_surjective() for f in tower.maps), "tower maps are not surjective")
    return f"dims {dims}"


@criterion("07", "Maurer-Cartan and twisting")
def mc_suite(suite: Suite) -> str:
    A = truncated_polynomial(("t",), 2)
    for seed in suite.seeds(8):
        g = random_nilpotent_lie(seed)
        alpha = random_mc(g, A, seed)
        require(check_mc(g, alpha, A), "seeded element is not Maurer-Cartan", seed=seed)
        h = twist(extend_scalars(g, A), alpha)
        require((h.d_matrix() ** 2).is_zero_matrix, "twisted differential squares", seed=seed)
        untwisted = twist(g, {})
        require(
            untwisted.complex.sparse_d == g.complex.sparse_d and untwisted.table == g.table,
            "twisting by zero changed the algebra",
            seed=seed,
        )
    odd = suite.regression["odd"]
    require(not check_mc(odd, {0: 1}), "[x, x] = y was accepted")
    try:
        twist(odd, {0: 1})
    except NotMaurerCartan:
        pass
    else:
        raise AxiomFail("twist accepted a non-solution")
    return "8 seeded elements over Q[t]/(t^3), one rejected non-solution"


@criterion("08", "Thom-Sullivan against Čech")
def resolution_suite(suite: Suite) -> str:
    covers = {
        "circle": constant_cover(("a", "b", "c"), [("a", "b"), ("a", "c"), ("b", "c")]),
        "triangle": constant_cover(("a", "b", "c"), [("a", "b", "c")]),
        "path": constant_cover(("a", "b", "c"), [("a", "b"), ("b", "c")]),
    }
    parts = []
    for name, cover in covers.items():
        report = dolbeault_check(cover, suite.poly_degree)
        require(report.passed, "resolution differs from Čech", cover=name)
        parts.append(f"{name} {report.thom_sullivan}")
    return f"D = {suite.poly_degree}: " + ", ".join(parts)


@criterion("09", "class to deformation and back")
def deformation_suite(suite: Suite) -> str:
    rng = Random(suite.seed)
    plan = [
        ("loop", _diagonal_operator(0, 1, 0, 0), False),
        ("loop", _diagonal_operator(0, 1, 0, 1), True),
        ("pinched", Matrix([[0, 0], [0, 1]]), False),
    ]
    checked = trivial = 0
    for k in (1, 2):
        base = dual_numbers(k, "t")
        for cover, operator, coboundary in plan:
            for _ in range(2):
                scale = rng.choice((-2, -1, 1, 2, 3))
                datum = suite.family(cover, operator, base, scale)
                lie, coords = resolve_datum(datum)
                deformed = class_to_deformation(lie, coords)
                algebras = suite.covers[cover].algebras
                for x, size in deformed.local.items():
                    require(size == base.dim * algebras[(x,)].dim, "not flat", open=x)
                require(
                    same_span(glued_sections(datum), deformed.vertex_values()),
                    "sections differ from the glued ones",
                    cover=cover,
                    order=k,
                )
                if coboundary:
                    found = equivalence(lie, coords, {})
                    require(found is not None, "coboundary gluing is not gauge trivial")
                    trivial += 1
                checked += 1
    return f"{checked} data of order 1 and 2, {trivial} gauge trivial"


def _unit_span(g: DgLieAlgebra, labels: Sequence[str]) -> Matrix:
    span = zeros(g.dim, len(labels))
    for k, label in enumerate(labels):
        span[g.space.index_of(label), k] = 1
    return span


@criterion("10", "connecting morphism against the snake lemma")
def connecting_suite(suite: Suite) -> str:
    ideals = non_central = 0
    for seed in suite.seeds(10):
        g = random_nilpotent_lie(seed)
        center = [x for x in g.labels if x.startswith("z")]
        for labels in (center, ["v0", "w"] + center):
            span = _unit_span(g, labels)
            c = connecting_morphism(g, span, 2)
            require(c.tilde.factor_defect() is None, "c̃ is not twisting", seed=seed)
            found = c.coproduct_defect(2)
            require(
                found is None,
                "Δ∘c differs from (c⊗c)∘Δ",
                seed=seed,
                word=None if found is None else c.source.label(found),
            )
            require(
                same_maps(c.on_cohomology(), les_coboundary(g, span)),
                "first component differs from the coboundary",
                seed=seed,
            )
            ideals += 1
        v0 = {g.space.index_of("v0"): 1}
        non_central += any(g.bracket(v0, {i: 1}) for i in range(g.dim))
    return f"{ideals} ideals at N = 2, {non_central} of them non-central"


@criterion("11", "higher Kodaira-Spencer maps")
def ks_suite(suite: Suite) -> str:
    dual = dual_numbers(1, "t")
    data = {
        "one sheet": suite.family("loop", _diagonal_operator(0, 1, 0, 0), dual),
        "both sheets": suite.family("loop", _diagonal_operator(0, 1, 0, 1), dual),
        "trivial": DeformationDatum(theta=derivation_sheaf(suite.covers["loop"]), base=dual),
    }
    for name, datum in data.items():
        ks = higher_ks(datum, 2)
        require(ks.morphism.images[()] == {(): 1}, "κ is not counital", family=name)
        require(
            same_maps(ks.on_cohomology(), classical_ks(datum)),
            "κ^1 differs from the classical map",
            family=name,
        )
    return ", ".join(data)


@criterion("12", "twisted enveloping algebras")
def algebroid_suite(suite: Suite) -> str:
    eps = dual_numbers(1, "e")
    theta = derivations(eps)
    U = twisted_enveloping(theta, 1)
    require(U.filtration_dims() == [2, 3], "Diff^1 has the wrong size", dims=U.filtration_dims())
    delta, e = (0, (0,)), (1, ())
    left = U.multiply({delta: 1}, {e: 1})
    right = U.multiply({e: 1}, {delta: 1})
    difference = {k: left.get(k, 0) - right.get(k, 0) for k in set(left) | set(right)}
    difference = {k: v for k, v in difference.items() if v}
    tau = theta.derive({0: 1}, {1: 1})
    expected = U.reduce({(i, ()): v for i, v in tau.items()})
    require(difference == expected, "a·f - f·a differs from τ(a)(f)")
    for k in (1, 2):
        V = twisted_enveloping(derivations(truncated_polynomial(("x",), k)), 3)
        require(V.gr_commutativity_defect() is None, "gr U is not commutative", k=k)
        require(V.filtration_defect() is None, "product leaves the filtration", k=k)
    return "dim Diff^1 = 3, gr-commutative to F_3 over Q[x]/(x^2), Q[x]/(x^3)"


@criterion("13", "BV structure and rigidity")
def bv_suite(suite: Suite) -> str:
    for name in ("sl2", "h3", "arrow"):
        for reduced in (False, True):
            report = check_bv(bv_from_chevalley(suite.regression[name], 3, reduced))
            failed = sorted(key for key, witness in report.checks.items() if witness)
            require(report.passed, "BV identities fail", algebra=name, checks=failed)
    for n in (2, 3):
        rigidity_check(identity_morphism(suite.regression["sl2"]), n)
    algebras = [random_nilpotent_lie(seed) for seed in suite.seeds(60)]
    seeded = 0
    for n, count in ((1, 5), (2, 3), (3, 2)):
        small = [g for g in algebras if g.dim <= 6 - n][:count]
        for g in small:
            rigidity_check(identity_morphism(g), n)
        seeded += len(small)
    return f"sl2, h3, arrow at n = 3; rigidity for sl2 and {seeded} seeded algebras, n = 1..3"


@criterion("14", "same results for another thread count")
def determinism_suite(suite: Suite) -> str:
    replayed = sorted(key for key in CRITERIA if key != "14")
    before = {key: suite.recorded.get(key) or _outcome(key, suite) for key in replayed}
    saved = runtime.threads
    runtime.threads = 4 if saved == 1 else 1
    try:
        after = {key: _outcome(key, suite) for key in replayed}
    finally:
        runtime.threads = saved
    failed = sorted(key for key in replayed if not (before[key].passed and after[key].passed))
    require(not failed, "replayed criteria fail", criteria=failed)
    changed = sorted(key for key in replayed if before[key].detail != after[key].detail)
    require(not changed, "details differ between thread counts", criteria=changed)
    return f"{len(replayed)} criteria replayed with another thread count"


def _outcome(key: str, suite: Suite) -> Outcome:
    name, check = CRITERIA[key]
    with logfire.span("criterion {key}", key=key, name=name):
        try:
            detail = check(suite)
        except ValidationFailure as e:
            logfire.info("criterion failed", key=key, error=str(e))
            return Outcome(key=key, name=name, passed=False, detail=str(e))
    return Outcome(key=key, name=name, passed=True, detail=detail)


def run_scoreboard(
    seed: int = 0, poly_degree: int = 3, only: Sequence[str] = ()
) -> list[Outcome]:
    """Runs the criteria (all of them, or the keys in `only`) in key order."""
    suite = Suite(seed=seed, poly_degree=poly_degree)
    outcomes = []
    for key in sorted(only or CRITERIA):
        outcomes.append(_outcome(key, suite))
        suite.recorded[key] = outcomes[-1]
    return outcomes

"""Lie-Rinehart pairs over finite-dimensional commutative algebras and their enveloping algebras.

Everything is a finite-dimensional vector space over Q. An algebroid L over O is stored on a
Q-basis of L, with the O-action and the anchor given on basis elements.
"""

from typing import Any, Optional
from functools import cached_property
from itertools import product, combinations
from collections.abc import Mapping, Sequence

import logfire
from sympy import Matrix, Rational
from pydantic import Field, BaseModel, ConfigDict, model_validator

from src.sdk.artin import CommutativeAlgebra, rationals
from src.sdk.dg_lie import DgLieAlgebra
from src.sdk.linalg import (
    rank,
    solve,
    zeros,
    column,
    hstack,
    add_into,
    nullspace,
    complement,
    column_basis,
    from_columns,
    sparse_column,
)
from src.types.errors import (
    SkewFail,
    AxiomFail,
    JacobiFail,
    NotAModule,
    LeibnizFail,
    ShapeMismatch,
    NotLieMorphism,
)

Vector = dict[int, Any]
Table = dict[tuple[int, int], dict[int, Any]]
Key = tuple[int, tuple[int, ...]]


class LieRinehart(BaseModel):
    """(O, L, τ): an O-module L with a Q-bilinear bracket and an anchor τ: L -> Der(O).

    `action[(f, a)]` is f·a for basis f of O and a of L; missing pairs act by zero.
    `anchor[a]` is τ(a) as a matrix on the basis of O.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    base: CommutativeAlgebra
    labels: tuple[str, ...]
    table: Table = Field(default_factory=dict)
    action: Table = Field(default_factory=dict)
    anchor: tuple[Matrix, ...]

    @property
    def dim(self) -> int:
        return len(self.labels)

    def bracket(self, x: Mapping[int, Any], y: Mapping[int, Any]) -> Vector:
        out: Vector = {}
        for (i, a), (j, b) in product(x.items(), y.items()):
            add_into(out, self.table.get((i, j), {}), a * b)
        return out

    def act(self, f: Mapping[int, Any], x: Mapping[int, Any]) -> Vector:
        out: Vector = {}
        for (i, a), (j, b) in product(f.items(), x.items()):
            add_into(out, self.action.get((i, j), {}), a * b)
        return out

    def tau(self, x: Mapping[int, Any]) -> Matrix:
        out = zeros(self.base.dim, self.base.dim)
        for a, value in x.items():
            out += value * self.anchor[a]
        return out

    def derive(self, x: Mapping[int, Any], f: Mapping[int, Any]) -> Vector:
        """τ(x)(f) in O."""
        return sparse_column(self.tau(x) * column(f, self.base.dim))

    @model_validator(mode="after")
    def _check_axioms(self) -> "LieRinehart":
        O, n = self.base, self.dim
        if len(self.anchor) != n or any(m.shape != (O.dim, O.dim) for m in self.anchor):
            raise ShapeMismatch("anchor needs one O-endomorphism per basis element", dim=n)
        for a in range(n):
            if self.act(O.unit, {a: 1}) != {a: 1}:
                raise NotAModule(
                    "unit of O does not act as the identity", element=self.labels[a]
                )
            for f, g in product(range(O.dim), repeat=2):
                left = self.act(O.product(f, g), {a: 1})
                right = self.act({f: 1}, self.act({g: 1}, {a: 1}))
                if left != right:
                    raise NotAModule("action is not associative", pair=(f, g), element=a)
            tau = self.anchor[a]
            for i, j in product(range(O.dim), repeat=2):
                lhs = self.derive({a: 1}, O.product(i, j))
                rhs = O.mul(self.derive({a: 1}, {i: 1}), {j: 1})
                add_into(rhs, O.mul({i: 1}, self.derive({a: 1}, {j: 1})))
                if lhs != rhs:
                    raise AxiomFail(
                        "anchor is not a derivation", element=self.labels[a], pair=(i, j)
                    )
            for f in range(O.dim):
                if self.tau(self.act({f: 1}, {a: 1})) != O.left_matrices[f] * tau:
                    raise AxiomFail(
                        "anchor is not O-linear", element=self.labels[a], f=O.labels[f]
                    )
        for a, b in product(range(n), repeat=2):
            ab = self.bracket({a: 1}, {b: 1})
            swapped = self.bracket({b: 1}, {a: 1})
            if add_into(dict(ab), swapped):
                raise SkewFail("bracket is not antisymmetric", pair=(a, b))
            commutator = self.anchor[a] * self.anchor[b] - self.anchor[b] * self.anchor[a]
            if self.tau(ab) != commutator:
                raise NotLieMorphism("anchor does not preserve brackets", pair=(a, b))
            for f in range(O.dim):
                lhs = self.bracket({a: 1}, self.act({f: 1}, {b: 1}))
                rhs = self.act({f: 1}, ab)
                add_into(rhs, self.act(self.derive({a: 1}, {f: 1}), {b: 1}))
                if lhs != rhs:
                    raise LeibnizFail(
                        "[a, f·b] differs from f·[a, b] + τ(a)(f)·b", pair=(a, b), f=O.labels[f]
                    )
        for a, b, c in product(range(n), repeat=3):
            total = self.bracket({a: 1}, self.bracket({b: 1}, {c: 1}))
            add_into(total, self.bracket({b: 1}, self.bracket({c: 1}, {a: 1})))
            add_into(total, self.bracket({c: 1}, self.bracket({a: 1}, {b: 1})))
            if total:
                raise JacobiFail("Jacobi identity fails", triple=(a, b, c))
        return self


def derivations(O: CommutativeAlgebra) -> LieRinehart:
    """Der(O) with the commutator bracket, the O-action by left multiplication and τ = id.

    Examples:
        >>> from src.sdk.artin import dual_numbers
        >>> derivations(dual_numbers(1)).dim
        1
    """
    m = O.dim
    rows = []
    for i, j in product(range(m), repeat=2):
        for p in range(m):
            row: Vector = {}
            for q, c in O.product(i, j).items():
                add_into(row, {q * m + p: c})
            for k in range(m):
                add_into(row, {i * m + k: -O.product(k, j).get(p, 0)})
                add_into(row, {j * m + k: -O.product(i, k).get(p, 0)})
            if row:
                rows.append(row)
    constraints = zeros(len(rows), m * m)
    for r, row in enumerate(rows):
        for u, value in row.items():
            constraints[r, u] = value
    basis = nullspace(constraints)
    operators = tuple(_unflatten(basis[:, a], m) for a in range(basis.cols))

    def coords(op: Matrix) -> Vector:
        x = solve(basis, _flatten(op))
        return {a: x[a, 0] for a in range(basis.cols) if x[a, 0] != 0}

    table: Table = {}
    for a, b in product(range(basis.cols), repeat=2):
        image = coords(operators[a] * operators[b] - operators[b] * operators[a])
        if image:
            table[(a, b)] = image
    action: Table = {}
    for f, a in product(range(m), range(basis.cols)):
        image = coords(O.left_matrices[f] * operators[a])
        if image:
            action[(f, a)] = image
    logfire.debug("derivations", dim=basis.cols, base=m)
    return LieRinehart(
        base=O,
        labels=tuple(f"δ{a}" for a in range(basis.cols)),
        table=table,
        action=action,
        anchor=operators,
    )


def _flatten(op: Matrix) -> Matrix:
    m = op.rows
    return column({i * m + k: op[k, i] for i in range(m) for k in range(m) if op[k, i]}, m * m)


def _unflatten(vec: Matrix, m: int) -> Matrix:
    return Matrix(m, m, lambda k, i: vec[i * m + k, 0])


def from_lie(L: DgLieAlgebra) -> LieRinehart:
    """An ordinary Lie algebra as an algebroid over Q with zero anchor."""
    if any(p != 0 for p in L.degrees) or not L.d_matrix().is_zero_matrix:
        raise ShapeMismatch("only Lie algebras in degree 0 with d = 0 are algebroids over Q")
    return LieRinehart(
        base=rationals(),
        labels=L.labels,
        table=dict(L.table),
        action={(0, a): {a: Rational(1)} for a in range(L.dim)},
        anchor=tuple(zeros(1, 1) for _ in range(L.dim)),
    )


class TwistedEnveloping(BaseModel):
    """F_n U_O(L) as a quotient of V_n = ⊕_{k<=n} O ⊗ L^(⊗k).

    The key (f, (a1..ak)) stands for f·a1···ak. The relations are ab - ba - [a, b] at any
    position and u·(g·a) = (u·g)·a, where u·g is computed with a·g = g·a + τ(a)(g).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    algebroid: LieRinehart
    bound: int

    @property
    def base(self) -> CommutativeAlgebra:
        return self.algebroid.base

    @cached_property
    def keys(self) -> tuple[Key, ...]:
        L = self.algebroid
        return tuple(
            (f, word)
            for k in range(self.bound + 1)
            for word in product(range(L.dim), repeat=k)
            for f in range(self.base.dim)
        )

    @cached_property
    def index(self) -> dict[Key, int]:
        return {key: i for i, key in enumerate(self.keys)}

    def embed(self, f: Mapping[int, Any], word: tuple[int, ...]) -> dict[Key, Any]:
        return {(i, word): value for i, value in f.items() if value != 0}

    def push(self, g: Mapping[int, Any], word: Sequence[int]) -> dict[tuple[int, ...], Vector]:
        """u·g rewritten as Σ h_w·w over subwords w of u."""
        out: dict[tuple[int, ...], Vector] = {(): dict(g)} if g else {}
        for a in reversed(tuple(word)):
            step: dict[tuple[int, ...], Vector] = {}
            for w, h in out.items():
                step.setdefault((a,) + w, {})
                add_into(step[(a,) + w], h)
                derived = self.algebroid.derive({a: 1}, h)
                if derived:
                    step.setdefault(w, {})
                    add_into(step[w], derived)
            out = {w: h for w, h in step.items() if h}
        return out

    def product_keys(self, x: Key, y: Key) -> dict[Key, Any]:
        """(f·u)(g·v) = f·(u·g)·v; terms longer than the bound are dropped."""
        (f, u), (g, v) = x, y
        out: dict[Key, Any] = {}
        for w, h in self.push({g: 1}, u).items():
            if len(w) + len(v) <= self.bound:
                add_into(out, self.embed(self.base.mul({f: 1}, h), w + v))
        return out

    @cached_property
    def relations(self) -> Matrix:
        L, O, n = self.algebroid, self.base, self.bound
        columns: list[dict[Key, Any]] = []
        for k in range(n - 1):
            for u_len in range(k + 1):
                for word in product(range(L.dim), repeat=k):
                    u, v = word[:u_len], word[u_len:]
                    for a, b in product(range(L.dim), repeat=2):
                        for f in range(O.dim):
                            rel = self.embed({f: 1}, u + (a, b) + v)
                            add_into(rel, self.embed({f: 1}, u + (b, a) + v), -1)
                            for c, value in L.bracket({a: 1}, {b: 1}).items():
                                add_into(rel, self.embed({f: value}, u + (c,) + v), -1)
                            columns.append(rel)
        for k in range(n):
            for u_len in range(k + 1):
                for word in product(range(L.dim), repeat=k):
                    u, v = word[:u_len], word[u_len:]
                    for f, g, a in product(range(O.dim), range(O.dim), range(L.dim)):
                        rel: dict[Key, Any] = {}
                        for c, value in L.act({g: 1}, {a: 1}).items():
                            add_into(rel, self.embed({f: value}, u + (c,) + v))
                        for w, h in self.push({g: 1}, u).items():
                            add_into(rel, self.embed(O.mul({f: 1}, h), w + (a,) + v), -1)
                        columns.append(rel)
        columns = [rel for rel in columns if rel]
        if not columns:
            return zeros(len(self.keys), 0)
        index = self.index
        flat = [{index[key]: v for key, v in rel.items()} for rel in columns]
        return column_basis(from_columns(flat, len(self.keys)))

    @cached_property
    def kept(self) -> tuple[int, ...]:
        return tuple(complement(self.relations, len(self.keys)))

    @cached_property
    def projection(self) -> Matrix:
        """V_n -> F_n U in the coordinates of the kept keys, killing the relations."""
        N = len(self.keys)
        kept = Matrix.eye(N).extract(list(range(N)), list(self.kept))
        frame = hstack(self.relations, kept, rows=N)
        start = self.relations.cols
        return frame.inv().extract(list(range(start, N)), list(range(N)))

    @property
    def dim(self) -> int:
        return len(self.kept)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.label(self.keys[i]) for i in self.kept)

    def label(self, key: Key) -> str:
        f, word = key
        letters = "·".join(self.algebroid.labels[a] for a in word)
        head = self.base.labels[f]
        return f"{head}·{letters}" if word else head

    def reduce(self, vec: Mapping[Key, Any]) -> dict[Key, Any]:
        """Normal form: the same class written on the kept keys."""
        index = self.index
        coords = self.projection * column({index[k]: v for k, v in vec.items()}, len(self.keys))
        return {self.keys[self.kept[i]]: coords[i, 0] for i in range(coords.rows) if coords[i, 0]}

    def multiply(self, x: Mapping[Key, Any], y: Mapping[Key, Any]) -> dict[Key, Any]:
        out: dict[Key, Any] = {}
        for (p, a), (q, b) in product(x.items(), y.items()):
            add_into(out, self.product_keys(p, q), a * b)
        return self.reduce(out)

    def step(self, k: int) -> Matrix:
        """F_k as columns in kept coordinates."""
        if k < 0:
            return zeros(self.dim, 0)
        picked = [i for i, (_, word) in enumerate(self.keys) if len(word) <= k]
        return self.projection.extract(list(range(self.dim)), picked)

    def filtration_dims(self) -> list[int]:
        return [rank(self.step(k)) for k in range(self.bound + 1)]

    @cached_property
    def cuts(self) -> dict[int, Matrix]:
        """Rows vanishing exactly on F_k, for k = -1..bound."""
        out = {}
        for k in range(-1, self.bound + 1):
            span = self.step(k)
            out[k] = nullspace(span.T).T if span.cols else Matrix.eye(self.dim)
        return out

    def in_step(self, k: int, vec: Mapping[Key, Any]) -> bool:
        index = self.index
        flat = column({index[key]: v for key, v in vec.items()}, len(self.keys))
        return (self.cuts[k] * (self.projection * flat)).is_zero_matrix

    def gr_commutativity_defect(self) -> Optional[tuple[Key, Key]]:
        """First pair x in F_a, y in F_b with xy - yx outside F_(a+b-1)."""
        for x, y in combinations(self.keys, 2):
            a, b = len(x[1]), len(y[1])
            if a + b > self.bound:
                continue
            commutator = self.product_keys(x, y)
            add_into(commutator, self.product_keys(y, x), -1)
            if not self.in_step(a + b - 1, commutator):
                return x, y
        return None

    def filtration_defect(self) -> Optional[tuple[Key, Key]]:
        """First pair of keys whose product leaves F_(a+b)."""
        for x, y in product(self.keys, repeat=2):
            a, b = len(x[1]), len(y[1])
            if a + b <= self.bound and not self.in_step(a + b, self.product_keys(x, y)):
                return x, y
        return None

    def coproduct(self, key: Key) -> dict[tuple[Key, Key], Any]:
        """Δ(f·w) = Σ f·w' ⊗ w'' over unshuffles; the right factor carries the unit of O."""
        f, word = key
        out: dict[tuple[Key, Key], Any] = {}
        for size in range(len(word) + 1):
            for chosen in combinations(range(len(word)), size):
                left = tuple(word[i] for i in chosen)
                right = tuple(word[i] for i in range(len(word)) if i not in chosen)
                for e, value in self.base.unit.items():
                    add_into(out, {((f, left), (e, right)): value})
        return out

    def coassociativity_defect(self) -> Optional[Key]:
        for key in self.keys:
            left: dict = {}
            right: dict = {}
            for (x, y), value in self.coproduct(key).items():
                for (x1, x2), c in self.coproduct(x).items():
                    add_into(left, {(x1, x2, y): value * c})
                for (y1, y2), c in self.coproduct(y).items():
                    add_into(right, {(x, y1, y2): value * c})
            if add_into(left, right, -1):
                return key
        return None

    def coideal_defect(self) -> Optional[int]:
        """Over O = Q: first relation whose coproduct survives in F_n ⊗ F_n."""
        index = self.index
        for r in range(self.relations.cols):
            image: dict = {}
            for i, value in sparse_column(self.relations, r).items():
                for (x, y), c in self.coproduct(self.keys[i]).items():
                    px = self.projection[:, index[x]]
                    py = self.projection[:, index[y]]
                    for s, t in product(range(self.dim), repeat=2):
                        if px[s, 0] and py[t, 0]:
                            add_into(image, {(s, t): value * c * px[s, 0] * py[t, 0]})
            if image:
                return r
        return None

    def check(self) -> "TwistedEnveloping":
        with logfire.span("validate twisted enveloping algebra", bound=self.bound, dim=self.dim):
            for name, defect in (
                ("gr U is not commutative", self.gr_commutativity_defect()),
                ("filtration is not multiplicative", self.filtration_defect()),
            ):
                if defect is not None:
                    raise AxiomFail(name, pair=", ".join(self.label(k) for k in defect))
            failed = self.coassociativity_defect()
            if failed is not None:
                raise AxiomFail("coproduct is not coassociative", word=self.label(failed))
            if self.base.dim == 1:
                r = self.coideal_defect()
                if r is not None:
                    raise AxiomFail("relations do not form a coideal", relation=r)
        return self


def twisted_enveloping(A: LieRinehart, n: int) -> TwistedEnveloping:
    """U_O(L) up to F_n.

    Examples:
        >>> from src.sdk.artin import dual_numbers
        >>> twisted_enveloping(derivations(dual_numbers(1)), 1).filtration_dims()
        [2, 3]
    """
    if n < 0:
        raise ShapeMismatch("filtration bound must be non-negative", n=n)
    return TwistedEnveloping(algebroid=A, bound=n).check()


def grothendieck_diff(O: CommutativeAlgebra, n: int) -> list[Matrix]:
    """Diff^(<=k)(O) in End(O) for k = 0..n, as flattened column bases.

    D has order <= k iff [D, m_f] has order <= k - 1 for every f, and order < 0 means zero.
    """
    m = O.dim
    steps: list[Matrix] = []
    previous = zeros(m * m, 0)
    for _ in range(n + 1):
        # rows cutting out the previous step
        cut = nullspace(previous.T).T if previous.cols else Matrix.eye(m * m)
        blocks = []
        for f in range(m):
            mult = O.left_matrices[f]
            commutator = zeros(m * m, m * m)
            for u in range(m * m):
                E = _unflatten(column({u: 1}, m * m), m)
                commutator[:, u] = _flatten(E * mult - mult * E)
            blocks.append(cut * commutator)
        stacked = Matrix.vstack(*blocks) if blocks else zeros(0, m * m)
        previous = nullspace(stacked)
        steps.append(previous)
    return steps


class DiffReport(BaseModel):
    """Filtration dimensions of U_O(Der O), of its image in End(O) and of Diff^(<=k)(O)."""

    model_config = ConfigDict(frozen=True)
    abstract: list[int]
    realized: list[int]
    grothendieck: list[int]

    @property
    def faithful(self) -> bool:
        return self.abstract == self.realized

    @property
    def exhausts(self) -> bool:
        return self.realized == self.grothendieck


def realization(U: TwistedEnveloping) -> Matrix:
    """V_n -> End(O), f·a1···ak -> m_f τ(a1)···τ(ak), one flattened column per key.

    Raises:
        AxiomFail: If a relation does not act by zero.
    """
    A, O = U.algebroid, U.base
    columns = []
    for f, word in U.keys:
        op = O.left_matrices[f]
        for a in word:
            op = op * A.anchor[a]
        columns.append(_flatten(op))
    image = hstack(*columns, rows=O.dim * O.dim)
    if not (image * U.relations).is_zero_matrix:
        raise AxiomFail("relations do not act by zero on O")
    return image


def diff_operators(O: CommutativeAlgebra, n: int) -> tuple[TwistedEnveloping, DiffReport]:
    """U_O(Der O) up to F_n, compared with its realization in End(O) and with Diff^(<=n)(O).

    The map U_O(Der O) -> End(O) may have a kernel over an Artin algebra; the report states the
    dimensions on both sides instead of asserting equality.
    """
    U = twisted_enveloping(derivations(O), n)
    image = realization(U)
    realized = []
    for k in range(n + 1):
        picked = [i for i, (_, word) in enumerate(U.keys) if len(word) <= k]
        realized.append(rank(image.extract(list(range(image.rows)), picked)))
    report = DiffReport(
        abstract=U.filtration_dims(),
        realized=realized,
        grothendieck=[step.cols for step in grothendieck_diff(O, n)],
    )
    logfire.info(
        "differential operators",
        abstract=report.abstract,
        realized=report.realized,
        grothendieck=report.grothendieck,
    )
    return U, report

"""Reads input documents and builds the engine objects they describe."""

import json
from typing import Any, Union, Optional
from pathlib import Path
from collections.abc import Callable, Sequence

import logfire
from sympy import Matrix
from pydantic import BaseModel, ConfigDict, PrivateAttr, ValidationError

from src.sdk.ran import FiniteSpace
from src.sdk.artin import (
    ArtinLocalAlgebra,
    CommutativeAlgebra,
    artin_from_table,
    truncated_polynomial,
)
from src.sdk.dg_lie import (
    Vector,
    DgLieModule,
    LieMorphism,
    DgLieAlgebra,
    make_dg_lie,
    make_module,
)
from src.sdk.graded import Complex, GradedSpace, make_complex, map_from_rule
from src.sdk.linalg import solve, zeros, hstack, add_into, from_columns
from src.sdk.resolution import CoverDatum, constant_cover
from src.sdk.deformation import DeformationDatum, derivation_sheaf
from src.types.errors import UsageError, ShapeMismatch
from src.types.document import InputDocument

FIXTURES = Path(__file__).resolve().parents[1] / "data"


def bundled_fixtures() -> list[str]:
    return sorted(path.stem for path in FIXTURES.glob("*.json"))


def parse_document(text: str, source: str = "<input>") -> InputDocument:
    """Parses and validates a JSON document.

    Raises:
        UsageError: With line and column for malformed JSON, with the location path for
            schema violations.

    Examples:
        >>> doc = parse_document('{"algebras": {"x": {"degrees": {"1": ["a"]}}}}')
        >>> doc.algebras["x"].labels
        ['a']
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from e
    try:
        return InputDocument.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}"
            for error in e.errors()
        )
        raise UsageError(f"{source}: {problems}") from e


def serialize_document(doc: InputDocument) -> str:
    """Canonical text: sorted keys, reduced fractions, default sections omitted."""
    payload = doc.model_dump(mode="json", exclude_defaults=True)
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def load_document(location: str) -> tuple[InputDocument, str]:
    """Reads a path, or the bundled fixture of that name."""
    path = Path(location)
    if not path.is_file():
        path = FIXTURES / f"{location}.json"
    if not path.is_file():
        raise UsageError(f"no input file or bundled fixture named {location!r}")
    logfire.debug("loading document", path=path.as_posix())
    return parse_document(path.read_text(encoding="utf-8"), path.name), path.stem


def _simplex(key: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in key.split(","))


def _position(labels: Sequence[str], label: str, where: str) -> int:
    try:
        return list(labels).index(label)
    except ValueError as e:
        raise UsageError(f"{where}: unknown label {label!r}") from e


class Workspace(BaseModel):
    """The objects of one document, built on first use and kept for the rest of the run."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
    document: InputDocument
    name: str = "<input>"
    _built: dict[tuple[str, str], Any] = PrivateAttr(default_factory=dict)

    def _memo(self, kind: str, name: str, build: Callable[[], Any]) -> Any:
        key = (kind, name)
        if key not in self._built:
            with logfire.span("build {kind} {name}", kind=kind, name=name):
                self._built[key] = build()
        return self._built[key]

    def pick(self, section: str, wanted: Optional[str] = None) -> str:
        """`wanted`, else the name given in params, else the only entry of the section."""
        entries = getattr(self.document, section)
        name = wanted or getattr(self.document.params, _PARAM.get(section, section), None)
        if name is None and len(entries) == 1:
            name = next(iter(entries))
        if name is None:
            raise UsageError(f"{self.name}: say which entry of {section!r} to use in params")
        if name not in entries:
            raise UsageError(f"{self.name}: no entry {name!r} in {section!r}")
        return name

    def _complex(
        self, degrees: dict[int, list[str]], differential: Sequence[tuple], where: str
    ) -> tuple[Complex, list[str]]:
        space = GradedSpace(components={p: tuple(names) for p, names in degrees.items()})
        labels = list(space.flat_labels)
        images: dict[int, Vector] = {}
        for s, t, c in differential:
            i, j = _position(labels, s, where), _position(labels, t, where)
            add_into(images.setdefault(i, {}), {j: c})
        d = map_from_rule(space, space, lambda i: images.get(i, {}), 1)
        return make_complex(space, d), labels

    def algebra(self, name: Optional[str] = None) -> DgLieAlgebra:
        name = self.pick("algebras", name)

        def build() -> DgLieAlgebra:
            spec = self.document.algebras[name]
            where = f"algebras.{name}"
            C, labels = self._complex(spec.degrees, spec.differential, where)
            constants = [
                (
                    _position(labels, a, where),
                    _position(labels, b, where),
                    _position(labels, k, where),
                    c,
                )
                for a, b, k, c in spec.bracket
            ]
            return make_dg_lie(C, constants)

        return self._memo("algebra", name, build)

    def vector(self, g: DgLieAlgebra, coefficients: dict[str, Any], where: str) -> Vector:
        out: Vector = {}
        for label, c in coefficients.items():
            add_into(out, {_position(g.labels, label, where): c})
        return out

    def module(self, name: Optional[str] = None) -> DgLieModule:
        name = self.pick("modules", name)

        def build() -> DgLieModule:
            spec = self.document.modules[name]
            where = f"modules.{name}"
            g = self.algebra(spec.algebra)
            C, labels = self._complex(spec.degrees, spec.differential, where)
            constants = [
                (
                    _position(g.labels, x, where),
                    _position(labels, v, where),
                    _position(labels, w, where),
                    c,
                )
                for x, v, w, c in spec.action
            ]
            return make_module(g, C, constants)

        return self._memo("module", name, build)

    def morphism(self, name: Optional[str] = None) -> LieMorphism:
        name = self.pick("morphisms", name)

        def build() -> LieMorphism:
            spec = self.document.morphisms[name]
            where = f"morphisms.{name}"
            source, target = self.algebra(spec.source), self.algebra(spec.target)
            images: dict[int, Vector] = {}
            for s, t, c in spec.map:
                i = _position(source.labels, s, where)
                add_into(images.setdefault(i, {}), {_position(target.labels, t, where): c})
            f = map_from_rule(source.space, target.space, lambda i: images.get(i, {}))
            return LieMorphism(source=source, target=target, map=f)

        return self._memo("morphism", name, build)

    def element(
        self, name: Optional[str] = None
    ) -> tuple[DgLieAlgebra, Vector, Optional[ArtinLocalAlgebra]]:
        """The algebra, the element, and the Artin coefficients when there are any.

        Over A the element sits at i * dim A + k for the basis label i of g and k of A.
        """
        name = self.pick("elements", name)
        spec = self.document.elements[name]
        where = f"elements.{name}"
        g = self.algebra(spec.algebra)
        if spec.artin is None:
            return g, self.vector(g, spec.coefficients, where), None
        A = self.local(spec.artin)
        out: Vector = {}
        for key, c in spec.coefficients.items():
            x, _, t = key.partition("*")
            i = _position(g.labels, x, where)
            add_into(out, {i * A.dim + _position(A.labels, t, where): c})
        return g, out, A

    def ideal(self, name: Optional[str] = None) -> tuple[DgLieAlgebra, Matrix]:
        name = self.pick("ideals", name)
        spec = self.document.ideals[name]
        g = self.algebra(spec.algebra)
        columns = [self.vector(g, generator, f"ideals.{name}") for generator in spec.span]
        return g, from_columns(columns, g.dim)

    def artin(self, name: Optional[str] = None) -> Union[ArtinLocalAlgebra, CommutativeAlgebra]:
        name = self.pick("artin", name)

        def build() -> Union[ArtinLocalAlgebra, CommutativeAlgebra]:
            spec = self.document.artin[name]
            if spec.variables is not None:
                return truncated_polynomial(tuple(spec.variables), spec.n)
            labels = tuple(spec.labels)
            where = f"artin.{name}"
            table: dict[tuple[int, int], Vector] = {}
            for a, b, c, value in spec.table:
                pair = (_position(labels, a, where), _position(labels, b, where))
                add_into(table.setdefault(pair, {}), {_position(labels, c, where): value})
            if spec.unit is not None:
                unit = {_position(labels, x, where): value for x, value in spec.unit.items()}
                return CommutativeAlgebra(labels=labels, table=table, unit=unit)
            return artin_from_table(labels, table)

        return self._memo("artin", name, build)

    def local(self, name: Optional[str] = None) -> ArtinLocalAlgebra:
        A = self.artin(name)
        if not isinstance(A, ArtinLocalAlgebra):
            raise UsageError(f"{self.name}: artin entry {name!r} is not a local algebra")
        return A

    def cover(self, name: Optional[str] = None) -> CoverDatum:
        name = self.pick("covers", name)

        def build() -> CoverDatum:
            spec = self.document.covers[name]
            if spec.simplices:
                algebra = None if spec.algebra is None else self.artin(spec.algebra)
                return constant_cover(tuple(spec.opens), spec.simplices, algebra)
            restrictions = {}
            for key, rows in spec.restrictions.items():
                K, I = key.split(">")
                restrictions[(_simplex(K), _simplex(I))] = Matrix(rows)
            return CoverDatum(
                opens=tuple(spec.opens),
                algebras={_simplex(key): self.artin(A) for key, A in spec.algebras.items()},
                restrictions=restrictions,
            )

        return self._memo("cover", name, build)

    def family(self, name: Optional[str] = None) -> DeformationDatum:
        """A deformation datum; each gluing term is solved into the derivation basis of its edge.

        Raises:
            ShapeMismatch: If an operator is not a derivation of the overlap.
        """
        name = self.pick("families", name)

        def build() -> DeformationDatum:
            spec = self.document.families[name]
            where = f"families.{name}"
            theta = derivation_sheaf(self.cover(spec.cover))
            base = self.local(spec.base)
            gluing = {}
            for key, terms in spec.gluing.items():
                edge = _simplex(key)
                ops = theta.operator(edge)
                grid = zeros(len(ops), base.dim)
                for term in terms:
                    operator = Matrix(term.operator)
                    size = operator.rows * operator.cols
                    if any(X.shape != operator.shape for X in ops):
                        raise ShapeMismatch("gluing operator has the wrong shape", edge=key)
                    frame = hstack(*[X.reshape(size, 1) for X in ops], rows=size)
                    coords = solve(frame, operator.reshape(size, 1))
                    if coords is None:
                        raise ShapeMismatch("gluing operator is not a derivation", edge=key)
                    c = _position(base.labels, term.coefficient, where)
                    grid[:, c] = grid[:, c] + coords
                gluing[edge] = grid
            return DeformationDatum(theta=theta, base=base, gluing=gluing)

        return self._memo("family", name, build)

    def extension(self, name: Optional[str] = None) -> tuple[DgLieAlgebra, Vector]:
        name = self.pick("extensions", name)
        spec = self.document.extensions[name]
        g = self.algebra(spec.algebra)
        return g, self.vector(g, spec.center, f"extensions.{name}")

    def points(self) -> tuple[FiniteSpace, dict[str, DgLieAlgebra]]:
        """The finite space of params.points (or one point carrying the default algebra)."""
        chosen = self.document.params.points
        if not chosen:
            return FiniteSpace(points=("p",)), {"p": self.algebra()}
        X = FiniteSpace(points=tuple(chosen))
        return X, {p: self.algebra(name) for p, name in chosen.items()}


_PARAM = {
    "algebras": "algebra",
    "modules": "module",
    "morphisms": "morphism",
    "elements": "element",
    "ideals": "ideal",
    "covers": "cover",
    "families": "family",
    "extensions": "extension",
}

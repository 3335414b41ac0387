"""Schema of the JSON input documents read by the command line.

Rationals are written as "p/q" strings (integers are accepted as they are); floating point
values are rejected. Simplices of a cover are comma-joined open names ("a,b") and a
restriction along K ⊂ I is keyed "K>I" ("a>a,b").
"""

from typing import Any, Literal, Optional, Annotated

from sympy import Rational
from pydantic import (
    Field,
    BaseModel,
    ConfigDict,
    BeforeValidator,
    PlainSerializer,
    model_validator,
)

from src.sdk.linalg import fmt, rat


def _exact(value: Any) -> Rational:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ValueError(f"rationals are written as integers or 'p/q' strings, got {value!r}")
    try:
        parsed = rat(value)
    except (TypeError, ValueError, SyntaxError) as e:
        raise ValueError(f"not a rational: {value!r}") from e
    if not parsed.is_Rational:
        raise ValueError(f"not a rational: {value!r}")
    return parsed


Exact = Annotated[Any, BeforeValidator(_exact), PlainSerializer(fmt, return_type=str)]
Rows = list[list[Exact]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)


class AlgebraSpec(_Section):
    """A dg Lie algebra: labels per degree, d(source) = Σ c·target, [a, b] = Σ c·k."""

    degrees: dict[int, list[str]]
    differential: list[tuple[str, str, Exact]] = Field(default_factory=list)
    bracket: list[tuple[str, str, str, Exact]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _labels_resolve(self) -> "AlgebraSpec":
        labels = [x for names in self.degrees.values() for x in names]
        if len(set(labels)) != len(labels):
            raise ValueError("basis labels must be unique across degrees")
        used = [x for s, t, _ in self.differential for x in (s, t)]
        used += [x for a, b, k, _ in self.bracket for x in (a, b, k)]
        unknown = sorted(set(used) - set(labels))
        if unknown:
            raise ValueError(f"unknown basis labels: {unknown}")
        return self

    @property
    def labels(self) -> list[str]:
        return [x for _, names in sorted(self.degrees.items()) for x in names]


class ModuleSpec(_Section):
    """A dg module over `algebra`: x · v = Σ c·w for every (x, v, w, c) in `action`."""

    algebra: str
    degrees: dict[int, list[str]]
    differential: list[tuple[str, str, Exact]] = Field(default_factory=list)
    action: list[tuple[str, str, str, Exact]] = Field(default_factory=list)


class MorphismSpec(_Section):
    source: str
    target: str
    map: list[tuple[str, str, Exact]] = Field(default_factory=list)


class ElementSpec(_Section):
    """An element of `algebra`, or of algebra ⊗ A with keys "x*t" when `artin` is given."""

    algebra: str
    artin: Optional[str] = None
    coefficients: dict[str, Exact] = Field(default_factory=dict)


class IdealSpec(_Section):
    algebra: str
    span: list[dict[str, Exact]]


class ArtinSpec(_Section):
    """Either Q[variables]/m^(n+1), or a table on `labels` (unit first unless `unit` is set).

    With `unit` the algebra is only required to be commutative, which is what the opens of a
    cover may carry (e.g. a disjoint union of two points).
    """

    variables: Optional[list[str]] = None
    n: Optional[int] = None
    labels: Optional[list[str]] = None
    table: list[tuple[str, str, str, Exact]] = Field(default_factory=list)
    unit: Optional[dict[str, Exact]] = None

    @model_validator(mode="after")
    def _one_presentation(self) -> "ArtinSpec":
        if (self.variables is None) == (self.labels is None):
            raise ValueError("give either 'variables' with 'n' or 'labels' with 'table'")
        if self.variables is not None and self.n is None:
            raise ValueError("truncated polynomial algebras need 'n'")
        if self.labels is not None:
            used = {x for a, b, c, _ in self.table for x in (a, b, c)} | set(self.unit or {})
            unknown = sorted(used - set(self.labels))
            if unknown:
                raise ValueError(f"unknown basis labels: {unknown}")
        return self


class CoverSpec(_Section):
    """A finite cover: one algebra on every face of `simplices`, or explicit data per simplex."""

    opens: list[str]
    algebra: Optional[str] = None
    simplices: list[list[str]] = Field(default_factory=list)
    algebras: dict[str, str] = Field(default_factory=dict)
    restrictions: dict[str, Rows] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _one_presentation(self) -> "CoverSpec":
        if bool(self.simplices) == bool(self.algebras):
            raise ValueError("give either 'simplices' or 'algebras'")
        for key in self.restrictions:
            if key.count(">") != 1:
                raise ValueError(f"restriction keys look like 'a>a,b', got {key!r}")
        return self


class GluingTerm(_Section):
    """operator ⊗ e: `operator` a derivation of the overlap, e a basis label of the base."""

    operator: Rows
    coefficient: str


class FamilySpec(_Section):
    cover: str
    base: str
    gluing: dict[str, list[GluingTerm]] = Field(default_factory=dict)


class ExtensionSpec(_Section):
    """A central element z of `algebra`; the extension is algebra -> algebra / (z)."""

    algebra: str
    center: dict[str, Exact]


class ParamsSpec(_Section):
    """Names of the sections a command works on, and numeric parameters."""

    algebra: Optional[str] = None
    module: Optional[str] = None
    morphism: Optional[str] = None
    element: Optional[str] = None
    ideal: Optional[str] = None
    artin: Optional[str] = None
    cover: Optional[str] = None
    family: Optional[str] = None
    extension: Optional[str] = None
    points: dict[str, str] = Field(default_factory=dict)
    space: Optional[list[str]] = None
    reduced: bool = False
    n: Optional[int] = None
    cutoff: Optional[int] = None
    poly_degree: Optional[int] = None


Reference = Literal[
    "algebras", "modules", "morphisms", "elements", "ideals", "artin", "covers", "families"
]


class InputDocument(_Section):
    """One self-describing input file.

    Every cross-reference (an algebra named by a morphism, a cover named by a family, ...) must
    resolve to an entry of the right section.
    """

    format: Literal[1] = 1
    algebras: dict[str, AlgebraSpec] = Field(default_factory=dict)
    modules: dict[str, ModuleSpec] = Field(default_factory=dict)
    morphisms: dict[str, MorphismSpec] = Field(default_factory=dict)
    elements: dict[str, ElementSpec] = Field(default_factory=dict)
    ideals: dict[str, IdealSpec] = Field(default_factory=dict)
    artin: dict[str, ArtinSpec] = Field(default_factory=dict)
    covers: dict[str, CoverSpec] = Field(default_factory=dict)
    families: dict[str, FamilySpec] = Field(default_factory=dict)
    extensions: dict[str, ExtensionSpec] = Field(default_factory=dict)
    params: ParamsSpec = Field(default_factory=ParamsSpec)

    @model_validator(mode="after")
    def _references_resolve(self) -> "InputDocument":
        wanted: list[tuple[str, Reference, Optional[str]]] = []
        for name, spec in self.modules.items():
            wanted.append((f"modules.{name}", "algebras", spec.algebra))
        for name, spec in self.morphisms.items():
            wanted.append((f"morphisms.{name}", "algebras", spec.source))
            wanted.append((f"morphisms.{name}", "algebras", spec.target))
        for name, spec in self.elements.items():
            wanted.append((f"elements.{name}", "algebras", spec.algebra))
            wanted.append((f"elements.{name}", "artin", spec.artin))
        for name, spec in self.ideals.items():
            wanted.append((f"ideals.{name}", "algebras", spec.algebra))
        for name, spec in self.covers.items():
            wanted.append((f"covers.{name}", "artin", spec.algebra))
            for algebra in spec.algebras.values():
                wanted.append((f"covers.{name}", "artin", algebra))
        for name, spec in self.families.items():
            wanted.append((f"families.{name}", "covers", spec.cover))
            wanted.append((f"families.{name}", "artin", spec.base))
        for name, spec in self.extensions.items():
            wanted.append((f"extensions.{name}", "algebras", spec.algebra))
        p = self.params
        for field, section in (
            ("algebra", "algebras"),
            ("module", "modules"),
            ("morphism", "morphisms"),
            ("element", "elements"),
            ("ideal", "ideals"),
            ("artin", "artin"),
            ("cover", "covers"),
            ("family", "families"),
        ):
            wanted.append((f"params.{field}", section, getattr(p, field)))
        for point, algebra in p.points.items():
            wanted.append((f"params.points.{point}", "algebras", algebra))
        if p.extension is not None and p.extension not in self.extensions:
            raise ValueError(f"params.extension: no entry {p.extension!r} in 'extensions'")
        for where, section, name in wanted:
            if name is not None and name not in getattr(self, section):
                raise ValueError(f"{where}: no entry {name!r} in {section!r}")
        return self


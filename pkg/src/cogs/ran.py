from typing import Any, Optional

from src.sdk.bv import rigidity_check, central_quotient, rigidity_character
from src.sdk.ran import FiniteSpace
from src.sdk.artin import match_generators, truncated_polynomial
from src.sdk.dg_lie import identity_morphism
from src.sdk.graded import betti
from src.sdk.jacobi import udr_system, jacobi_complex
from src.sdk.report import Report, ReportTable, combination
from src.cogs import Cog, command


def generator_names(count: int) -> tuple[str, ...]:
    """x, y, z, w for small tower tops, x1..xk beyond."""
    if count <= 4:
        return tuple("xyzw"[:count])
    return tuple(f"x{i + 1}" for i in range(count))


class JacobiCogs(Cog):
    """Ran-space commands: Jacobi complexes, universal deformation algebras and rigidity."""

    def space(self) -> Optional[FiniteSpace]:
        points = self.param("space")
        return FiniteSpace(points=tuple(points)) if points else None

    @command("jacobi")
    def jacobi(self) -> Report:
        X, algebras = self.workspace.points()
        n = self.param("n")
        J = jacobi_complex(X, algebras, n, self.param("cutoff"))
        sections = J.sections.complex
        matches = sections.dims() == J.chevalley.complex.dims()
        if matches:
            J.identification
        fibers = ReportTable(
            title="fibers",
            columns=["k", "point", "dim"],
            rows=[
                [str(k), ",".join(x), str(fiber.complex.space.total_dim)]
                for (k, x), fiber in sorted(J.ran.fibers.items())
            ],
        )
        chosen = self.workspace.document.params.points
        result = {
            "points": chosen or {"p": self.workspace.pick("algebras")},
            "n": n,
            "cutoff": J.ran.cutoff,
            "sections": sections.dims(),
            "betti": betti(sections),
            "chevalley": J.chevalley.complex.dims(),
            "identified": matches,
            "stable": J.sections.stable,
            "admissibility": J.admissibility,
        }
        return self.report("jacobi", result, [fibers])

    @command("udr")
    def udr(self) -> Report:
        X, algebras = self.workspace.points()
        n = self.param("n")
        tower = udr_system(X, algebras, n)
        R = tower.algebras[-1]
        generators = R.generators().cols
        polynomial = truncated_polynomial(generator_names(generators), R.exponent)
        table = {
            f"{R.labels[i]}*{R.labels[j]}": combination(R.labels, R.product(i, j))
            for i in range(1, R.dim)
            for j in range(i, R.dim)
            if R.product(i, j)
        }
        result = {
            "n": n,
            "dims": [A.dim for A in tower.algebras],
            "exponents": [A.exponent for A in tower.algebras],
            "labels": list(R.labels),
            "generators": generators,
            "products": table,
            "surjective": all(f.is_surjective() for f in tower.maps),
            "polynomial": match_generators(R, polynomial) is not None,
        }
        rows = [[key, value] for key, value in table.items()]
        return self.report(
            "udr", result, [ReportTable(title=f"R^u_{n}", columns=["product", "value"], rows=rows)]
        )

    @command("rigidity")
    def rigidity(self) -> Report:
        ws = self.workspace
        n = self.param("n")
        X = self.space()
        if ws.document.extensions:
            g, center = ws.extension()
            quotient = central_quotient(g, center)
            character = rigidity_character(
                g, center, identity_morphism(quotient.algebra), n, X
            )
            result: dict[str, Any] = {
                "extension": ws.pick("extensions"),
                "n": n,
                "classes": list(character.classes),
                "character": list(character.character),
                "trivial": character.is_trivial,
                "multiplication": character.multiplication,
                "homotopies": len(character.homotopies),
            }
            return self.report("rigidity", result)
        if ws.document.morphisms:
            iota = ws.morphism()
        else:
            iota = identity_morphism(ws.algebra())
        report = rigidity_check(iota, n, X)
        result = {
            "n": n,
            "classes": list(report.classes),
            "induced": report.induced,
            "strict": report.strict,
            "homotopies": len(report.homotopies),
        }
        return self.report("rigidity", result, passed=report.passed)


def setup(engine: Any) -> None:
    engine.add_cog(JacobiCogs)

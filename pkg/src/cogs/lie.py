from typing import Any

from src.sdk.bv import check_bv, bv_from_chevalley
from src.sdk.dg_lie import DgLieAlgebra, twist, check_mc, mc_defect, extend_scalars
from src.sdk.graded import betti, decalage, rank_betti
from src.sdk.linalg import fmt
from src.sdk.report import Report, ReportTable, combination
from src.sdk.chevalley import (
    chevalley,
    counit_defect,
    reduced_chevalley,
    coassociativity_defect,
    cocommutativity_defect,
    filtration_matches_length,
    chevalley_with_coefficients,
    chevalley_eilenberg_oracle,
)
from src.cogs import Cog, command
from src.types.errors import AxiomFail, NotMaurerCartan, FiltrationNotRespected


def differential_triples(g: DgLieAlgebra) -> list[list[str]]:
    return [
        [g.labels[i], g.labels[j], fmt(c)]
        for i, image in sorted(g.complex.sparse_d.items())
        for j, c in sorted(image.items())
        if c != 0
    ]


class LieCogs(Cog):
    """Commands on a single dg Lie algebra and its Chevalley complex."""

    @command("check-lie")
    def check_lie(self) -> Report:
        ws = self.workspace
        name = ws.pick("algebras")
        g = ws.algebra(name)
        modules = {key: ws.module(key).dim for key in sorted(ws.document.modules)}
        morphisms = {
            key: [ws.morphism(key).source.dim, ws.morphism(key).target.dim]
            for key in sorted(ws.document.morphisms)
        }
        table = ReportTable(
            title=f"brackets of {name}",
            columns=["x", "y", "[x, y]"],
            rows=[
                [g.labels[i], g.labels[j], combination(g.labels, image)]
                for (i, j), image in sorted(g.table.items())
                if i <= j and image
            ],
        )
        result = {
            "algebra": name,
            "dims": g.space.dims(),
            "labels": list(g.labels),
            "differential": differential_triples(g),
            "brackets": len(g.constants()),
            "abelian": not g.table,
            "modules": modules,
            "morphisms": morphisms,
        }
        return self.report("check-lie", result, [table])

    @command("cohomology")
    def cohomology(self) -> Report:
        ws = self.workspace
        g = ws.algebra()
        n = self.param("n")
        reduced = bool(self.param("reduced"))
        C = reduced_chevalley(g, n) if reduced else chevalley(g, n)
        result: dict[str, Any] = {
            "algebra": ws.pick("algebras"),
            "n": n,
            "reduced": reduced,
            "lie": betti(g.complex),
            "chevalley": betti(C.complex),
            "rank_oracle": rank_betti(C.complex),
        }
        if ws.document.modules:
            M = ws.module()
            result["module"] = ws.pick("modules")
            result["coefficients"] = betti(chevalley_with_coefficients(g, M, n).complex)
            classical = not any(g.degrees) and not any(M.degrees)
            result["classical"] = (
                betti(chevalley_eilenberg_oracle(g, M, n)) if classical else None
            )
        result["agrees"] = result["chevalley"] == result["rank_oracle"]
        return self.report("cohomology", result)

    @command("chevalley")
    def chevalley(self) -> Report:
        g = self.workspace.algebra()
        n = self.param("n")
        C = chevalley(g, n)
        for name, found in (
            ("coassociativity", coassociativity_defect(C)),
            ("cocommutativity", cocommutativity_defect(C)),
            ("counit", counit_defect(C)),
        ):
            if found is not None:
                raise AxiomFail(f"{name} fails", word=C.label(found))
        if not filtration_matches_length(C):
            raise FiltrationNotRespected("coproduct filtration differs from word length", n=n)
        for k in range(1, n + 1):
            decalage(g.complex, k)
        checks = [
            "d' squares to zero",
            "d'' squares to zero",
            "coproduct is a chain map",
            "coassociativity",
            "cocommutativity",
            "counit",
            "coproduct filtration",
            "décalage",
        ]
        words = ReportTable(
            title=f"C(L)_{n}",
            columns=["degree", "words"],
            rows=[
                [str(p), ", ".join(C.label(w) for w in C.words if C.degree(w) == p)]
                for p in C.complex.degrees
            ],
        )
        result = {
            "algebra": self.workspace.pick("algebras"),
            "n": n,
            "dims": C.complex.dims(),
            "betti": betti(C.complex),
            "words": len(C.words),
            "checks": {name: "ok" for name in checks},
        }
        return self.report("chevalley", result, [words])

    @command("mc-check")
    def mc_check(self) -> Report:
        ws = self.workspace
        g, alpha, A = ws.element()
        G = g if A is None else extend_scalars(g, A)
        if not check_mc(g, alpha, A):
            raise NotMaurerCartan(
                "element does not solve the Maurer-Cartan equation",
                defect={G.labels[i]: fmt(v) for i, v in sorted(mc_defect(G, alpha).items())},
            )
        result = {
            "element": ws.pick("elements"),
            "coefficients": None if A is None else list(A.labels),
            "support": sorted(G.labels[i] for i, v in alpha.items() if v != 0),
            "maurer_cartan": True,
        }
        return self.report("mc-check", result)

    @command("twist")
    def twist(self) -> Report:
        ws = self.workspace
        g, alpha, A = ws.element()
        G = g if A is None else extend_scalars(g, A)
        h = twist(G, alpha)
        result = {
            "element": ws.pick("elements"),
            "differential": differential_triples(h),
            "betti_before": betti(G.complex),
            "betti_after": betti(h.complex),
            "unchanged": h.complex.sparse_d == G.complex.sparse_d,
        }
        return self.report("twist", result)

    @command("bv-check")
    def bv_check(self) -> Report:
        g = self.workspace.algebra()
        n = self.param("n")
        reduced = bool(self.param("reduced"))
        C = bv_from_chevalley(g, n, reduced)
        report = check_bv(C)
        result = {
            "algebra": self.workspace.pick("algebras"),
            "n": report.n,
            "unital": report.unital,
            "truncated": report.truncated,
            "products": len(C.product),
            "brackets": len(C.bracket),
            "checks": {name: witness or "ok" for name, witness in report.checks.items()},
        }
        return self.report("bv-check", result, passed=report.passed)


def setup(engine: Any) -> None:
    engine.add_cog(LieCogs)

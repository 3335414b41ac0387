from typing import Any
from collections.abc import Mapping

from src.sdk.linalg import fmt
from src.sdk.report import Report, ReportTable, combination
from src.sdk.algebroid import derivations, diff_operators
from src.sdk.chevalley import Word, WordCoalgebra
from src.sdk.connecting import les_coboundary, connecting_morphism
from src.sdk.deformation import (
    higher_ks,
    equivalence,
    classical_ks,
    cocycle_to_mc,
    resolve_datum,
    universal_family,
    deformation_class,
    class_to_deformation,
    classifying_morphism,
)
from src.cogs import Cog, command
from src.types.errors import HypothesisFail


def words_of(C: WordCoalgebra, vec: Mapping[Word, Any]) -> str:
    terms = [f"{fmt(value)}·{C.label(w)}" for w, value in sorted(vec.items()) if value != 0]
    return " + ".join(terms) or "0"


class DeformationCogs(Cog):
    """Commands on families over Artin bases, connecting morphisms and differential operators."""

    @command("deform")
    def deform(self) -> Report:
        ws = self.workspace
        datum = ws.family()
        u = cocycle_to_mc(datum)
        lie, coords = resolve_datum(datum, u)
        v = deformation_class(lie, coords)
        deformed = class_to_deformation(lie, coords)
        result: dict[str, Any] = {
            "family": ws.pick("families"),
            "base": list(datum.base.labels),
            "bound": lie.bound,
            "mc_terms": len(u),
            "class_words": len(v.vector),
            "first_order_class": v.first_order_class(),
            "sections": deformed.dim,
            "local": deformed.local,
            "global_dim": deformed.global_dim(),
            "globally_free": deformed.globally_free(),
            "algebra_defect": deformed.algebra_defect(),
            "gauge_trivial": equivalence(lie, coords, {}) is not None,
        }
        try:
            universal = universal_family(datum.theta.cover, datum.base.exponent)
        except HypothesisFail as e:
            result["universal"] = {"skipped": e.message}
        else:
            alpha, found = classifying_morphism(universal, datum)
            result["universal"] = {
                "base": list(universal.base.labels),
                "sections": universal.dim,
                "classifying": alpha.matrix,
                "equivalent": found is not None,
            }
        return self.report("deform", result)

    @command("ks")
    def ks(self) -> Report:
        ws = self.workspace
        datum = ws.family()
        n = self.param("n")
        ks = higher_ks(datum, n)
        classical = classical_ks(datum)
        induced = ks.on_cohomology()
        result = {
            "family": ws.pick("families"),
            "n": n,
            "first_order": ks.first_order(),
            "on_cohomology": induced,
            "classical": classical,
            "agrees": all(induced.get(p) == matrix for p, matrix in classical.items()),
            "trivial": ks.is_trivial(),
            "words": len(ks.morphism.images),
            "enveloping": ks.report.abstract,
            "realized": ks.report.realized,
            "grothendieck": ks.report.grothendieck,
        }
        return self.report("ks", result)

    @command("connecting")
    def connecting(self) -> Report:
        ws = self.workspace
        g, span = ws.ideal()
        n = self.param("n")
        c = connecting_morphism(g, span, n)
        les = les_coboundary(g, span)
        induced = c.on_cohomology()
        target = c.target
        words = ReportTable(
            title="c on words",
            columns=["word", "image"],
            rows=[
                [c.source.label(word), words_of(target, image)]
                for word, image in sorted(c.images.items())
            ],
        )
        result = {
            "ideal": ws.pick("ideals"),
            "n": n,
            "ideal_dim": c.tilde.ideal.dim,
            "quotient_dim": c.quotient.algebra.dim,
            "first_order": c.first_order(),
            "on_cohomology": induced,
            "les": les,
            "agrees": all(les.get(p) == matrix for p, matrix in induced.items()),
            "transport_quasi_iso": c.transport_quasi_iso,
            "words": len(c.images),
        }
        return self.report("connecting", result, [words])

    @command("algebroid")
    def algebroid(self) -> Report:
        ws = self.workspace
        O = ws.artin()
        n = self.param("n")
        U, report = diff_operators(O, n)
        D = derivations(O)
        anchors = ReportTable(
            title="derivations",
            columns=["derivation", "images of the basis"],
            rows=[
                [
                    label,
                    ", ".join(
                        combination(O.labels, {r: tau[r, c] for r in range(tau.rows)})
                        for c in range(tau.cols)
                    ),
                ]
                for label, tau in zip(D.labels, D.anchor)
            ],
        )
        result = {
            "artin": ws.pick("artin"),
            "n": n,
            "derivations": D.dim,
            "enveloping": report.abstract,
            "realized": report.realized,
            "grothendieck": report.grothendieck,
            "faithful": report.faithful,
            "exhausts": report.exhausts,
        }
        return self.report("algebroid", result, [anchors])


def setup(engine: Any) -> None:
    engine.add_cog(DeformationCogs)

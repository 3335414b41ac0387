from typing import Any

from src.sdk.report import Report, ReportTable
from src.sdk.acceptance import run_scoreboard
from src.cogs import Cog, command


class SelftestCogs(Cog):
    """The acceptance scoreboard."""

    @command("selftest")
    def selftest(self) -> Report:
        outcomes = run_scoreboard(self.param("seed"), self.param("poly_degree"))
        board = ReportTable(
            title="scoreboard",
            columns=["criterion", "name", "status", "detail"],
            rows=[
                [o.key, o.name, "PASS" if o.passed else "FAIL", o.detail] for o in outcomes
            ],
        )
        result = {
            "seed": self.param("seed"),
            "criteria": {o.key: "PASS" if o.passed else "FAIL" for o in outcomes},
            "details": {o.key: o.detail for o in outcomes},
            "passed": sum(o.passed for o in outcomes),
            "total": len(outcomes),
        }
        return Report(
            command="selftest",
            source="bundled",
            status="ok" if all(o.passed for o in outcomes) else "failed",
            result=result,
            tables=[board],
        )


def setup(engine: Any) -> None:
    engine.add_cog(SelftestCogs)

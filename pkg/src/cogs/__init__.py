"""Command handlers, one cog per area, registered on the engine by each module's `setup`."""

from typing import TYPE_CHECKING, Any, Optional
from collections.abc import Callable

from src.sdk.loader import Workspace
from src.sdk.report import Report, ReportTable

if TYPE_CHECKING:
    from main import Engine

Handler = Callable[..., Report]


def command(name: str) -> Callable[[Handler], Handler]:
    """Marks a cog method as the handler of a command-line command."""

    def mark(func: Handler) -> Handler:
        func.command_name = name
        return func

    return mark


class Cog:
    def __init__(self, engine: "Engine"):
        self.engine = engine

    @classmethod
    def handlers(cls) -> dict[str, str]:
        return {
            func.command_name: attr
            for attr, func in vars(cls).items()
            if hasattr(func, "command_name")
        }

    @property
    def workspace(self) -> Workspace:
        return self.engine.workspace

    def param(self, name: str) -> Any:
        return self.engine.param(name)

    def report(
        self,
        command: str,
        result: dict[str, Any],
        tables: Optional[list[ReportTable]] = None,
        passed: bool = True,
    ) -> Report:
        return Report(
            command=command,
            source=self.workspace.name,
            status="ok" if passed else "failed",
            result=result,
            tables=tables or [],
        )

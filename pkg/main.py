import sys
from typing import Any, Optional
from pathlib import Path
from importlib import import_module

import fire
import logfire
from pydantic import PrivateAttr, ValidationError
from rich.console import Console

from src.sdk.loader import Workspace, load_document
from src.sdk.report import Report, render, failure_report
from src.sdk.runtime import configure_runtime
from src.cogs import Cog
from src.types.config import EngineConfig
from src.types.errors import UsageError, ValidationFailure

COGS = Path(__file__).resolve().parent / "src" / "cogs"

# the bundled fixture each command reads when --input is not given
DEFAULT_FIXTURES: dict[str, Optional[str]] = {
    "check-lie": "sl2",
    "cohomology": "sl2",
    "chevalley": "sl2",
    "jacobi": "odd_plane",
    "udr": "odd_plane",
    "mc-check": "odd_mc",
    "twist": "odd_mc",
    "deform": "loop",
    "ks": "loop",
    "connecting": "arrow",
    "algebroid": "dual_numbers",
    "bv-check": "sl2",
    "rigidity": "sl2",
    "selftest": None,
}


class Engine(EngineConfig):
    """Command-line front end: one method per command, flags from `EngineConfig`.

    Using CLI:
        ```bash
        python ./main.py cohomology --input ./src/data/sl2.json --n 3 --format machine
        DGJ_THREADS=4 python ./main.py selftest
        ```
    """

    _handlers: dict[str, tuple[type[Cog], str]] = PrivateAttr(default_factory=dict)
    _command: Optional[str] = PrivateAttr(default=None)
    _workspace: Optional[Workspace] = PrivateAttr(default=None)

    def model_post_init(self, __context: Any) -> None:
        self.load_cogs()

    def load_cogs(self) -> None:
        cog_files = sorted(f.stem for f in COGS.glob("*.py") if not f.stem.startswith("__"))
        for cog_file in cog_files:
            import_module(f"src.cogs.{cog_file}").setup(self)
        logfire.debug("Cogs Loaded", cog_files=", ".join(cog_files))

    def add_cog(self, cog: type[Cog]) -> None:
        for name, attr in cog.handlers().items():
            self._handlers[name] = (cog, attr)

    @property
    def commands(self) -> list[str]:
        return sorted(self._handlers)

    @property
    def reads_document(self) -> bool:
        return self.input is not None or DEFAULT_FIXTURES.get(self._command) is not None

    @property
    def workspace(self) -> Workspace:
        if self._workspace is None:
            location = self.input or DEFAULT_FIXTURES.get(self._command)
            if location is None:
                raise UsageError(f"{self._command} needs --input")
            document, name = load_document(location)
            self._workspace = Workspace(document=document, name=name)
        return self._workspace

    def param(self, name: str) -> Any:
        """A flag or environment value if given, else the document's params, else the default."""
        if name not in self.model_fields_set and self.reads_document:
            value = getattr(self.workspace.document.params, name, None)
            if value is not None:
                return value
        return getattr(self, name, None)

    def dispatch(self, command: str) -> Report:
        """Runs one command; validation failures become failed reports carrying the witness.

        Raises:
            UsageError: For unknown commands, missing inputs and schema errors.
        """
        if command not in self._handlers:
            raise UsageError(f"unknown command {command!r}; choose from {self.commands}")
        self._command = command
        cog, attr = self._handlers[command]
        source = self.workspace.name if self.reads_document else "bundled"
        with logfire.span("run {command}", command=command, source=source):
            try:
                return getattr(cog(self), attr)()
            except ValidationFailure as e:
                logfire.info("validation failed", command=command, error=str(e))
                return failure_report(command, source, e)

    def run(self, command: str) -> None:
        if self.verbose:
            logfire.configure(
                send_to_logfire=False,
                console=logfire.ConsoleOptions(min_log_level="debug", output=sys.stderr),
            )
        configure_runtime(self)
        try:
            report = self.dispatch(command)
        except UsageError as e:
            Console(stderr=True, highlight=False).print(f"usage error: {e}", markup=False)
            raise SystemExit(1) from e
        sys.stdout.write(render(report, self.format))
        if report.exit_code:
            raise SystemExit(report.exit_code)

    def check_lie(self) -> None:
        """Validates a dg Lie algebra and prints its bracket table."""
        self.run("check-lie")

    def cohomology(self) -> None:
        """Cohomology of L and of C(L)_n, with the rank and classical oracles."""
        self.run("cohomology")

    def chevalley(self) -> None:
        self.run("chevalley")

    def jacobi(self) -> None:
        self.run("jacobi")

    def udr(self) -> None:
        """The tower of universal deformation algebras up to n."""
        self.run("udr")

    def mc_check(self) -> None:
        self.run("mc-check")

    def twist(self) -> None:
        self.run("twist")

    def deform(self) -> None:
        """Resolves a cover family, reads off its class and glues the deformation back."""
        self.run("deform")

    def ks(self) -> None:
        self.run("ks")

    def connecting(self) -> None:
        self.run("connecting")

    def algebroid(self) -> None:
        self.run("algebroid")

    def bv_check(self) -> None:
        self.run("bv-check")

    def rigidity(self) -> None:
        self.run("rigidity")

    def selftest(self) -> None:
        """Prints the acceptance scoreboard; exits with 2 if a criterion fails."""
        self.run("selftest")


if __name__ == "__main__":
    try:
        fire.Fire(Engine)
    except ValidationError as e:
        Console(stderr=True, highlight=False).print(f"usage error: {e}", markup=False)
        raise SystemExit(1) from e
    except fire.core.FireExit as e:
        raise SystemExit(1 if e.code else 0) from e

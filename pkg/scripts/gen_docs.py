import ast
import shutil
from typing import Literal
from pathlib import Path

from pydantic import Field, BaseModel, ConfigDict
from rich.progress import Progress


class DocsGenerator(BaseModel):
    """Writes one mkdocstrings page per engine module (or per public class) under `output`.

    Using CLI:
        ```bash
        python ./scripts/gen_docs.py --source ./src --output ./docs/Reference gen_docs
        ```
    """

    model_config = ConfigDict(frozen=True)
    source: str
    output: str
    exclude: str = Field(
        default=".venv,data",
        description="Comma-separated folders or files to skip.",
        examples=[".venv,.git,data"],
    )
    mode: Literal["file", "class"] = Field(
        default="file", description="One page per module, or one entry per public class."
    )

    def page(self, file: Path) -> str:
        """The mkdocstrings directives of one source file.

        Examples:
            >>> DocsGenerator(source="src", output="docs/Reference").page(Path("src/sdk/bv.py"))
            '::: src.sdk.bv\\n'
        """
        dotted = file.as_posix().removesuffix(".py").replace("/", ".")
        if self.mode == "file":
            return f"::: {dotted}\n"
        tree = ast.parse(file.read_text(encoding="utf-8"), filename=file.as_posix())
        names = [
            node.name
            for node in ast.walk(tree)
            if isinstance(node, ast.ClassDef) and not node.name.startswith("_")
        ]
        return "".join(f"::: {dotted}.{name}\n" for name in names) or f"::: {dotted}\n"

    def gen_docs(self) -> None:
        source, output = Path(self.source), Path(self.output)
        if not source.is_dir():
            raise ValueError(f"not a directory: {source}")
        if output.exists():
            shutil.rmtree(output)
        skip = [*self.exclude.split(","), "__init__.py"]
        files = sorted(f for f in source.glob("**/*.py") if not any(s in f.parts for s in skip))
        with Progress() as progress:
            task = progress.add_task("[green]Generating docs...", total=len(files))
            for file in files:
                target = output / file.parent.relative_to(source) / file.with_suffix(".md").name
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(self.page(file), encoding="utf-8")
                progress.update(task, advance=1, description=f"[cyan]{target.as_posix()}")


if __name__ == "__main__":
    import fire

    fire.Fire(DocsGenerator)

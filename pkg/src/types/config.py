from typing import Literal, Optional

import logfire
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logfire.configure(send_to_logfire=False, console=False)


class EngineConfig(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="DGJ_", extra="ignore")

    input: Optional[str] = Field(
        default=None,
        description="Path of the JSON input document; bundled fixtures are used when omitted.",
        examples=["./src/data/sl2.json"],
        frozen=False,
        deprecated=False,
    )
    n: int = Field(
        default=2,
        description="Word-length truncation of Chevalley and Jacobi complexes.",
        examples=[1, 2, 3],
        frozen=False,
        deprecated=False,
    )
    cutoff: Optional[int] = Field(
        default=None,
        description="Ran-model cutoff N; defaults to n + 1 so stabilization can be observed.",
        examples=[3],
        frozen=False,
        deprecated=False,
    )
    poly_degree: int = Field(
        default=3,
        description="Weight bound D of the polynomial de Rham forms.",
        examples=[2, 3],
        frozen=False,
        deprecated=False,
    )
    seed: int = Field(
        default=0,
        description="Seed of the generated property-suite inputs used by selftest.",
        examples=[0, 7],
        frozen=False,
        deprecated=False,
    )
    format: Literal["human", "machine"] = Field(
        default="human",
        description="Report flavour: rich tables or sorted-key JSON.",
        examples=["human", "machine"],
        frozen=False,
        deprecated=False,
    )
    threads: int = Field(
        default=1,
        description="Worker threads for per-degree rank computations.",
        examples=[1, 4],
        frozen=False,
        deprecated=False,
    )
    window: int = Field(
        default=16,
        description="Degree window bound; graded spaces outside [-window, window] are rejected.",
        examples=[16],
        frozen=False,
        deprecated=False,
    )
    verbose: bool = Field(
        default=False,
        description="Mirror logfire events on the console (stderr).",
        examples=[False],
        frozen=False,
        deprecated=False,
    )

from typing import TypeVar
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor

from pydantic import Field, BaseModel

from src.types.config import EngineConfig

T = TypeVar("T")
R = TypeVar("R")


class RuntimeSettings(BaseModel):
    window: int = Field(default=16, description="Degree window bound for graded spaces.")
    threads: int = Field(default=1, description="Workers used by ordered_map.")


runtime = RuntimeSettings()


def configure_runtime(config: EngineConfig) -> RuntimeSettings:
    runtime.window = config.window
    runtime.threads = max(1, config.threads)
    return runtime


def ordered_map(func: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Maps `func` over `items`, possibly on worker threads, preserving input order.

    Examples:
        >>> ordered_map(lambda x: x * x, [1, 2, 3])
        [1, 4, 9]
    """
    items = list(items)
    if runtime.threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=runtime.threads) as pool:
        return list(pool.map(func, items))

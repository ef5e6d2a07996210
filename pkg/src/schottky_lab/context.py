from __future__ import annotations

import asyncio
import functools
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Optional, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr

T = TypeVar("T")


class RunContext(BaseModel):
    """Shared state of one run: seed, worker budget and output directory.

    The worker pool is created on first use and shared by every step of
    the run; call ``close`` (or use the context as a context manager) when
    the run ends.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    out_dir: Path = Field(default=Path("out"))
    metadata: Dict[str, Any] = Field(default_factory=dict)

    _executor: Optional[ThreadPoolExecutor] = PrivateAttr(default=None)

    @property
    def executor(self) -> ThreadPoolExecutor:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(
                max_workers=self.threads, thread_name_prefix="schottky-lab"
            )
        return self._executor

    def rng(self, *key: int) -> np.random.Generator:
        """Generator seeded by the run seed and a task key."""
        return np.random.default_rng([self.seed, *key])

    def task_seed(self, *key: int) -> int:
        """Integer seed for library calls that take one."""
        return int(self.rng(*key).integers(0, 2**31 - 1))

    async def run_sync(self, fn: Callable[..., T], *args: Any, **kwargs: Any) -> T:
        """Run a blocking function on the worker pool."""
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self.executor, functools.partial(fn, *args, **kwargs))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "RunContext":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

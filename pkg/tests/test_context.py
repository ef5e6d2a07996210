from pathlib import Path

import pytest
from pydantic import ValidationError

from schottky_lab.context import RunContext


class TestRunContext:

    def test_defaults(self):
        ctx = RunContext()
        assert ctx.seed == 0
        assert ctx.threads >= 1
        assert ctx.out_dir == Path("out")
        assert ctx.metadata == {}

    def test_seed_range(self):
        RunContext(seed=2**64 - 1)
        with pytest.raises(ValidationError):
            RunContext(seed=2**64)
        with pytest.raises(ValidationError):
            RunContext(seed=-1)

    def test_task_rngs_are_reproducible(self):
        ctx = RunContext(seed=7)
        assert ctx.rng(1).integers(0, 1000, 5).tolist() == RunContext(seed=7).rng(1).integers(0, 1000, 5).tolist()
        assert ctx.task_seed(1) == RunContext(seed=7).task_seed(1)
        assert ctx.task_seed(1) != ctx.task_seed(2)

    def test_executor_is_shared_and_closed(self):
        ctx = RunContext(threads=2)
        pool = ctx.executor
        assert ctx.executor is pool
        assert pool.submit(sum, [1, 2, 3]).result() == 6
        ctx.close()
        assert ctx._executor is None

    def test_context_manager(self):
        with RunContext(threads=1) as ctx:
            assert ctx.executor.submit(len, "abc").result() == 3
        assert ctx._executor is None

    @pytest.mark.asyncio
    async def test_run_sync(self):
        with RunContext(threads=1) as ctx:
            assert await ctx.run_sync(pow, 2, 10) == 1024


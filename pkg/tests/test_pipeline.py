import asyncio

import pytest
from expression import Error, Ok

from schottky_lab.context import RunContext
from schottky_lab.errors import ConvergenceError
from schottky_lab.pipeline import Step, gather_map, step


@step
def add_one(x: int) -> int:
    return x + 1


@step
def double(x: int) -> int:
    return x * 2


@step
async def slow_square(x: int) -> int:
    await asyncio.sleep(0.01)
    return x * x


@step
def explode(x: int) -> int:
    raise ConvergenceError(f"no convergence at {x}")


@step(context=True)
def read_seed(x: int, context: RunContext) -> int:
    return x + context.seed


class TestStep:

    @pytest.mark.asyncio
    async def test_execute_ok(self):
        result = await add_one.execute(1)
        assert result == Ok(2)

    @pytest.mark.asyncio
    async def test_execute_captures_errors(self):
        result = await explode.execute(3)
        assert result.is_error()
        assert isinstance(result.error, ConvergenceError)

    @pytest.mark.asyncio
    async def test_chain(self):
        assert await (add_one >> double >> slow_square).execute(2) == Ok(36)

    @pytest.mark.asyncio
    async def test_chain_stops_at_first_error(self):
        calls = []
        tail = Step(lambda x: calls.append(x) or x, name="tail")
        result = await (add_one >> explode >> tail).execute(1)
        assert result.is_error()
        assert calls == []

    @pytest.mark.asyncio
    async def test_parallel(self):
        assert await (add_one & double).execute(5) == Ok((6, 10))

    @pytest.mark.asyncio
    async def test_parallel_error(self):
        result = await (add_one & explode).execute(5)
        assert isinstance(result.error, ConvergenceError)

    @pytest.mark.asyncio
    async def test_context_passed(self):
        ctx = RunContext(seed=40)
        assert await (add_one >> read_seed).execute(1, context=ctx) == Ok(42)

    @pytest.mark.asyncio
    async def test_offload(self):
        heavy = step(offload=True, name="heavy")(lambda x: x - 1)
        with RunContext(threads=1) as ctx:
            assert await heavy.execute(10, context=ctx) == Ok(9)

    def test_sequence(self):
        assert repr(Step.sequence([add_one, double])) == "Step(add_one >> double)"
        with pytest.raises(ValueError):
            Step.sequence([])

    def test_rshift_needs_step(self):
        with pytest.raises(TypeError):
            add_one >> (lambda x: x)


@pytest.mark.asyncio
async def test_gather_map_keeps_order():
    with RunContext(threads=3) as ctx:
        assert await gather_map(ctx, lambda x: x * 10, range(5)) == [0, 10, 20, 30, 40]

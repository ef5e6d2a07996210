from __future__ import annotations

import asyncio
import inspect
import logging
from typing import (
    Any,
    Awaitable,
    Callable,
    Generic,
    Iterable,
    List,
    Sequence,
    Tuple,
    TypeVar,
    cast,
    overload,
)

from expression import Error, Ok, Result

from schottky_lab.context import RunContext

logger = logging.getLogger(__name__)

R = TypeVar("R")
S = TypeVar("S")
T = TypeVar("T")


def _ensure_async(fn: Callable[..., Any]) -> Callable[..., Awaitable[Any]]:
    """Wrap a sync function so that it is awaitable.

    Args:
        fn: The function to wrap.

    Returns:
        An awaitable version of the function.
    """
    if inspect.iscoroutinefunction(fn):
        return fn

    async def _wrapper(*args: Any, **kwargs: Any) -> Any:
        return fn(*args, **kwargs)

    return _wrapper


class Step(Generic[R]):
    """A unit of a run: a function of the previous value and the run context.

    Steps compose with ``>>`` (feed the value on) and ``&`` (run side by
    side on the same input). ``execute`` never raises for exceptions coming
    out of the wrapped functions; it returns them inside ``Error``.

    Examples:
    ```python
    >>> pipeline = load >> validate >> compute
    >>> result = await pipeline.execute(config, context=ctx)
    >>> result.is_ok()
    True
    ```
    """

    def __init__(
        self,
        fn: Callable[..., Any],
        *,
        name: str | None = None,
        needs_context: bool = False,
        offload: bool = False,
    ) -> None:
        """Initialize a Step.

        Args:
            fn: Sync or async function taking the input value(s).
            name: Label used in log messages.
            needs_context: Pass the run context as the ``context`` keyword.
            offload: Run a sync ``fn`` on the context's worker pool.
        """
        self._fn = fn
        self._call = _ensure_async(fn)
        self.name = name or getattr(fn, "__name__", "step")
        self.needs_context = needs_context
        self.offload = offload and not inspect.iscoroutinefunction(fn)

    def __repr__(self) -> str:
        return f"Step({self.name})"

    async def _run(self, args: Tuple[Any, ...], context: RunContext | None) -> R:
        kwargs = {"context": context} if self.needs_context else {}
        logger.debug("running step %s", self.name)
        if self.offload and context is not None:
            return cast(R, await context.run_sync(self._fn, *args, **kwargs))
        return cast(R, await self._call(*args, **kwargs))

    async def execute(self, *args: Any, context: RunContext | None = None) -> Result[R, Exception]:
        """Run the step and wrap the outcome.

        Returns:
            ``Ok(value)`` on success, ``Error(exc)`` if the function raised.
        """
        try:
            return Ok(await self._run(args, context))
        except Exception as exc:  # noqa: BLE001 - results carry every failure
            logger.debug("step %s failed: %r", self.name, exc)
            return Error(exc)

    def __rshift__(self, other: "Step[S]") -> "Step[S]":
        """Feed this step's value into ``other``."""
        if not isinstance(other, Step):
            raise TypeError("Operand to >> must be a Step.")

        async def _chain(*args: Any, context: RunContext | None = None) -> S:
            value = await self._run(args, context)
            return await other._run((value,), context)

        return Step(_chain, name=f"{self.name} >> {other.name}", needs_context=True)

    def __and__(self, other: "Step[S]") -> "Step[Tuple[R, S]]":
        """Run both steps on the same input concurrently."""
        if not isinstance(other, Step):
            raise TypeError("Operand to & must be a Step.")

        async def _parallel(*args: Any, context: RunContext | None = None) -> Tuple[R, S]:
            first, second = await asyncio.gather(
                self.execute(*args, context=context),
                other.execute(*args, context=context),
            )
            if first.is_error():
                raise first.error
            if second.is_error():
                raise second.error
            return (cast(R, first.default_value(None)), cast(S, second.default_value(None)))

        return Step(_parallel, name=f"({self.name} & {other.name})", needs_context=True)

    @classmethod
    def sequence(cls, steps: Sequence["Step[Any]"]) -> "Step[Any]":
        """Chain steps left to right."""
        if not steps:
            raise ValueError("sequence needs at least one step")
        chained = steps[0]
        for nxt in steps[1:]:
            chained = chained >> nxt
        return chained


@overload
def step(_fn: Callable[..., R]) -> Step[R]: ...


@overload
def step(
    _fn: None = None, *, context: bool = False, offload: bool = False, name: str | None = None
) -> Callable[[Callable[..., R]], Step[R]]: ...


def step(
    _fn: Callable[..., R] | None = None,
    *,
    context: bool = False,
    offload: bool = False,
    name: str | None = None,
) -> Step[R] | Callable[[Callable[..., R]], Step[R]]:
    """
    Decorator turning a function into a Step.

    Usage:
    ```python
        @step
        def parse(text): ...

        @step(context=True, offload=True)
        def heavy(value, context): ...
    ```
    """

    def _decorate(fn: Callable[..., R]) -> Step[R]:
        built: Step[R] = Step(fn, name=name, needs_context=context, offload=offload)
        if fn.__doc__:
            built.__doc__ = fn.__doc__
        return built

    if _fn is None:
        return _decorate
    return _decorate(_fn)


async def gather_map(context: RunContext, fn: Callable[[T], S], items: Iterable[T]) -> List[S]:
    """Apply a blocking ``fn`` to every item on the worker pool, results in input order."""
    return list(await asyncio.gather(*(context.run_sync(fn, item) for item in items)))

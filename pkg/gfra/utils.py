"""
This module provides utility functions.
"""

import asyncio
import functools
import math
from concurrent.futures import Executor
from typing import (Any, Awaitable, Callable, Iterable, List, Optional)

import numpy as np


def ensure_async(func: Callable[..., Any]) -> Callable[..., Awaitable[Any]]:
    """
    Make sure the callable `func` is a coroutine function; if it is not, wrap
    it so that it runs in the default executor of the running loop.
    """
    if asyncio.iscoroutinefunction(func):
        return func

    @functools.wraps(func)
    async def wrapper(*args, **kwargs):
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(
            None, functools.partial(func, *args, **kwargs))

    return wrapper


async def run_async_funcs(funcs: Iterable[Callable[..., Awaitable[Any]]],
                          *args, **kwargs) -> List[Any]:
    """
    Run several coroutine functions concurrently, wait for all of them and
    return the list of results.
    """
    results = []
    coros = []
    for f in funcs:
        coros.append(f(*args, **kwargs))
    if coros:
        results += await asyncio.gather(*coros)
    return results


async def run_in_pool(executor: Optional[Executor], func: Callable[..., Any],
                      *args, **kwargs) -> Any:
    """
    Run a blocking `func` in ``executor`` (the loop's default executor when
    `None`) and await its result.
    """
    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(
        executor, functools.partial(func, *args, **kwargs))


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """
    Random stream of trial ``index`` under master ``seed``; the stream seed is
    ``seed XOR index``, so trials do not depend on scheduling order.
    """
    return np.random.default_rng(int(seed) ^ int(index))


def fmt_num(value: Any) -> str:
    """Format a table cell; floats keep 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return 'nan'
        return '%.17g' % value
    return str(value)

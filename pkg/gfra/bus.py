"""
This module provides the event bus.
"""

from collections import defaultdict
from typing import Any, Callable, List

from .utils import run_async_funcs


class EventBus:
    """
    Publish/subscribe hub keyed by dotted event names. Emitting
    ``point.done`` runs the before-hooks of ``point.done`` and ``point``
    first, then the subscribers of ``point.done`` and then of ``point``.
    """

    def __init__(self):
        self._subscribers = defaultdict(set)
        self._hooks_before = defaultdict(set)

    def subscribe(self, event: str, func: Callable) -> None:
        self._subscribers[event].add(func)

    def unsubscribe(self, event: str, func: Callable) -> None:
        if func in self._subscribers[event]:
            self._subscribers[event].remove(func)

    def hook_before(self, event: str, func: Callable) -> None:
        self._hooks_before[event].add(func)

    def unhook_before(self, event: str, func: Callable) -> None:
        if func in self._hooks_before[event]:
            self._hooks_before[event].remove(func)

    @staticmethod
    def _chain(event: str) -> List[str]:
        names = [event]
        while '.' in event:
            event = event.rsplit('.', maxsplit=1)[0]
            names.append(event)
        return names

    async def emit(self, event: str, *args, **kwargs) -> List[Any]:
        chain = self._chain(event)
        for name in chain:
            await run_async_funcs(self._hooks_before[name], *args, **kwargs)

        results = []
        for name in chain:
            results += await run_async_funcs(self._subscribers[name], *args,
                                             **kwargs)
        return results

"""
This module mainly provides the `Simulator` class, which runs Monte Carlo
sweeps of the grant-free random access receiver and dispatches their
progress as events; it also imports the commonly used classes and functions
from the `config`, `event`, `harness`, `analysis` and `exceptions` modules
for convenience.
"""

import asyncio
import logging
from typing import Callable, List, Optional, Sequence, Union

from .analysis import EvolutionResult, analysis_table
from .bus import EventBus
from .config import SweepSpec, SystemConfig
from .event import Event
from .exceptions import TimingError
from .harness import TrialMetrics, run_trial, sweep_async
from .utils import ensure_async

from . import exceptions
from .exceptions import *  # noqa: F401, F403

__version__ = '0.1.0'

__all__ = [
    'Simulator',
    'SystemConfig',
    'SweepSpec',
    'Event',
    'EvolutionResult',
    'TrialMetrics',
    'run_trial',
    'run_sweep',
]
__all__ += exceptions.__all__

__pdoc__ = {}


def _deco_maker(deco_method: Callable, type_: str) -> Callable:

    def deco_deco(self,
                  arg: Optional[Union[str, Callable]] = None,
                  *sub_event_names: str) -> Callable:

        def deco(func: Callable) -> Callable:
            if isinstance(arg, str):
                e = [type_ + '.' + e for e in [arg] + list(sub_event_names)]
                deco_method(self, *e)(func)
            else:
                deco_method(self, type_)(func)
            return func

        if callable(arg):
            return deco(arg)
        return deco

    return deco_deco


class Simulator:
    """
    Main class of the simulator: holds the event handlers and runs sweeps,
    single-point simulations and the analysis.

    ```py
    sim = Simulator(workers=4)

    @sim.on_point('done')
    def report(event):
        for row in event.rows:
            print(row['scheme'], row['p_s'])

    rows = sim.run_sweep(SweepSpec.load('sweep.toml'))
    ```

    Events are ``point.start``, ``trial.done``, ``point.done`` and
    ``sweep.done``; see `Event` for their fields.
    """

    def __init__(self, *, workers: int = 1):
        """
        ``workers`` is the number of worker processes trials run in; with 1
        they run on the event loop's default executor.
        """
        self._bus = EventBus()
        self._workers = max(int(workers), 1)

    @property
    def logger(self) -> logging.Logger:
        """The ``gfra`` logger."""
        return logging.getLogger('gfra')

    @property
    def workers(self) -> int:
        return self._workers

    def subscribe(self, event_name: str, func: Callable) -> None:
        """Register an event handler."""
        self._bus.subscribe(event_name, ensure_async(func))

    def unsubscribe(self, event_name: str, func: Callable) -> None:
        """Unregister an event handler."""
        self._bus.unsubscribe(event_name, func)

    def on(self, *event_names: str) -> Callable:
        """
        Register an event handler, used as a decorator:

        ```py
        @sim.on('trial.done')
        async def handler(event):
            print(event.record['na_hat'])
        ```

        Handlers of ``trial`` also receive ``trial.done``, after the more
        specific handlers have run.
        """

        def deco(func: Callable) -> Callable:
            for name in event_names:
                self.subscribe(name, func)
            return func

        return deco

    on_trial = _deco_maker(on, 'trial')
    __pdoc__['Simulator.on_trial'] = """
    Register a trial event handler, used as a decorator; ``@sim.on_trial``
    equals ``@sim.on('trial')`` and ``@sim.on_trial('done')`` equals
    ``@sim.on('trial.done')``.
    """

    on_point = _deco_maker(on, 'point')
    __pdoc__['Simulator.on_point'] = "Register a grid point event handler."

    on_sweep = _deco_maker(on, 'sweep')
    __pdoc__['Simulator.on_sweep'] = "Register a sweep event handler."

    def hook_before(self, event_name: str, func: Callable) -> None:
        """Register a hook that runs before the handlers of an event."""
        self._bus.hook_before(event_name, ensure_async(func))

    def unhook_before(self, event_name: str, func: Callable) -> None:
        self._bus.unhook_before(event_name, func)

    def before(self, *event_names: str) -> Callable:
        """
        Register before-hooks, used as a decorator. Every hook of every
        level finishes before the first handler runs, so hooks can amend the
        event in place.
        """

        def deco(func: Callable) -> Callable:
            for name in event_names:
                self.hook_before(name, func)
            return func

        return deco

    async def sweep(self, spec: SweepSpec) -> List[dict]:
        """Run a sweep, emitting its events; returns the result rows."""
        return await sweep_async(spec,
                                 workers=self._workers,
                                 emit=self._bus.emit)

    async def simulate(self,
                       cfg: SystemConfig,
                       trials: int,
                       *,
                       baselines: Sequence[str] = (),
                       analysis: bool = False,
                       out: Optional[str] = None) -> List[dict]:
        """Monte Carlo run of a single operating point."""
        return await self.sweep(
            SweepSpec.single(cfg, trials, baselines, analysis, out))

    def _block(self, coro):
        try:
            asyncio.get_running_loop()
        except RuntimeError:
            return asyncio.run(coro)
        coro.close()
        raise TimingError('blocking call inside a running event loop, '
                          'await the coroutine method instead')

    def run_sweep(self, spec: SweepSpec) -> List[dict]:
        """Blocking `Simulator.sweep`."""
        return self._block(self.sweep(spec))

    def run_simulation(self, cfg: SystemConfig, trials: int,
                       **kwargs) -> List[dict]:
        """Blocking `Simulator.simulate`."""
        return self._block(self.simulate(cfg, trials, **kwargs))

    @staticmethod
    def analyze(configs: Union[SystemConfig, Sequence[SystemConfig]]
                ) -> List[dict]:
        """Analytical bound rows for one or more configurations."""
        if isinstance(configs, SystemConfig):
            configs = [configs]
        return analysis_table(configs)


def run_sweep(spec: SweepSpec, workers: int = 1) -> List[dict]:
    """Run ``spec`` on a fresh `Simulator` without event handlers."""
    return Simulator(workers=workers).run_sweep(spec)


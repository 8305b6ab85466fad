import asyncio
import math

import numpy as np
import pytest

from gfra import Simulator, SweepSpec, TimingError
from gfra import default
from gfra.bus import EventBus
from gfra.event import Event
from gfra.utils import ensure_async, fmt_num, trial_rng


def test_event_fields():
    e = Event(name='trial.done', trial=3, record={'na_hat': 5})
    assert (e.type, e.detail_type) == ('trial', 'done')
    assert e.trial == 3 and e.record['na_hat'] == 5
    assert e.rows is None
    e.rows = []
    assert e['rows'] == []


def test_bus_order():
    bus = EventBus()
    calls = []

    async def hook(tag, *args):
        calls.append(('hook', tag))

    async def point_done(tag):
        calls.append(('point.done', tag))

    async def point(tag):
        calls.append(('point', tag))

    bus.subscribe('point', point)
    bus.subscribe('point.done', point_done)
    bus.hook_before('point', hook)
    asyncio.run(bus.emit('point.done', 'x'))
    assert calls == [('hook', 'x'), ('point.done', 'x'), ('point', 'x')]

    calls.clear()
    bus.unsubscribe('point', point)
    bus.unhook_before('point', hook)
    bus.unsubscribe('sweep', point)
    asyncio.run(bus.emit('point.done', 'y'))
    assert calls == [('point.done', 'y')]


def test_bus_hook_sees_event_first():
    bus = EventBus()
    seen = []

    async def hook(event):
        event['seen_by_hook'] = True

    async def handler(event):
        seen.append(event['seen_by_hook'])

    bus.hook_before('trial.done', hook)
    bus.subscribe('trial', handler)
    asyncio.run(bus.emit('trial.done', {}))
    assert seen == [True]


def test_ensure_async_wraps_sync():
    def add(a, b):
        return a + b

    wrapped = ensure_async(add)
    assert asyncio.iscoroutinefunction(wrapped)
    assert asyncio.run(wrapped(2, 3)) == 5

    async def coro():
        pass

    assert ensure_async(coro) is coro


def test_trial_rng_is_order_free():
    a = trial_rng(42, 3).integers(0, 1000, size=5)
    b = trial_rng(42, 3).integers(0, 1000, size=5)
    c = trial_rng(42, 4).integers(0, 1000, size=5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize('value,text', [
    (3, '3'),
    (np.int64(7), '7'),
    (True, '1'),
    (0.1, '0.10000000000000001'),
    (math.nan, 'nan'),
    ('gcica-ra', 'gcica-ra'),
])
def test_fmt_num(value, text):
    assert fmt_num(value) == text


def test_simulator_events(small_cfg):
    sim = Simulator()
    seen = {'trial': 0, 'point': [], 'sweep': 0, 'hooks': 0}

    @sim.on_trial('done')
    def on_trial(event):
        assert event.record['n_i'] == small_cfg.n_i
        seen['trial'] += 1

    @sim.on_point
    async def on_point(event):
        seen['point'].append(event.detail_type)

    @sim.on_sweep('done')
    async def on_sweep(event):
        seen['sweep'] = len(event.rows)

    @sim.before('trial')
    async def hook(event):
        seen['hooks'] += 1

    rows = sim.run_simulation(small_cfg, 3, baselines=['traditional'])
    assert len(rows) == 2
    assert seen == {'trial': 3, 'point': ['start', 'done'], 'sweep': 2,
                    'hooks': 3}


def test_simulator_unsubscribe(small_cfg):
    sim = Simulator()
    seen = []

    async def handler(event):
        seen.append(event.name)

    sim.subscribe('sweep.done', handler)
    sim.unsubscribe('sweep.done', handler)
    sim.run_simulation(small_cfg, 1)
    assert seen == []


def test_blocking_call_inside_loop(small_cfg):
    sim = Simulator()

    async def main():
        with pytest.raises(TimingError):
            sim.run_sweep(SweepSpec.single(small_cfg, 1))
        return await sim.simulate(small_cfg, 1)

    rows = asyncio.run(main())
    assert rows[0]['trials'] == 1


def test_default_simulator(small_cfg):
    assert isinstance(default.default_simulator, Simulator)
    seen = []

    @default.on_point('done')
    async def handler(event):
        seen.append(event.point)

    default.run_simulation(small_cfg, 1)
    assert seen == [0]
    rows = default.analyze(small_cfg)
    assert len(rows) == 1 and rows[0]['na'] == small_cfg.na

"""
This module provides a default `Simulator` object and shortcuts to its
methods, for scripts that need only one simulator.
"""

from . import Simulator

__all__ = [
    'default_simulator',
    'run_sweep',
    'run_simulation',
    'analyze',
    'on',
    'on_trial',
    'on_point',
    'on_sweep',
    'before',
]

__pdoc__ = {}

default_simulator = Simulator()
"""The default simulator object."""

run_sweep = default_simulator.run_sweep
__pdoc__['run_sweep'] = "Run a sweep on the default simulator."

run_simulation = default_simulator.run_simulation
__pdoc__['run_simulation'] = "Run one point on the default simulator."

analyze = default_simulator.analyze
__pdoc__['analyze'] = "Analytical bound rows for one or more configurations."

on = default_simulator.on
__pdoc__['on'] = "Register an event handler on the default simulator."

on_trial = default_simulator.on_trial
__pdoc__['on_trial'] = "Register a trial handler on the default simulator."

on_point = default_simulator.on_point
__pdoc__['on_point'] = """
Register a grid point event handler on the default simulator.
"""

on_sweep = default_simulator.on_sweep
__pdoc__['on_sweep'] = "Register a sweep handler on the default simulator."

before = default_simulator.before
__pdoc__['before'] = "Register a before-hook on the default simulator."

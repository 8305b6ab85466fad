"""
This module provides the `Event` class carried on the simulator's event bus.
"""

from typing import Any, Dict, Optional


class Event(dict):
    """
    A progress or result record (a dictionary) with attribute access to its
    fields.

    ``name`` is always present; the remaining fields depend on the event:
    ``trial.done`` carries the per-trial record, ``point.start`` and
    ``point.done`` carry the grid point and its rows, ``sweep.done`` carries
    every row of the sweep.
    """

    @property
    def name(self) -> str:
        """Dotted event name, e.g. ``trial.done``."""
        return self['name']

    @property
    def type(self) -> str:
        """Event type: ``trial``, ``point`` or ``sweep``."""
        return self.name.split('.', maxsplit=1)[0]

    @property
    def detail_type(self) -> str:
        """What happened, e.g. ``start`` or ``done``."""
        return self.name.split('.', maxsplit=1)[1]

    point: Optional[int]  # 0-based grid point index
    trial: Optional[int]  # 0-based trial index within the point
    config: Optional[Dict[str, Any]]  # configuration of the grid point
    record: Optional[Dict[str, Any]]  # per-trial diagnostic record
    rows: Optional[list]  # result rows

    def __getattr__(self, key) -> Optional[Any]:
        return self.get(key)

    def __setattr__(self, key, value) -> None:
        self[key] = value

    def __repr__(self) -> str:
        return f'<Event, {super().__repr__()}>'

"""
This module provides the comparison schemes: traditional single-pilot
random access, and an approximation of grant-free access with multiple
preambles in which a UE succeeds when its whole super pilot is unique.

The multiple-preamble scheme is modelled optimistically (any UE with an
unshared super pilot is decoded); its outputs are labelled
``multipreamble_approx`` everywhere.
"""

import collections
import dataclasses
from typing import Sequence

import numpy as np

from .analysis import uplink_throughput
from .config import SystemConfig
from .exceptions import UsageError
from .model import UplinkFrame

__all__ = [
    'BaselineOutcome',
    'traditional_ra',
    'multipreamble_approx',
    'run_baseline',
]


@dataclasses.dataclass(eq=False)
class BaselineOutcome:
    """Per-UE success flags of a comparison scheme."""

    flags: np.ndarray

    @property
    def successes(self) -> int:
        return int(np.count_nonzero(self.flags))

    def throughput(self, cfg: SystemConfig) -> float:
        """Uplink throughput with the same pilot overhead as the scheme."""
        return uplink_throughput(self.successes, cfg)


def traditional_ra(na: int, pilot_pool_size: int,
                   rng: np.random.Generator) -> BaselineOutcome:
    """
    Every UE picks one pilot from the pool; it succeeds iff nobody else
    picked the same one.
    """
    if pilot_pool_size < 1:
        raise UsageError('pilot pool must hold at least one pilot')
    picks = rng.integers(0, pilot_pool_size, size=na)
    counts = np.bincount(picks, minlength=pilot_pool_size)
    return BaselineOutcome(counts[picks] == 1)


def multipreamble_approx(frames: Sequence[UplinkFrame]) -> BaselineOutcome:
    """A UE succeeds iff no other UE chose the same sub-pilot tuple."""
    counts = collections.Counter(f.subpilot_idx for f in frames)
    return BaselineOutcome(
        np.array([counts[f.subpilot_idx] == 1 for f in frames], dtype=bool))


def run_baseline(name: str, cfg: SystemConfig,
                 frames: Sequence[UplinkFrame],
                 rng: np.random.Generator) -> BaselineOutcome:
    """
    Evaluate baseline ``name`` on the same slot; the traditional scheme gets
    a pool of ``tau_p * L`` pilots so that both use equal pilot length.
    """
    if name == 'traditional':
        return traditional_ra(len(frames), cfg.tau_p * cfg.l, rng)
    if name == 'multipreamble_approx':
        return multipreamble_approx(frames)
    raise UsageError(f'unknown baseline {name!r}')

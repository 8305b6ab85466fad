"""
This module provides definitions used for type hints.
"""

from typing import Tuple

import numpy as np

__all__ = [
    'Bits',
    'Selection',
]

Bits = np.ndarray
"""A one-dimensional ``uint8`` array of 0/1 values."""

Selection = Tuple[int, ...]
"""One UE's 1-based sub-pilot indices, one entry per phase."""

"""
This module provides active-UE detection: the validity test every
estimated CSI column must pass, the random access response (RAR) the base
station broadcasts, and the statistic a UE uses to tell whether it was
detected.
"""

import dataclasses
from typing import List, Optional, Tuple

import numpy as np

from .config import SystemConfig
from .sic import CsiSet, FactorEstimates
from .typing import Selection

__all__ = [
    'ValidityReport',
    'validate',
    'build_rar',
    'ue_self_detect',
    'detect_all',
]


@dataclasses.dataclass(eq=False)
class ValidityReport:
    """
    Per CSI column: whether it is valid, its ``L x tau_p`` correlations with
    the original factor estimates, and (for valid columns) the 1-based pilot
    it matched in each phase.
    """

    valid: List[bool]
    corr: List[np.ndarray]
    flagged: List[Optional[Selection]]

    @property
    def B(self) -> List[int]:
        """Indices of the valid columns."""
        return [i for i, ok in enumerate(self.valid) if ok]

    def as_dict(self) -> dict:
        return {
            'valid': [bool(v) for v in self.valid],
            'flagged': [list(f) if f else None for f in self.flagged],
        }


def validate(csis: CsiSet, fe: FactorEstimates,
             cfg: SystemConfig) -> ValidityReport:
    """
    Test each column ``h`` against the pre-peeling estimates ``fe``: with
    ``c[l, t] = h_t^l . h / M``, the column is valid iff every phase has
    exactly one ``c[l, t]`` inside ``(1 - valid_threshold,
    1 + valid_threshold)``.
    """
    valid, corr, flagged = [], [], []
    for h in csis.columns:
        c = np.einsum('ltm,m->lt', fe.h, h) / fe.m
        hits = np.abs(c - 1.0) < cfg.valid_threshold
        ok = bool(np.all(hits.sum(axis=1) == 1))
        valid.append(ok)
        corr.append(c)
        flagged.append(
            tuple(int(t) + 1 for t in hits.argmax(axis=1)) if ok else None)
    return ValidityReport(valid, corr, flagged)


def build_rar(csis: CsiSet, report: ValidityReport,
              m: Optional[int] = None) -> np.ndarray:
    """
    The broadcast vector ``V``: the sum of the valid columns, or zeros of
    length ``m`` (or the column length) when there are none.
    """
    if csis.columns:
        m = csis.columns[0].shape[0]
    V = np.zeros(m or 0)
    for i in report.B:
        V = V + csis.columns[i]
    return V


def ue_self_detect(V: np.ndarray, g: np.ndarray, beta: float,
                   noise_var: float, M: int, rng: np.random.Generator,
                   threshold: float = 0.5) -> Tuple[bool, float]:
    """
    A UE receives ``R = sqrt(beta) V g + n`` and normalizes it by
    ``sqrt(beta) M``; the statistic tends to 1 when its own channel is part
    of ``V`` and to 0 otherwise. Detected iff it exceeds ``threshold``.
    """
    r = np.sqrt(beta) * float(V @ g) + rng.normal(0.0, np.sqrt(noise_var))
    stat = r / (np.sqrt(beta) * M)
    return bool(stat > threshold), float(stat)


def detect_all(V: np.ndarray, G: np.ndarray, cfg: SystemConfig,
               rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Self-detection for every column of ``G``; flags and statistics."""
    flags = np.zeros(G.shape[1], dtype=bool)
    stats = np.zeros(G.shape[1])
    for k in range(G.shape[1]):
        flags[k], stats[k] = ue_self_detect(V, G[:, k], 1.0, cfg.noise_var,
                                            cfg.m, rng, cfg.detect_threshold)
    return flags, stats

"""
This module provides the successive interference cancellation (peeling)
stage of the receiver: least-squares estimates of every factor node
(pilot ``t`` of phase ``l``), degree estimation by autocorrelation, the
peeling decoder itself, and message detection from recovered CSIs.

Index conventions: arrays are 0-based, while pilot indices reported to users
(``harvest_order``, selections) are 1-based as in the frame model.
"""

import dataclasses
import enum
import logging
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .codec import Codec
from .config import SystemConfig
from .model import PilotBook
from .typing import Bits, Selection

__all__ = [
    'FactorEstimates',
    'CsiSource',
    'CsiSet',
    'PeelTrace',
    'ls_estimates',
    'degree_of',
    'peel',
    'peel_indices',
    'merge_duplicates',
    'detect_symbols',
    'decode_from_csi',
]

logger = logging.getLogger(__name__)


def degree_of(h_vec: np.ndarray, M: int, degree_tol: float,
              noise_var: float = 0.0) -> int:
    """
    Estimated number of UEs superimposed in ``h_vec``: ``h^T h / M`` minus
    the noise bias, rounded to the nearest integer and clamped at 0.

    A node counts as degree 1 only inside the window ``|e - 1| <
    degree_tol``; energies that round to 1 outside the window are pushed to
    the neighbouring degree (0 below, 2 above).
    """
    e = float(h_vec @ h_vec) / M - noise_var
    d = max(int(np.floor(e + 0.5)), 0)
    if d == 1 and abs(e - 1.0) >= degree_tol:
        return 2 if e > 1.0 else 0
    return d


@dataclasses.dataclass(eq=False)
class FactorEstimates:
    """
    Channel-sum estimates ``h[l, t]`` (length ``M``) for every phase ``l``
    and pilot ``t`` with their current estimated degrees.
    """

    h: np.ndarray
    deg: np.ndarray
    noise_var: float = 0.0

    @property
    def l(self) -> int:  # noqa: E743
        return self.h.shape[0]

    @property
    def tau_p(self) -> int:
        return self.h.shape[1]

    @property
    def m(self) -> int:
        return self.h.shape[2]

    def energy(self, l: int, t: int) -> float:  # noqa: E741
        """``h^T h / M`` of node ``(l, t)``, 0-based."""
        v = self.h[l, t]
        return float(v @ v) / self.m

    def copy(self) -> 'FactorEstimates':
        return FactorEstimates(self.h.copy(), self.deg.copy(), self.noise_var)

    def nodes(self):
        """``(l, t)`` pairs in scan order: phases first, then pilots."""
        for l in range(self.l):  # noqa: E741
            for t in range(self.tau_p):
                yield l, t


def ls_estimates(Yp: Sequence[np.ndarray], book: PilotBook,
                 noise_var: float = 0.0,
                 degree_tol: float = 0.3) -> FactorEstimates:
    """
    Despread each phase's received pilot matrix: ``h[l, t] = Yp[l] S_t``,
    which is the sum of the channels of the UEs on pilot ``t`` in phase
    ``l`` plus a noise column.
    """
    h = np.stack([(np.asarray(Y) @ book.S).T for Y in Yp])
    M = h.shape[2]
    deg = np.zeros(h.shape[:2], dtype=np.int64)
    for l in range(h.shape[0]):  # noqa: E741
        for t in range(h.shape[1]):
            deg[l, t] = degree_of(h[l, t], M, degree_tol, noise_var)
    return FactorEstimates(h, deg, noise_var)


class CsiSource(enum.Enum):
    """Receiver stage a CSI column came from."""
    SIC = 'sic'
    CICA = 'cica'


@dataclasses.dataclass(eq=False)
class CsiSet:
    """Recovered CSI columns, each tagged with the stage that produced it."""

    columns: List[np.ndarray] = dataclasses.field(default_factory=list)
    sources: List[CsiSource] = dataclasses.field(default_factory=list)

    def __len__(self) -> int:
        return len(self.columns)

    def __iter__(self):
        return iter(self.columns)

    def count(self, source: CsiSource) -> int:
        return sum(1 for s in self.sources if s is source)

    def matrix(self, m: Optional[int] = None) -> np.ndarray:
        """The columns stacked into an ``M x n`` matrix."""
        if not self.columns:
            return np.zeros((m or 0, 0))
        return np.stack(self.columns, axis=1)

    def __add__(self, other: 'CsiSet') -> 'CsiSet':
        return CsiSet(self.columns + other.columns,
                      self.sources + other.sources)


@dataclasses.dataclass
class PeelTrace:
    """
    Diagnostics of one peeling run: ``iterations`` performed, the 1-based
    ``(phase, pilot)`` of every harvested node in order, how many harvests
    were merged away as duplicates, and the residual factor estimates.
    """

    iterations: int = 0
    harvest_order: List[Tuple[int, int]] = dataclasses.field(
        default_factory=list)
    merged: int = 0
    residual: Optional[FactorEstimates] = dataclasses.field(default=None,
                                                            repr=False)

    def as_dict(self) -> dict:
        return {
            'iterations': self.iterations,
            'harvest_order': [list(p) for p in self.harvest_order],
            'merged': self.merged,
        }


def merge_duplicates(columns: Sequence[np.ndarray],
                     dup_threshold: float) -> List[int]:
    """
    Indices of the columns to keep: a column is dropped when its normalized
    correlation ``|a^T b| / M`` with an earlier kept column exceeds
    ``dup_threshold``.
    """
    kept: List[int] = []
    for i, c in enumerate(columns):
        M = c.shape[0]
        if all(abs(float(c @ columns[j])) / M <= dup_threshold
               for j in kept):
            kept.append(i)
    return kept


def _first_singleton(fe: FactorEstimates) -> Optional[Tuple[int, int]]:
    for l, t in fe.nodes():  # noqa: E741
        if fe.deg[l, t] == 1:
            return l, t
    return None


def peel(fe: FactorEstimates, cfg: SystemConfig) -> Tuple[CsiSet, PeelTrace]:
    """
    Run the peeling decoder on a private copy of ``fe``.

    Each iteration harvests the first degree-1 node as a recovered CSI and
    zeroes it. Every other node is then tested for carrying one copy of the
    harvested vector ``v``. With ``cfg.peel_rule == 'weight'`` the
    least-squares weight ``h^T v / v^T v`` must lie within 0.5 of 1; with
    ``'degree'`` the re-estimated degree of ``h - v`` must be one less than
    the node's current degree. Accepted nodes are updated and their
    degree re-estimated. Peeling stops when no degree-1 node is left or
    after ``cfg.sic_max_iters`` harvests; near-duplicate harvests are then
    merged, keeping the first.
    """
    work = fe.copy()
    tol = cfg.degree_tol
    harvested: List[np.ndarray] = []
    trace = PeelTrace()

    while trace.iterations < cfg.sic_max_iters:
        hit = _first_singleton(work)
        if hit is None:
            break
        trace.iterations += 1
        l, t = hit  # noqa: E741
        v = work.h[l, t].copy()
        work.h[l, t] = 0.0
        work.deg[l, t] = 0
        harvested.append(v)
        trace.harvest_order.append((l + 1, t + 1))

        vv = float(v @ v)
        if vv == 0.0:
            continue
        for l2, t2 in work.nodes():
            if (l2, t2) == (l, t):
                continue
            if cfg.peel_rule == 'degree':
                d = degree_of(work.h[l2, t2] - v, work.m, tol, work.noise_var)
                carries = d == work.deg[l2, t2] - 1
            else:
                carries = abs(float(work.h[l2, t2] @ v) / vv - 1.0) < 0.5
            if carries:
                work.h[l2, t2] -= v
                work.deg[l2, t2] = degree_of(work.h[l2, t2], work.m, tol,
                                             work.noise_var)

    keep = merge_duplicates(harvested, cfg.dup_threshold)
    trace.merged = len(harvested) - len(keep)
    trace.residual = work
    if trace.merged:
        logger.debug('merged %d duplicate sic harvests', trace.merged)
    columns = [harvested[i] for i in keep]
    return CsiSet(columns, [CsiSource.SIC] * len(columns)), trace


def peel_indices(selections: Sequence[Selection],
                 tau_p: int) -> FrozenSet[int]:
    """
    Index-aware peeling on the contention graph given by ``selections``
    (1-based pilot per phase for every UE): the set of 0-based UEs that
    peeling recovers when pilot memberships are known exactly.
    """
    if not selections:
        return frozenset()
    n_phase = len(selections[0])
    members = {}
    for k, sel in enumerate(selections):
        for l, t in enumerate(sel):  # noqa: E741
            members.setdefault((l, t), []).append(k)
    deg = {node: len(ks) for node, ks in members.items()}
    queue = sorted(node for node, d in deg.items() if d == 1)
    recovered = set()
    while queue:
        node = queue.pop()
        if deg[node] != 1:
            continue
        k = next(k for k in members[node] if k not in recovered)
        recovered.add(k)
        for l in range(n_phase):  # noqa: E741
            other = (l, selections[k][l])
            deg[other] -= 1
            if deg[other] == 1:
                queue.append(other)
    return frozenset(recovered)


def detect_symbols(Ym: np.ndarray, h: np.ndarray) -> Optional[np.ndarray]:
    """
    Matched-filter estimate of the message sent through ``h``:
    ``h^T Ym / (h^T h)``. `None` when ``h`` is numerically zero.
    """
    if np.linalg.norm(h) < 1e-9:
        return None
    return (h @ Ym) / float(h @ h)


def decode_from_csi(Ym: np.ndarray, csis: CsiSet,
                    codec: Codec) -> List[Optional[Bits]]:
    """
    Detect and decode one message per CSI column: the reference symbol is
    dropped before decoding. Degenerate columns yield `None`.
    """
    out: List[Optional[Bits]] = []
    for h in csis.columns:
        x = detect_symbols(Ym, h)
        out.append(None if x is None else codec.decode(x[1:]))
    return out

"""
This module provides the clustering ICA stage that recovers the UEs left
over by peeling: active-count estimation, the residual message matrix, a
bank of FastICA classifiers over random antenna subsets, reference-symbol
phase repair, Hamming clustering with majority voting, and CSI
re-estimation from the voted messages.
"""

import dataclasses
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .codec import Codec, build_message
from .config import SystemConfig
from .exceptions import UsageError, WhiteningFailed
from .sic import CsiSet, CsiSource, FactorEstimates
from .typing import Bits

__all__ = [
    'IcaRun',
    'ClusterSet',
    'CicaOutcome',
    'estimate_active_count',
    'remaining_count',
    'message_basis',
    'residual',
    'whiten',
    'fastica',
    'ica_bank',
    'fix_phase',
    'cluster_and_vote',
    'csi_from_message',
    'run_cica',
]

logger = logging.getLogger(__name__)


def estimate_active_count(fe: FactorEstimates,
                          phase: Optional[int] = None,
                          noise_var: Optional[float] = None) -> int:
    """
    Number of active UEs from the energy of one phase's estimates,
    ``sum_t h_t^T h_t / M - tau_p * noise_var``, rounded and clamped at 0.

    ``phase`` is 1-based; `None` (or 0) averages the energy over all
    phases, each of which sees every UE exactly once.
    """
    noise_var = fe.noise_var if noise_var is None else noise_var
    phases = range(fe.l) if not phase else [phase - 1]
    totals = [
        sum(fe.energy(l, t) for t in range(fe.tau_p)) - fe.tau_p * noise_var
        for l in phases  # noqa: E741
    ]
    return max(int(np.floor(np.mean(totals) + 0.5)), 0)


def remaining_count(na_hat: int, n_sic: int) -> int:
    """UEs still to be found after peeling, ``max(na_hat - n_sic, 0)``."""
    return max(na_hat - n_sic, 0)


def message_basis(decoded: Sequence[Optional[Bits]],
                  codec: Codec) -> Optional[np.ndarray]:
    """
    The rebuilt messages of the decoded UEs, one row each, or `None` when
    nothing was decoded.
    """
    rows = [build_message(bits, codec) for bits in decoded if bits is not None]
    return np.stack(rows) if rows else None


def _project_out(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # rows of x minus their least-squares fit on the rows of basis
    coef = linalg.lstsq(basis.T, np.atleast_2d(x).T)[0]
    return x - (basis.T @ coef).T.reshape(x.shape)


def residual(Ym: np.ndarray, sic_csis: CsiSet,
             sic_decoded: Sequence[Optional[Bits]],
             codec: Codec,
             refit: bool = False) -> np.ndarray:
    """
    Cancel the peeled UEs from the message matrix: every decoded message is
    re-encoded with its reference symbol and ``h v^T`` is subtracted.
    Columns that failed detection are left in place.

    With ``refit`` the channels of the decoded UEs are re-estimated jointly
    from ``Ym`` by least squares on their messages instead of being taken
    from ``sic_csis``. The subtraction then removes those UEs exactly and
    amounts to projecting the rows of ``Ym`` off the decoded messages.
    """
    out = np.array(Ym, dtype=np.float64, copy=True)
    if refit:
        basis = message_basis(sic_decoded, codec)
        return out if basis is None else _project_out(out, basis)
    for h, bits in zip(sic_csis.columns, sic_decoded):
        if bits is None:
            continue
        out -= np.outer(h, build_message(bits, codec))
    return out


def whiten(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Center the rows of ``x`` and whiten them with the inverse square root of
    their sample covariance. Returns the white rows and the whitening
    matrix. Raises `WhiteningFailed` when the covariance is rank deficient.
    """
    xc = x - x.mean(axis=1, keepdims=True)
    cov = xc @ xc.T / xc.shape[1]
    s, u = linalg.eigh(cov)
    if s[-1] <= 0 or s[0] < 1e-10 * s[-1]:
        raise WhiteningFailed(s)
    K = (u / np.sqrt(s)) @ u.T
    return K @ xc, K


def _sym_decorrelation(W: np.ndarray) -> np.ndarray:
    # W <- (W W^T)^{-1/2} W
    s, u = linalg.eigh(W @ W.T)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ W


def _cube(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return x**3, (3 * x**2).mean(axis=-1)


def fastica(xw: np.ndarray, rng: np.random.Generator,
            max_iter: int = 200,
            tol: float = 1e-6) -> Tuple[np.ndarray, int, bool]:
    """
    Symmetric fixed-point ICA with the cubic nonlinearity on white rows
    ``xw``. Returns the orthogonal unmixing matrix, the iterations used and
    whether the direction change fell below ``tol``.
    """
    n, p = xw.shape
    W = _sym_decorrelation(rng.standard_normal((n, n)))
    for it in range(1, max_iter + 1):
        gwx, g_wx = _cube(W @ xw)
        W1 = _sym_decorrelation(gwx @ xw.T / p - g_wx[:, np.newaxis] * W)
        lim = np.max(np.abs(np.abs(np.diag(W1 @ W.T)) - 1))
        W = W1
        if lim < tol:
            return W, it, True
    return W, max_iter, False


@dataclasses.dataclass(eq=False)
class IcaRun:
    """
    One ICA classifier: the antenna ``rows`` it read, its separated
    ``outputs`` (one unit-variance row per source, `None` if whitening
    failed), iterations used and convergence.
    """

    rows: np.ndarray
    outputs: Optional[np.ndarray]
    iterations: int
    converged: bool


def ica_bank(Ym_res: np.ndarray, n_r: int, n_i: int,
             rng: np.random.Generator,
             max_iter: int = 200,
             tol: float = 1e-6) -> List[IcaRun]:
    """
    Run ``n_i`` independent ICA classifiers, each on ``n_r`` distinct rows
    of the residual message matrix drawn uniformly without replacement.
    """
    M = Ym_res.shape[0]
    if n_r < 1:
        raise UsageError(f'ica_bank needs n_r >= 1, got {n_r}')
    if n_r > M:
        raise UsageError(f'n_r={n_r} exceeds the {M} available rows')
    runs = []
    for _ in range(n_i):
        rows = np.sort(rng.choice(M, size=n_r, replace=False))
        try:
            xw, _ = whiten(Ym_res[rows])
        except WhiteningFailed as e:
            logger.debug('ica run skipped: %s', e)
            runs.append(IcaRun(rows, None, 0, False))
            continue
        W, it, converged = fastica(xw, rng, max_iter, tol)
        runs.append(IcaRun(rows, W @ xw, it, converged))
    return runs


def fix_phase(f: np.ndarray) -> np.ndarray:
    """
    Resolve the sign ambiguity of a separated sequence with its reference
    symbol: ``f`` is multiplied by the sign of ``f[0]`` (0 counts as +1) and
    the reference symbol itself becomes exactly +1.
    """
    out = np.array(f, dtype=np.float64) if f[0] >= 0 else -np.asarray(
        f, dtype=np.float64)
    out[0] = 1.0
    return out


@dataclasses.dataclass(eq=False)
class ClusterSet:
    """
    Decoded ICA outputs grouped by the source they are closest to:
    ``seeds`` are the first converged run's outputs, ``classes[j]`` the
    members of class ``j`` and ``acc[j]`` their summed ``±1`` bits.
    """

    seeds: List[Bits]
    classes: List[List[Bits]]
    acc: np.ndarray

    @property
    def sizes(self) -> List[int]:
        return [len(c) for c in self.classes]


def _decode_outputs(run: IcaRun, codec: Codec) -> List[Bits]:
    return [codec.decode(fix_phase(f)[1:]) for f in run.outputs]


def cluster_and_vote(runs: Sequence[IcaRun], n_r: int,
                     codec: Codec) -> Tuple[List[Bits], ClusterSet]:
    """
    Decode every converged run's outputs, assign each to the class whose
    seed is nearest in Hamming distance (ties to the lowest class) and
    majority-vote each class. A zero vote keeps the seed's bit. Without any
    converged run the result is empty.
    """
    decoded = [_decode_outputs(r, codec) for r in runs
               if r.converged and r.outputs is not None]
    if not decoded:
        return [], ClusterSet([], [], np.zeros((0, 0)))
    seeds = decoded[0][:n_r]
    classes: List[List[Bits]] = [[] for _ in seeds]
    acc = np.zeros((len(seeds), seeds[0].size))
    for outs in decoded:
        for bits in outs:
            dist = [np.count_nonzero(bits != s) for s in seeds]
            j = int(np.argmin(dist))
            classes[j].append(bits)
            acc[j] += 2.0 * bits - 1.0
    votes = []
    for j, seed in enumerate(seeds):
        v = np.where(acc[j] > 0, 1, np.where(acc[j] < 0, 0, seed))
        votes.append(v.astype(np.uint8))
    return votes, ClusterSet(list(seeds), classes, acc)


def csi_from_message(Ym_res: np.ndarray, bits: Bits, codec: Codec,
                     basis: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Channel estimate of the UE that sent ``bits``: the message is rebuilt
    with its reference symbol and correlated with the residual,
    ``Ym' v / (v^T v)``. When the residual was formed by projecting off
    the messages in ``basis``, ``v`` is projected the same way first.
    """
    v = build_message(bits, codec)
    if basis is not None:
        v = _project_out(v, basis)
    return Ym_res @ v / float(v @ v)


@dataclasses.dataclass(eq=False)
class CicaOutcome:
    """Everything the clustering ICA stage produced for one slot."""

    messages: List[Bits]
    csis: CsiSet
    runs: List[IcaRun]
    clusters: Optional[ClusterSet]
    n_r: int

    @property
    def converged_runs(self) -> int:
        return sum(1 for r in self.runs if r.converged)


def run_cica(Ym_res: np.ndarray, n_r: int, cfg: SystemConfig, codec: Codec,
             rng: np.random.Generator,
             basis: Optional[np.ndarray] = None) -> CicaOutcome:
    """
    The full clustering ICA stage on the residual message matrix for an
    estimated ``n_r`` remaining UEs. ``n_r`` is capped at the number of
    rows, and at ``N_m - 1`` since centered data has no higher rank.
    ``basis`` holds the messages a refitted residual was projected off.
    """
    M, n_m = Ym_res.shape
    n_r = min(n_r, M, n_m - 1)
    if n_r < 1:
        return CicaOutcome([], CsiSet(), [], None, 0)
    runs = ica_bank(Ym_res, n_r, cfg.n_i, rng, cfg.ica_max_iter, cfg.ica_tol)
    messages, clusters = cluster_and_vote(runs, n_r, codec)
    if not messages:
        logger.debug('no ica run converged (n_r=%d)', n_r)
    csis = CsiSet([csi_from_message(Ym_res, b, codec, basis)
                   for b in messages],
                  [CsiSource.CICA] * len(messages))
    return CicaOutcome(messages, csis, runs, clusters, n_r)

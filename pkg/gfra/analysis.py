"""
This module provides the analytical side of the scheme: degree
distributions of the contention graph, and-or tree density evolution of
peeling, the lower bound on the bit error rate of an ICA output, and the
resulting bounds on access probability, missed detection and throughput.

Polynomials are dense coefficient arrays indexed by degree; the
edge-perspective ones are evaluated as ``sum_d c[d] x^(d-1)``.
"""

import dataclasses
import math
from typing import Iterable, List, Optional

import numpy as np
from scipy import integrate, special, stats

from .config import SystemConfig
from .exceptions import UsageError

__all__ = [
    'DegreeDistributions',
    'EvolutionResult',
    'degree_distributions',
    'evolve',
    'ber_lower_bound',
    'ber_lower_bound_closed',
    'uplink_throughput',
    'bounds',
    'analyze',
    'analysis_table',
]


def _edge_view(node: np.ndarray) -> np.ndarray:
    d = np.arange(node.size)
    w = node * d
    return w / w.sum()


@dataclasses.dataclass(frozen=True, eq=False)
class DegreeDistributions:
    """
    Node-perspective degree distributions ``Lambda`` (UEs, a point mass at
    ``L``) and ``Psi`` (pilots, binomial), with their edge-perspective
    counterparts ``lam`` and ``rho``.
    """

    na: int
    tau_p: int
    l: int  # noqa: E741
    Lambda: np.ndarray
    Psi: np.ndarray
    lam: np.ndarray
    rho: np.ndarray

    @staticmethod
    def _edge_eval(c: np.ndarray, x: float) -> float:
        # sum_d c[d] x^(d-1); c[0] is always 0
        return float(np.polynomial.polynomial.polyval(x, c[1:]))

    def lam_at(self, x: float) -> float:
        return self._edge_eval(self.lam, x)

    def rho_at(self, x: float) -> float:
        return self._edge_eval(self.rho, x)

    def Lambda_at(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self.Lambda))


def degree_distributions(na: int, tau_p: int,
                         l: int) -> DegreeDistributions:  # noqa: E741
    """
    Every UE picks one of ``tau_p`` pilots per phase, so a pilot's degree is
    ``Binomial(na, 1 / tau_p)`` and every UE has degree ``l``.
    """
    if na < 1 or tau_p < 1 or l < 1:
        raise UsageError(f'degree distributions need na, tau_p, l >= 1, '
                         f'got {na}, {tau_p}, {l}')
    Lambda = np.zeros(l + 1)
    Lambda[l] = 1.0
    Psi = stats.binom.pmf(np.arange(na + 1), na, 1.0 / tau_p)
    return DegreeDistributions(na, tau_p, l, Lambda, Psi,
                               _edge_view(Lambda), _edge_view(Psi))


@dataclasses.dataclass
class EvolutionResult:
    """
    Density-evolution trajectory and the bounds derived from it.

    ``m[i]`` is the probability that a UE-to-pilot edge is still unknown
    after iteration ``i`` (``m[0] = 1``), ``n[i]`` the same for
    pilot-to-UE edges (``n[0] = 1``). The remaining fields are filled by
    `bounds`.
    """

    m: List[float]
    n: List[float]
    p_fail: float
    s_sic: float = math.nan
    p_e: float = math.nan
    p_cica_u: float = math.nan
    s_cica_u: float = math.nan
    p_s_u: float = math.nan
    p_md_l: float = math.nan
    gamma_u: float = math.nan

    @property
    def iterations(self) -> int:
        return len(self.m) - 1

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop('m')
        d.pop('n')
        d['iterations'] = self.iterations
        return d


def evolve(dd: DegreeDistributions, iters: int) -> EvolutionResult:
    """
    Iterate ``n_i = 1 - rho(1 - m_{i-1})`` and ``m_i = lam(n_i)`` from
    ``m_0 = 1`` for at most ``iters`` steps, stopping once ``m`` moves by
    less than 1e-12. A UE stays unrecovered with probability
    ``Lambda(n_I) = n_I ** L``.
    """
    m, n = [1.0], [1.0]
    for _ in range(iters):
        n_i = 1.0 - dd.rho_at(1.0 - m[-1])
        m_i = dd.lam_at(n_i)
        # clip float noise so the trajectory stays in [0, 1]
        n.append(min(max(n_i, 0.0), 1.0))
        m.append(min(max(m_i, 0.0), 1.0))
        if abs(m[-1] - m[-2]) < 1e-12:
            break
    return EvolutionResult(m, n, dd.Lambda_at(n[-1]))


def ber_lower_bound_closed(M: int) -> float:
    """
    Closed form of `ber_lower_bound`: with ``Y ~ chi2(M)`` and a standard
    normal ``N`` the bound is ``P(N > sqrt(2Y)) = P(F(1, M) > 2M) / 2``.
    """
    if M < 1:
        raise UsageError(f'M must be >= 1, got {M}')
    return 0.5 * float(stats.f.sf(2.0 * M, 1, M))


def ber_lower_bound(M: int, tol: float = 1e-10) -> float:
    """
    Lower bound on the bit error rate of a separated BPSK stream seen
    through ``M`` antennas: ``E[erfc(sqrt(Y)) / 2]`` for ``Y ~ chi2(M)``,
    the double integral with its inner Gaussian tail in closed form.

    The outer integral runs over ``[0, y_max]`` with a chi-square tail of
    1e-14 beyond ``y_max``. The integrand is scaled by its value at the peak
    ``(M - 3) / 3`` so that tiny bounds keep their relative accuracy.
    """
    if M < 1:
        raise UsageError(f'M must be >= 1, got {M}')
    y_max = float(stats.chi2.isf(1e-14, M))

    def log_f(y):
        return stats.chi2.logpdf(y, M) + special.log_ndtr(-np.sqrt(2.0 * y))

    y_peak = (M - 3) / 3.0
    scale = float(log_f(y_peak)) if y_peak > 0 else 0.0
    points = [y_peak] if 0 < y_peak < y_max else None

    value, _ = integrate.quad(lambda y: math.exp(log_f(y) - scale), 0.0,
                              y_max, epsabs=tol, epsrel=1e-10, limit=200,
                              points=points)
    return value * math.exp(scale)


def uplink_throughput(successes: float, cfg: SystemConfig) -> float:
    """
    Payload bits delivered per slot symbol:
    ``successes * N_PD * R / (N_PD + tau_p * L + 1)``.
    """
    return successes * cfg.n_pd * float(cfg.code_rate) / (cfg.n_pd +
                                                          cfg.overhead)


def bounds(cfg: SystemConfig, p_fail: float, p_e: float,
           result: Optional[EvolutionResult] = None) -> EvolutionResult:
    """
    Fill the tail of an `EvolutionResult` from the peeling failure
    probability and the BER bound: UEs recovered by peeling, the
    probability that an ICA-recovered message is error free, and the upper
    bounds on access probability and throughput.
    """
    r = result or EvolutionResult([], [], p_fail)
    r.p_fail = p_fail
    r.p_e = p_e
    r.s_sic = cfg.na * (1.0 - p_fail)
    r.p_cica_u = (1.0 - p_e)**cfg.n_m
    r.s_cica_u = r.p_cica_u * (cfg.na - r.s_sic)
    r.p_s_u = (r.s_sic + r.s_cica_u) / cfg.na
    r.p_md_l = 1.0 - r.p_s_u
    r.gamma_u = uplink_throughput(cfg.na * r.p_s_u, cfg)
    return r


def analyze(cfg: SystemConfig) -> EvolutionResult:
    """Density evolution followed by every bound, for one configuration."""
    dd = degree_distributions(cfg.na, cfg.tau_p, cfg.l)
    evo = evolve(dd, cfg.de_iters)
    return bounds(cfg, evo.p_fail, ber_lower_bound(cfg.m), evo)


def analysis_table(configs: Iterable[SystemConfig]) -> List[dict]:
    """One row per configuration with its analytical predictions."""
    rows = []
    for cfg in configs:
        r = analyze(cfg)
        rows.append({
            'na': cfg.na,
            'tau_p': cfg.tau_p,
            'l': cfg.l,
            'm': cfg.m,
            'p_fail': r.p_fail,
            'p_s_u': r.p_s_u,
            'p_md_l': r.p_md_l,
            'gamma_u': r.gamma_u,
        })
    return rows

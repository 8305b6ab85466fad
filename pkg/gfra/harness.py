"""
This module provides the Monte Carlo harness: one end-to-end trial of the
receiver, aggregation of trials into result rows, the sweep driver and the
``results.csv`` / ``summary.json`` writers.

A UE counts as a success when a valid CSI column is matched to it and the
payload decoded for that column equals the one it sent. Columns are matched
to UEs greedily by normalized correlation, one to one, and only above
``dup_threshold``.
"""

import asyncio
import csv
import dataclasses
import json
import logging
import math
import os
import subprocess
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import (Any, Awaitable, Callable, Dict, List, Optional, Sequence,
                    Tuple)

import numpy as np

from .analysis import EvolutionResult, analyze, uplink_throughput
from .baselines import run_baseline
from .cica import (estimate_active_count, message_basis, remaining_count,
                   residual, run_cica)
from .codec import Codec, get_codec
from .config import GRID_KEYS, SweepSpec, SystemConfig
from .detection import build_rar, detect_all, validate
from .event import Event
from .exceptions import OutputError
from .model import (PilotBook, build_frames, draw_channels, synthesize)
from .sic import CsiSource, decode_from_csi, ls_estimates, peel
from .typing import Selection
from .utils import fmt_num, run_in_pool, trial_rng

__all__ = [
    'SCHEME',
    'RESULT_COLUMNS',
    'OVERLAY_COLUMNS',
    'TrialMetrics',
    'match_columns',
    'run_trial',
    'trial_task',
    'aggregate',
    'sweep_async',
    'run_sweep',
    'check_writable',
    'write_results',
    'version_string',
]

logger = logging.getLogger(__name__)

SCHEME = 'gcica-ra'
"""Scheme label of the receiver's own rows."""

MSE_POPULATION = 'successful UEs'

RESULT_COLUMNS = GRID_KEYS + ('scheme', 'p_s', 'p_md', 'mse', 'throughput',
                              's_sic', 's_cica', 'trials', 'stderr_p_s')
OVERLAY_COLUMNS = ('p_s_u', 'p_md_l', 'gamma_u')

Emitter = Callable[..., Awaitable[Any]]


@dataclasses.dataclass
class TrialMetrics:
    """
    Outcome of one trial. ``sq_err`` is the sum of ``|h_hat - g|^2 / M`` over
    the successful UEs and ``mse`` its mean (NaN without successes).
    ``baselines`` maps each comparison scheme to its successes in the same
    slot; ``record`` holds the per-trial diagnostics.
    """

    na: int
    s_sic: int
    s_cica: int
    sq_err: float
    throughput: float
    runtime: float = 0.0
    baselines: Dict[str, int] = dataclasses.field(default_factory=dict)
    record: Dict[str, Any] = dataclasses.field(default_factory=dict)

    @property
    def successes(self) -> int:
        return self.s_sic + self.s_cica

    @property
    def p_s(self) -> float:
        return self.successes / self.na

    @property
    def p_md(self) -> float:
        return 1.0 - self.p_s

    @property
    def mse(self) -> float:
        return self.sq_err / self.successes if self.successes else math.nan


def match_columns(columns: Sequence[np.ndarray], G: np.ndarray,
                  threshold: float,
                  candidates: Optional[Sequence[int]] = None
                  ) -> Dict[int, int]:
    """
    Greedy one-to-one matching of CSI columns to the UEs (columns of ``G``)
    by normalized correlation ``|h . g| / (|h| |g|)``, highest first,
    keeping pairs above ``threshold``. Returns ``{column: ue}``.
    """
    idx = list(range(len(columns))) if candidates is None else list(
        candidates)
    pairs = []
    g_norm = np.linalg.norm(G, axis=0)
    for i in idx:
        h = columns[i]
        hn = np.linalg.norm(h)
        if hn < 1e-9:
            continue
        corr = np.abs(h @ G) / (hn * g_norm)
        for k in np.flatnonzero(corr > threshold):
            pairs.append((-float(corr[k]), i, int(k)))
    pairs.sort()
    used_cols, used_ues, out = set(), set(), {}
    for _, i, k in pairs:
        if i in used_cols or k in used_ues:
            continue
        used_cols.add(i)
        used_ues.add(k)
        out[i] = k
    return out


def run_trial(cfg: SystemConfig,
              rng: np.random.Generator,
              *,
              selections: Optional[Sequence[Selection]] = None,
              baselines: Sequence[str] = (),
              codec: Optional[Codec] = None) -> TrialMetrics:
    """
    One slot end to end: frames, channels and received signals, then
    peeling, SIC decoding, active-count estimation, the residual, clustering
    ICA, validation, UE matching and self-detection. ``selections`` forces
    the sub-pilot choices; ``baselines`` are evaluated on the same frames.
    """
    start = time.perf_counter()
    codec = codec or get_codec(cfg)
    book = PilotBook.for_config(cfg)
    frames = build_frames(cfg, rng, codec, selections)
    chan = draw_channels(cfg, rng)
    block = synthesize(cfg, frames, chan, rng, book)

    fe = ls_estimates(block.Yp, book, block.noise_var, cfg.degree_tol)
    sic_csis, trace = peel(fe, cfg)
    sic_bits = decode_from_csi(block.Ym, sic_csis, codec)
    na_hat = estimate_active_count(fe, cfg.count_phase, block.noise_var)
    n_r = remaining_count(na_hat, len(sic_csis))
    refit = cfg.residual_refit
    ym_res = residual(block.Ym, sic_csis, sic_bits, codec, refit)
    basis = message_basis(sic_bits, codec) if refit else None
    cica = run_cica(ym_res, n_r, cfg, codec, rng, basis)

    csis = sic_csis + cica.csis
    payloads = list(sic_bits) + list(cica.messages)
    report = validate(csis, fe, cfg)
    G = chan.G

    matched = match_columns(csis.columns, G, cfg.dup_threshold, report.B)
    s_sic = s_cica = 0
    sq_err = 0.0
    for i, k in matched.items():
        bits = payloads[i]
        if bits is None or not np.array_equal(bits, frames[k].info_bits):
            continue
        if csis.sources[i] is CsiSource.SIC:
            s_sic += 1
        else:
            s_cica += 1
        diff = csis.columns[i] - G[:, k]
        sq_err += float(diff @ diff) / cfg.m

    any_match = match_columns(csis.columns, G, cfg.dup_threshold)
    valid = set(report.B)
    false_valid = sum(1 for i in valid if i not in any_match)
    missed_valid = sum(1 for i in any_match if i not in valid)

    in_b = np.zeros(cfg.na, dtype=bool)
    in_b[list(matched.values())] = True
    V = build_rar(csis, report, cfg.m)
    flags, _ = detect_all(V, G, cfg, rng)

    outcomes = {name: run_baseline(name, cfg, frames, rng).successes
                for name in baselines}

    record = {
        'peel': trace.as_dict(),
        'n_i': cfg.n_i,
        'converged_runs': cica.converged_runs,
        'na_hat': na_hat,
        'n_r': n_r,
        'b_size': len(valid),
        'validity': report.as_dict()['valid'],
        'sources': [s.value for s in csis.sources],
        'false_valid': false_valid,
        'missed_valid': missed_valid,
        'self_detect_mismatch': int(np.count_nonzero(flags != in_b)),
        's_sic': s_sic,
        's_cica': s_cica,
    }
    if cica.clusters is not None:
        record['cluster_sizes'] = cica.clusters.sizes
    return TrialMetrics(na=cfg.na,
                        s_sic=s_sic,
                        s_cica=s_cica,
                        sq_err=sq_err,
                        throughput=uplink_throughput(s_sic + s_cica, cfg),
                        runtime=time.perf_counter() - start,
                        baselines=outcomes,
                        record=record)


def trial_task(cfg: SystemConfig, index: int,
               baselines: Sequence[str] = ()) -> TrialMetrics:
    """Trial ``index`` of a grid point on its own random stream."""
    return run_trial(cfg, trial_rng(cfg.seed, index), baselines=baselines)


def _mean_stderr(x: np.ndarray) -> Tuple[float, float]:
    if x.size > 1:
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
    return float(x.mean()), 0.0


def _base_row(cfg: SystemConfig) -> Dict[str, Any]:
    return {k: getattr(cfg, k) for k in GRID_KEYS}


def aggregate(cfg: SystemConfig,
              trials: Sequence[TrialMetrics],
              baselines: Sequence[str] = (),
              overlay: Optional[EvolutionResult] = None) -> List[dict]:
    """
    Reduce the trials of one grid point, in trial order, into one row for
    the scheme and one per baseline. MSE is pooled over every successful UE
    of the point. ``overlay`` adds the analytical bounds to every row.
    """
    n = len(trials)
    s_sic, se_sic = _mean_stderr(np.array([t.s_sic for t in trials], float))
    s_cica, se_cica = _mean_stderr(
        np.array([t.s_cica for t in trials], float))
    _, se_ps = _mean_stderr(np.array([t.p_s for t in trials]))
    total = sum(t.successes for t in trials)
    succ = s_sic + s_cica
    p_s = succ / cfg.na
    row = dict(_base_row(cfg),
               scheme=SCHEME,
               p_s=p_s,
               p_md=1.0 - p_s,
               mse=sum(t.sq_err for t in trials) / total if total else
               math.nan,
               throughput=uplink_throughput(succ, cfg),
               s_sic=s_sic,
               s_cica=s_cica,
               trials=n,
               stderr_p_s=se_ps)
    row['stderr'] = {
        'p_s': se_ps,
        'p_md': se_ps,
        's_sic': se_sic,
        's_cica': se_cica,
        'throughput': uplink_throughput(se_ps * cfg.na, cfg),
    }
    rows = [row]

    for name in baselines:
        succ, se_succ = _mean_stderr(
            np.array([t.baselines[name] for t in trials], float))
        p_s = succ / cfg.na
        rows.append(dict(_base_row(cfg),
                         scheme=name,
                         p_s=p_s,
                         p_md=1.0 - p_s,
                         mse=math.nan,
                         throughput=uplink_throughput(succ, cfg),
                         s_sic=math.nan,
                         s_cica=math.nan,
                         trials=n,
                         stderr_p_s=se_succ / cfg.na,
                         stderr={'p_s': se_succ / cfg.na}))

    if overlay is not None:
        for r in rows:
            r.update(p_s_u=overlay.p_s_u,
                     p_md_l=overlay.p_md_l,
                     gamma_u=overlay.gamma_u)
    return rows


def check_writable(out: str) -> None:
    """Create ``out`` if needed; raise `OutputError` if it is not writable."""
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as e:
        raise OutputError(f'cannot create output directory {out}: {e}') \
            from e
    if not os.path.isdir(out) or not os.access(out, os.W_OK):
        raise OutputError(f'output directory {out} is not writable')


def version_string() -> str:
    """``git describe`` of the source tree, or the package version."""
    from . import __version__
    try:
        proc = subprocess.run(
            ['git', 'describe', '--tags', '--always', '--dirty'],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            capture_output=True, text=True, timeout=10)
        if proc.returncode == 0 and proc.stdout.strip():
            return proc.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f'v{__version__}'


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.integer, )):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_results(out: str, rows: Sequence[dict], spec: SweepSpec) -> None:
    """Write ``results.csv`` and ``summary.json`` into directory ``out``."""
    header = list(RESULT_COLUMNS)
    if spec.analysis:
        header += OVERLAY_COLUMNS
    try:
        with open(os.path.join(out, 'results.csv'), 'w', newline='',
                  encoding='utf-8') as f:
            w = csv.writer(f, lineterminator='\n')
            w.writerow(header)
            for r in rows:
                w.writerow([fmt_num(r[k]) for k in header])
        summary = {
            'version': version_string(),
            'scheme': SCHEME,
            'mse_population': MSE_POPULATION,
            'baseline_note': 'multipreamble_approx assumes every UE with '
                             'a unique super pilot is decoded',
            'sweep': spec.as_dict(),
            'rows': rows,
        }
        with open(os.path.join(out, 'summary.json'), 'w',
                  encoding='utf-8') as f:
            json.dump(_plain(summary), f, indent=2, sort_keys=True,
                      allow_nan=False)
            f.write('\n')
    except OSError as e:
        raise OutputError(f'writing results to {out}: {e}') from e


async def sweep_async(spec: SweepSpec,
                      *,
                      workers: int = 1,
                      emit: Optional[Emitter] = None,
                      executor: Optional[Executor] = None) -> List[dict]:
    """
    Run every grid point of ``spec`` and return the result rows; write them
    when ``spec.out`` is set. Trials run concurrently in ``executor`` (a
    process pool of ``workers`` when not given and ``workers > 1``) and are
    reduced in trial order, so the rows do not depend on parallelism.

    ``emit(name, event)`` is awaited for ``point.start``, ``trial.done``,
    ``point.done`` and ``sweep.done``.
    """
    if spec.out:
        check_writable(spec.out)
    configs = list(spec.points())
    for cfg in configs:
        get_codec(cfg)

    async def _emit(name: str, **fields):
        if emit is not None:
            await emit(name, Event(name=name, **fields))

    own_pool = executor is None and workers > 1
    if own_pool:
        executor = ProcessPoolExecutor(max_workers=workers)
    rows: List[dict] = []
    started = time.perf_counter()
    try:
        for p, cfg in enumerate(configs):
            await _emit('point.start', point=p, config=cfg.as_dict())
            trials = await asyncio.gather(*(
                run_in_pool(executor, trial_task, cfg, i, spec.baselines)
                for i in range(spec.trials)))
            for i, t in enumerate(trials):
                await _emit('trial.done', point=p, trial=i,
                            record=_plain(t.record), runtime=t.runtime)
            overlay = analyze(cfg) if spec.analysis else None
            point_rows = aggregate(cfg, trials, spec.baselines, overlay)
            rows += point_rows
            logger.info('sweep point %d/%d done', p + 1, len(configs))
            await _emit('point.done', point=p, config=cfg.as_dict(),
                        rows=point_rows)
        await _emit('sweep.done', rows=rows)
    finally:
        if own_pool:
            executor.shutdown()
    logger.info('sweep finished in %.1f s', time.perf_counter() - started)

    if spec.out:
        write_results(spec.out, rows, spec)
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1) -> List[dict]:
    """Blocking `sweep_async`."""
    return asyncio.run(sweep_async(spec, workers=workers))

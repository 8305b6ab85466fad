import csv
import json
import math

import numpy as np
import pytest

from gfra import OutputError, SweepSpec, SystemConfig, run_sweep
from gfra.analysis import analyze, uplink_throughput
from gfra.harness import (OVERLAY_COLUMNS, RESULT_COLUMNS, SCHEME,
                          TrialMetrics, aggregate, check_writable,
                          match_columns, run_trial, trial_task,
                          version_string)

from conftest import noise_free


def test_match_columns(rng):
    G = rng.standard_normal((100, 4))
    columns = [G[:, 2], 3 * G[:, 0], G[:, 0] + 0.1 * G[:, 1],
               rng.standard_normal(100), np.zeros(100)]
    assert match_columns(columns, G, 0.5) == {0: 2, 1: 0}
    assert match_columns(columns, G, 0.5, candidates=[2, 3]) == {2: 0}
    assert match_columns([], G, 0.5) == {}


def test_trial_metrics_algebra():
    t = TrialMetrics(na=10, s_sic=4, s_cica=2, sq_err=0.3, throughput=1.0)
    assert t.successes == 6
    assert t.p_s == pytest.approx(0.6)
    assert t.p_md == pytest.approx(0.4)
    assert t.mse == pytest.approx(0.05)
    assert math.isnan(TrialMetrics(10, 0, 0, 0.0, 0.0).mse)


@pytest.mark.parametrize('seed', range(5))
def test_example_graph_end_to_end(example_selections, seed):
    rng = np.random.default_rng(seed)
    t = run_trial(noise_free(m=2000), rng, selections=example_selections,
                  baselines=['multipreamble_approx'])
    assert t.s_sic == 3
    assert t.record['peel']['harvest_order'] == [[1, 2], [2, 1], [1, 1]]
    assert t.record['na_hat'] == 5
    assert t.record['n_r'] == 2
    assert t.baselines == {'multipreamble_approx': 3}
    assert t.s_cica in (0, 1, 2)


def test_example_graph_ica_recovers_both(example_selections):
    cfg = noise_free(m=2000)
    wins = 0
    for seed in range(5):
        t = run_trial(cfg, np.random.default_rng(100 + seed),
                      selections=example_selections)
        if t.s_cica == 2:
            wins += 1
            assert t.successes == 5
            assert t.record['b_size'] == 5
            assert t.record['self_detect_mismatch'] == 0
            assert t.mse < 0.05
    assert wins >= 4


def test_example_graph_at_m400(example_selections):
    # both peeled and ica UEs in at least 17 of 20 slots; the misses come
    # from na_hat rounding to 4 and from columns outside the validity window
    cfg = noise_free(m=400, n_i=10)
    full = 0
    for seed in range(20):
        t = run_trial(cfg, np.random.default_rng(seed),
                      selections=example_selections)
        assert t.s_sic <= 3 and t.successes <= 5
        full += (t.s_sic, t.s_cica) == (3, 2)
    assert full >= 17


def test_single_ue_is_always_recovered():
    cfg = noise_free(na=1)
    t = run_trial(cfg, np.random.default_rng(21))
    assert t.p_s == 1.0 and t.s_sic == 1
    assert t.mse < 1e-12
    assert t.record['na_hat'] == 1 and t.record['n_r'] == 0


def test_deep_noise_recovers_almost_nothing():
    cfg = noise_free(snr_db=-20.0, n_i=5)
    t = run_trial(cfg, np.random.default_rng(22))
    assert t.p_s <= 0.4


def test_one_trial_sweep_matches_the_trial(small_cfg):
    rows = run_sweep(SweepSpec.single(small_cfg, 1))
    t = trial_task(small_cfg, 0)
    assert len(rows) == 1
    assert rows[0]['p_s'] == pytest.approx(t.p_s)
    assert rows[0]['s_sic'] == t.s_sic and rows[0]['s_cica'] == t.s_cica


def test_trial_is_deterministic(small_cfg):
    a = trial_task(small_cfg, 4, ['traditional'])
    b = trial_task(small_cfg, 4, ['traditional'])
    assert (a.s_sic, a.s_cica, a.sq_err) == (b.s_sic, b.s_cica, b.sq_err)
    assert a.baselines == b.baselines
    assert a.record == b.record


def test_trial_record_keys(small_cfg):
    t = trial_task(small_cfg, 0)
    for key in ('peel', 'n_i', 'converged_runs', 'na_hat', 'n_r', 'b_size',
                'validity', 'sources', 'false_valid', 'missed_valid',
                'self_detect_mismatch', 's_sic', 's_cica'):
        assert key in t.record
    assert t.record['n_i'] == small_cfg.n_i
    assert 0 <= t.successes <= small_cfg.na
    assert t.throughput == pytest.approx(
        uplink_throughput(t.successes, small_cfg))


def _metrics(na, pairs, sq_err=0.1):
    return [TrialMetrics(na, s, c, sq_err * (s + c), 0.0,
                         baselines={'traditional': s})
            for s, c in pairs]


def test_aggregate():
    cfg = SystemConfig(na=4, n_pd=16)
    trials = _metrics(4, [(2, 1), (4, 0), (0, 0), (1, 2)])
    rows = aggregate(cfg, trials, ['traditional'])
    row = rows[0]
    assert row['scheme'] == SCHEME
    assert row['s_sic'] == pytest.approx(1.75)
    assert row['s_cica'] == pytest.approx(0.75)
    assert row['p_s'] == pytest.approx(2.5 / 4)
    assert row['p_md'] == pytest.approx(1.5 / 4)
    assert row['mse'] == pytest.approx(0.1)
    assert row['throughput'] == pytest.approx(uplink_throughput(2.5, cfg))
    assert row['trials'] == 4
    ps = np.array([0.75, 1.0, 0.0, 0.75])
    assert row['stderr_p_s'] == pytest.approx(ps.std(ddof=1) / 2)
    assert set(RESULT_COLUMNS) <= set(row)

    base = rows[1]
    assert base['scheme'] == 'traditional'
    assert base['p_s'] == pytest.approx(1.75 / 4)
    assert math.isnan(base['mse']) and math.isnan(base['s_sic'])


def test_aggregate_without_successes():
    cfg = SystemConfig(na=4, n_pd=16)
    row = aggregate(cfg, _metrics(4, [(0, 0)]))[0]
    assert math.isnan(row['mse'])
    assert row['stderr_p_s'] == 0.0


def test_aggregate_overlay():
    cfg = SystemConfig(na=4, n_pd=16)
    overlay = analyze(cfg)
    rows = aggregate(cfg, _metrics(4, [(1, 1)]), ['traditional'], overlay)
    for r in rows:
        assert r['p_s_u'] == overlay.p_s_u
        assert set(OVERLAY_COLUMNS) <= set(r)


def test_check_writable(tmp_path):
    check_writable(str(tmp_path / 'a' / 'b'))
    assert (tmp_path / 'a' / 'b').is_dir()
    blocker = tmp_path / 'file'
    blocker.write_text('x')
    with pytest.raises(OutputError):
        check_writable(str(blocker))


def test_version_string():
    assert version_string()


def test_sweep_writes_outputs(small_cfg, tmp_path):
    out = tmp_path / 'run'
    spec = SweepSpec(base=small_cfg, grid={'na': [2, 3]}, trials=2,
                     baselines=('traditional', 'multipreamble_approx'),
                     analysis=True, out=str(out))
    rows = run_sweep(spec)
    assert len(rows) == 6
    assert [r['scheme'] for r in rows[:3]] == [
        SCHEME, 'traditional', 'multipreamble_approx']

    with open(out / 'results.csv', newline='') as f:
        table = list(csv.reader(f))
    assert table[0] == list(RESULT_COLUMNS + OVERLAY_COLUMNS)
    assert len(table) == 7
    assert table[2][RESULT_COLUMNS.index('mse')] == 'nan'

    summary = json.loads((out / 'summary.json').read_text())
    assert summary['scheme'] == SCHEME
    assert summary['mse_population'] == 'successful UEs'
    assert summary['sweep']['trials'] == 2
    assert summary['rows'][1]['mse'] is None
    assert 'runtime' not in summary['rows'][0]


def test_sweep_is_reproducible(small_cfg):
    spec = SweepSpec.single(small_cfg, 3, ['traditional'])
    a, b = run_sweep(spec), run_sweep(spec)
    assert json.dumps(a, sort_keys=True, default=str) == \
        json.dumps(b, sort_keys=True, default=str)


def test_sweep_rejects_bad_output(small_cfg, tmp_path):
    blocker = tmp_path / 'file'
    blocker.write_text('x')
    with pytest.raises(OutputError):
        run_sweep(SweepSpec.single(small_cfg, 1, out=str(blocker)))


@pytest.mark.slow
def test_parallel_sweep_matches_serial(small_cfg, tmp_path):
    outs = [tmp_path / 'serial', tmp_path / 'parallel']
    for out, workers in zip(outs, (1, 3)):
        spec = SweepSpec(base=small_cfg, grid={'na': [2, 4]}, trials=4,
                         baselines=('traditional', ), out=str(out))
        run_sweep(spec, workers=workers)
    serial, parallel = [(o / 'results.csv').read_bytes() for o in outs]
    assert serial == parallel


@pytest.mark.slow
def test_access_probability_falls_with_load():
    base = SystemConfig(m=100, tau_p=10, l=2, n_pd=128, n_i=10,
                        snr_db=10.0, seed=3)
    spec = SweepSpec(base=base, grid={'na': [5, 30]}, trials=20)
    light, heavy = run_sweep(spec)
    assert light['p_s'] > heavy['p_s']
    assert light['p_s'] > 0.8


@pytest.mark.slow
def test_scheme_beats_traditional_access():
    cfg = SystemConfig(m=200, na=15, tau_p=10, l=2, n_pd=128, n_i=10,
                       snr_db=10.0, seed=5)
    ours, trad = run_sweep(SweepSpec.single(cfg, 20, ['traditional']))
    assert ours['p_s'] > trad['p_s']


@pytest.mark.slow
@pytest.mark.parametrize('tau_p,l', [(9, 2), (6, 3)])
def test_throughput_between_traditional_and_bound(tau_p, l):
    cfg = SystemConfig(m=100, na=40, tau_p=tau_p, l=l, n_i=20, snr_db=10.0,
                       seed=8)
    spec = SweepSpec.single(cfg, 10, ['traditional', 'multipreamble_approx'],
                            analysis=True)
    ours, trad, _ = run_sweep(spec)
    assert ours['throughput'] > trad['throughput']
    assert ours['throughput'] <= ours['gamma_u'] + 1e-9


@pytest.mark.slow
def test_access_stays_under_the_bound():
    base = SystemConfig(m=100, snr_db=10.0, n_i=10, seed=9)
    spec = SweepSpec(base=base, grid={'na': [10, 20, 30]}, trials=30,
                     analysis=True)
    for row in run_sweep(spec):
        assert row['p_s'] <= row['p_s_u'] + 0.02
        assert row['p_md'] >= row['p_md_l'] - 0.02


@pytest.mark.slow
def test_more_classifiers_help():
    base = SystemConfig(m=100, na=20, tau_p=10, l=2, snr_db=10.0, seed=10)
    few, many = run_sweep(SweepSpec(base=base, grid={'n_i': [5, 20]},
                                    trials=20))
    assert many['p_s'] >= few['p_s'] - 0.01
    assert many['mse'] <= few['mse'] + 0.005


@pytest.mark.slow
def test_missed_detection_falls_with_snr():
    base = SystemConfig(m=100, na=20, tau_p=10, l=2, n_i=10, seed=11)
    low, high = run_sweep(SweepSpec(base=base, grid={'snr_db': [5.0, 20.0]},
                                    trials=20))
    assert high['p_md'] <= low['p_md'] + 0.01

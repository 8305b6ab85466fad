import math

import numpy as np
import pytest
from scipy import special

from gfra import SystemConfig, UsageError
from gfra.analysis import (analysis_table, analyze, ber_lower_bound,
                           ber_lower_bound_closed, bounds,
                           degree_distributions, evolve, uplink_throughput)
from gfra.sic import peel_indices


def test_degree_distributions():
    dd = degree_distributions(20, 10, 2)
    assert dd.Lambda.tolist() == [0.0, 0.0, 1.0]
    assert dd.Psi.sum() == pytest.approx(1.0)
    assert dd.rho.sum() == pytest.approx(1.0)
    assert dd.lam.tolist() == [0.0, 0.0, 1.0]
    # mean pilot degree is na / tau_p
    assert (np.arange(21) * dd.Psi).sum() == pytest.approx(2.0)
    assert dd.lam_at(0.3) == pytest.approx(0.3)
    assert dd.Lambda_at(0.3) == pytest.approx(0.09)
    assert dd.rho_at(1.0) == pytest.approx(1.0)


@pytest.mark.parametrize('args', [(0, 10, 2), (5, 0, 2), (5, 10, 0)])
def test_degree_distributions_invalid(args):
    with pytest.raises(UsageError):
        degree_distributions(*args)


def test_evolve_single_ue_always_peels():
    r = evolve(degree_distributions(1, 10, 2), 1000)
    assert r.p_fail == 0.0
    assert r.m[0] == 1.0 and r.n[0] == 1.0


def test_evolve_single_pilot_never_peels():
    r = evolve(degree_distributions(2, 1, 1), 1000)
    assert r.p_fail == 1.0


def test_pilot_degree_is_binomial():
    dd = degree_distributions(20, 10, 2)
    assert dd.Psi[2] == pytest.approx(190 * 0.01 * 0.9**18)
    assert dd.Psi[0] == pytest.approx(0.9**20)


def test_evolve_monotone_in_load_and_pilots():
    def p_fail(na, tau_p):
        return evolve(degree_distributions(na, tau_p, 2), 1000).p_fail

    for tau_p in (6, 9, 10):
        fails = [p_fail(na, tau_p) for na in (10, 20, 30, 40)]
        assert all(b >= a - 1e-12 for a, b in zip(fails, fails[1:]))
    for na in (10, 20, 30, 40):
        fails = [p_fail(na, tau_p) for tau_p in (6, 9, 10)]
        assert all(b <= a + 1e-12 for a, b in zip(fails, fails[1:]))


def test_evolve_is_monotone():
    r = evolve(degree_distributions(20, 10, 2), 1000)
    assert all(b <= a + 1e-15 for a, b in zip(r.m, r.m[1:]))
    assert 0.5 < r.p_fail < 0.8
    assert r.iterations <= 1000


def test_evolve_iteration_cap():
    r = evolve(degree_distributions(20, 10, 2), 3)
    assert r.iterations == 3


def test_evolve_more_phases_help():
    p2 = evolve(degree_distributions(10, 10, 2), 1000).p_fail
    p1 = evolve(degree_distributions(10, 10, 1), 1000).p_fail
    assert p2 < p1


def _peeling_failure(na, tau_p, l, graphs, seed=0):
    rng = np.random.default_rng(seed)
    lost = 0
    for _ in range(graphs):
        sel = [tuple(row) for row in rng.integers(1, tau_p + 1, (na, l))]
        lost += na - len(peel_indices(sel, tau_p))
    return lost / (na * graphs)


@pytest.mark.parametrize('na,tau_p,l', [(20, 10, 2), (20, 6, 3)])
def test_evolve_matches_peeling(na, tau_p, l):
    predicted = evolve(degree_distributions(na, tau_p, l), 1000).p_fail
    assert _peeling_failure(na, tau_p, l, 40_000) == pytest.approx(
        predicted, abs=0.01)


def test_evolve_below_threshold_misses_finite_stopping_sets():
    # (10, 10, 2) sits below the peeling threshold: the limit is 0 while a
    # graph this small still gets stuck on pilot pairs shared by two UEs
    predicted = evolve(degree_distributions(10, 10, 2), 1000).p_fail
    assert predicted < 1e-6
    assert 0.08 < _peeling_failure(10, 10, 2, 5000) < 0.18


@pytest.mark.parametrize('M', [1, 2, 5, 10, 30, 60])
def test_ber_bound_matches_closed_form(M):
    assert ber_lower_bound(M) == pytest.approx(ber_lower_bound_closed(M),
                                               rel=1e-5)


@pytest.mark.slow
def test_ber_bound_single_antenna_sampled():
    rng = np.random.default_rng(2024)
    total = total_sq = 0.0
    n = 10 ** 7
    for _ in range(10):
        ber = 0.5 * special.erfc(np.abs(rng.standard_normal(n // 10)))
        total += float(ber.sum())
        total_sq += float((ber * ber).sum())
    mean = total / n
    stderr = math.sqrt((total_sq / n - mean * mean) / n)
    assert abs(ber_lower_bound(1) - mean) < 3 * stderr


def test_ber_bound_values():
    assert ber_lower_bound_closed(1) == pytest.approx(0.19591, abs=1e-4)
    values = [ber_lower_bound(M) for M in range(1, 12)]
    assert all(b < a for a, b in zip(values, values[1:]))
    tiny = ber_lower_bound(400)
    assert 0.0 < tiny < 1e-50
    with pytest.raises(UsageError):
        ber_lower_bound(0)
    with pytest.raises(UsageError):
        ber_lower_bound_closed(0)


def test_uplink_throughput():
    cfg = SystemConfig()
    assert uplink_throughput(20, cfg) == pytest.approx(20 * 1024 / 2069)
    assert uplink_throughput(20, cfg) == pytest.approx(9.8985, abs=1e-4)
    assert uplink_throughput(0, cfg) == 0.0


def test_bounds_algebra():
    cfg = SystemConfig(na=10, n_pd=16)
    r = bounds(cfg, 0.4, 0.0)
    assert r.s_sic == pytest.approx(6.0)
    assert r.p_cica_u == 1.0
    assert r.p_s_u == pytest.approx(1.0)
    assert r.p_md_l == pytest.approx(0.0)
    r = bounds(cfg, 0.4, 0.01)
    assert r.p_cica_u == pytest.approx(0.99**17)
    assert r.p_s_u == pytest.approx((6 + 4 * 0.99**17) / 10)
    assert r.gamma_u == pytest.approx(uplink_throughput(10 * r.p_s_u, cfg))


def test_analyze_defaults():
    r = analyze(SystemConfig())
    assert 0.0 < r.p_fail < 1.0
    assert r.p_e < 1e-50
    # ICA recovers everything peeling leaves at M = 400
    assert r.p_s_u == pytest.approx(1.0)
    assert r.gamma_u == pytest.approx(9.8985, abs=1e-3)
    d = r.as_dict()
    assert 'm' not in d and d['iterations'] == r.iterations


def test_analysis_table():
    rows = analysis_table([SystemConfig(na=na) for na in (5, 20, 40)])
    assert [r['na'] for r in rows] == [5, 20, 40]
    assert set(rows[0]) == {'na', 'tau_p', 'l', 'm', 'p_fail', 'p_s_u',
                            'p_md_l', 'gamma_u'}
    fails = [r['p_fail'] for r in rows]
    assert fails == sorted(fails)
    assert all(not math.isnan(r['gamma_u']) for r in rows)

import logging
import math

import numpy as np

from gfra import Event, Simulator, SystemConfig, run_trial
from gfra.model import EXAMPLE_SELECTIONS

sim = Simulator()


@sim.on_trial('done')
# equals @sim.on('trial.done')
async def report_trial(event: Event):
    r = event.record
    sim.logger.info('trial %d %s: na_hat=%d sic=%d cica=%d', event.trial,
                    event.detail_type, r['na_hat'], r['s_sic'],
                    r['s_cica'])


@sim.before('point.done')
async def tag_rows(event: Event):
    for row in event.rows:
        row['demo'] = True


@sim.on_point('done')
# equals @sim.on('point.done')
async def report_point(event: Event):
    for row in event.rows:
        print(f'{row["scheme"]:>22}: p_s={row["p_s"]:.3f} '
              f'throughput={row["throughput"]:.3f}')


def example_graph():
    # five UEs on three pilots over two phases: peeling frees three of them,
    # clustering ICA separates the two that share both pilots
    cfg = SystemConfig(m=400, na=5, tau_p=3, l=2, n_pd=128,
                       snr_db=math.inf)
    t = run_trial(cfg, np.random.default_rng(0), selections=EXAMPLE_SELECTIONS)
    print('harvest order:', t.record['peel']['harvest_order'])
    print(f'recovered by SIC: {t.s_sic}, by clustering ICA: {t.s_cica}')


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    example_graph()
    sim.run_simulation(SystemConfig(m=100, na=10, n_pd=256, n_i=10),
                       trials=5,
                       baselines=['traditional', 'multipreamble_approx'])

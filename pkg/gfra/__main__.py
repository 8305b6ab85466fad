"""
This module provides the ``gfra`` command line interface:

```
gfra simulate --config cfg.toml [--seed N] [--trials N] [--out DIR]
gfra analyze --config cfg.toml --out bounds.csv
gfra sweep --spec sweep.toml --out DIR
```
"""

import argparse
import csv
import io
import logging
import os
import sys
from typing import List, Optional

try:
    import ujson as json
except ImportError:
    import json

from . import Simulator
from .config import SweepSpec, SystemConfig, load_mapping
from .exceptions import Error, OutputError
from .harness import check_writable
from .utils import fmt_num

logger = logging.getLogger('gfra')

ANALYSIS_COLUMNS = ('na', 'tau_p', 'l', 'm', 'p_fail', 'p_s_u', 'p_md_l',
                    'gamma_u')


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='gfra',
        description='Grant-free random access link-level simulator.')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log debug messages')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help='Monte Carlo run of one config')
    p.add_argument('--config', required=True, help='TOML or JSON config')
    p.add_argument('--seed', type=int, help='override the master seed')
    p.add_argument('--trials', type=int, default=100)
    p.add_argument('--out', default='results', help='output directory')
    p.add_argument('--baselines', nargs='*', default=[],
                   choices=['traditional', 'multipreamble_approx'])
    p.add_argument('--analysis', action='store_true',
                   help='add the analytical bound columns')
    _add_run_options(p)

    p = sub.add_parser('analyze', help='analytical bounds table (CSV)')
    p.add_argument('--config', required=True,
                   help='config file, or a sweep spec for a whole grid')
    p.add_argument('--out', required=True, help='CSV file, "-" for stdout')

    p = sub.add_parser('sweep', help='Monte Carlo sweep over a grid')
    p.add_argument('--spec', required=True, help='TOML or JSON sweep spec')
    p.add_argument('--out', required=True, help='output directory')
    _add_run_options(p)
    return parser


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument('--workers', type=int, default=1,
                   help='worker processes for trials')
    p.add_argument('--records', action='store_true',
                   help='also write per-trial records to trials.jsonl')


def _attach_records(sim: Simulator, out: str) -> 'io.TextIOBase':
    f = open(os.path.join(out, 'trials.jsonl'), 'w', encoding='utf-8')

    @sim.on_trial('done')
    async def write_record(event):
        f.write(json.dumps({
            'point': event.point,
            'trial': event.trial,
            'record': event.record,
        }) + '\n')

    return f


def _run(sim: Simulator, spec: SweepSpec, records: bool) -> None:
    check_writable(spec.out)
    f = _attach_records(sim, spec.out) if records else None
    try:
        rows = sim.run_sweep(spec)
    finally:
        if f is not None:
            f.close()
    logger.info('%d rows written to %s', len(rows), spec.out)


def _analyze(config: str, out: str) -> None:
    data = load_mapping(config)
    if 'grid' in data or 'base' in data:
        configs = list(SweepSpec.from_mapping(data).points())
    else:
        configs = [SystemConfig.from_mapping(data)]
    rows = Simulator.analyze(configs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(ANALYSIS_COLUMNS)
    for r in rows:
        w.writerow([fmt_num(r[k]) for k in ANALYSIS_COLUMNS])
    if out == '-':
        sys.stdout.write(buf.getvalue())
        return
    try:
        with open(out, 'w', newline='', encoding='utf-8') as f:
            f.write(buf.getvalue())
    except OSError as e:
        raise OutputError(f'writing {out}: {e}') from e


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        if args.command == 'simulate':
            cfg = SystemConfig.load(args.config)
            if args.seed is not None:
                cfg = cfg.replace(seed=args.seed)
            spec = SweepSpec.single(cfg, args.trials, args.baselines,
                                    args.analysis, args.out)
            _run(Simulator(workers=args.workers), spec, args.records)
        elif args.command == 'analyze':
            _analyze(args.config, args.out)
        else:
            spec = SweepSpec.load(args.spec)
            spec = SweepSpec(base=spec.base, grid=spec.grid,
                             trials=spec.trials, baselines=spec.baselines,
                             analysis=spec.analysis, out=args.out)
            _run(Simulator(workers=args.workers), spec, args.records)
    except Error as e:
        logger.error('%s', e)
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(main())

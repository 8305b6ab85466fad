import csv
import json

from gfra.__main__ import ANALYSIS_COLUMNS, main

SMALL = ('m = 32\nna = 3\ntau_p = 4\nl = 2\nn_pd = 64\nn_i = 3\n'
         'snr_db = 20.0\n')


def test_analyze_single_config(tmp_path):
    cfg = tmp_path / 'cfg.toml'
    cfg.write_text(SMALL)
    out = tmp_path / 'bounds.csv'
    assert main(['analyze', '--config', str(cfg), '--out', str(out)]) == 0
    with open(out, newline='') as f:
        rows = list(csv.reader(f))
    assert rows[0] == list(ANALYSIS_COLUMNS)
    assert rows[1][:4] == ['3', '4', '2', '32']


def test_analyze_sweep_grid(tmp_path, capsys):
    spec = tmp_path / 'sweep.json'
    spec.write_text(json.dumps({'base': {'m': 64},
                                'grid': {'na': [5, 10, 20]}}))
    assert main(['analyze', '--config', str(spec), '--out', '-']) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    assert [line.split(',')[0] for line in lines[1:]] == ['5', '10', '20']


def test_simulate_with_records(tmp_path):
    cfg = tmp_path / 'cfg.toml'
    cfg.write_text(SMALL)
    out = tmp_path / 'run'
    code = main(['simulate', '--config', str(cfg), '--trials', '2',
                 '--seed', '9', '--out', str(out), '--baselines',
                 'traditional', '--analysis', '--records'])
    assert code == 0
    with open(out / 'results.csv', newline='') as f:
        table = list(csv.reader(f))
    assert len(table) == 3
    assert table[0][-3:] == ['p_s_u', 'p_md_l', 'gamma_u']
    summary = json.loads((out / 'summary.json').read_text())
    assert summary['sweep']['base']['seed'] == 9
    records = (out / 'trials.jsonl').read_text().splitlines()
    assert sorted(json.loads(r)['trial'] for r in records) == [0, 1]
    assert 'na_hat' in json.loads(records[0])['record']


def test_sweep_command(tmp_path):
    spec = tmp_path / 'sweep.toml'
    spec.write_text('trials = 1\n[base]\n' + SMALL +
                    '[grid]\nsnr_db = [10, 30]\n')
    out = tmp_path / 'sweep'
    assert main(['sweep', '--spec', str(spec), '--out', str(out)]) == 0
    with open(out / 'results.csv', newline='') as f:
        assert len(list(csv.reader(f))) == 3


def test_errors_exit_nonzero(tmp_path):
    bad = tmp_path / 'cfg.toml'
    bad.write_text('m = 0\n')
    assert main(['simulate', '--config', str(bad),
                 '--out', str(tmp_path / 'x')]) == 2
    assert main(['analyze', '--config', str(tmp_path / 'none.toml'),
                 '--out', '-']) == 2
    blocker = tmp_path / 'file'
    blocker.write_text('x')
    good = tmp_path / 'good.toml'
    good.write_text(SMALL)
    assert main(['simulate', '--config', str(good), '--trials', '1',
                 '--out', str(blocker)]) == 2

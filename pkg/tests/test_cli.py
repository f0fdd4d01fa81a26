import json

import numpy as np
import pytest

from cli import build_parser, main
from db.database import LabDatabase
from db.samples import load_samples, persist_samples


def run_cli(db_path, *argv):
    main(['--db', str(db_path), *argv])


def test_presets_listing(tmp_path, capsys):
    run_cli(tmp_path / 'lab.db', 'presets')
    out = capsys.readouterr().out
    for name in ('fig1-logcosh', 'fig2-doublewell', 'fig3-logistic', 'fig4-mog2d'):
        assert name in out
    assert 'two-point slope 4.04' in out


def test_run_parser_accepts_preset_and_scale_flags():
    args = build_parser().parse_args(['run', '--preset', 'fig1-logcosh', '--paper-scale', '--tau', '1.0'])
    assert args.preset == 'fig1-logcosh'
    assert args.full_scale
    assert build_parser().parse_args(['run', '--preset', 'fig4-mog2d', '--full-scale']).full_scale
    assert not build_parser().parse_args(['run', '--preset', 'fig2-doublewell']).full_scale


def test_missing_command_exits(tmp_path):
    with pytest.raises(SystemExit) as info:
        run_cli(tmp_path / 'lab.db')
    assert info.value.code == 1


def test_run_without_target_reports_config_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        run_cli(tmp_path / 'lab.db', 'run', '--tau', '0.1')
    assert info.value.code == 1
    captured = capsys.readouterr()
    assert 'error=ConfigError' in captured.err
    assert '❌' in captured.out


def test_run_rejects_bad_initial_law(tmp_path, capsys):
    with pytest.raises(SystemExit):
        run_cli(tmp_path / 'lab.db', 'run', '--target', 'ou', '--tau', '0.1', '--init', 'uniform')
    assert 'error=ParameterDomainError' in capsys.readouterr().err


def test_sample_reference_then_load(tmp_path):
    out = tmp_path / 'samples' / 'logistic.txt'
    run_cli(tmp_path / 'lab.db', 'sample', 'reference', '--target', 'logistic', '--particles', '500',
            '--seed', '11', '--output', str(out))
    stored = load_samples(str(out), expected_dim=1)
    assert stored.count == 500
    assert stored.seed == 11

    [log] = LabDatabase(str(tmp_path / 'lab.db')).get_recent_logs()
    assert log['command'] == 'sample:reference'
    assert log['target'] == 'logistic'


def test_sample_numerical(tmp_path):
    out = tmp_path / 'mog.txt'
    run_cli(tmp_path / 'lab.db', 'sample', 'numerical', '--target', 'mog2d', '--tau', '0.1', '--steps', '5',
            '--particles', '300', '--init', 'point:0.5', '--output', str(out))
    stored = load_samples(str(out), expected_dim=2)
    assert stored.count == 300



def test_sample_numerical_starts_from_sample_file(tmp_path):
    start = np.linspace(-2.0, 2.0, 300)[:, None]
    persist_samples(str(tmp_path / 'start.txt'), start)
    out = tmp_path / 'ou.txt'
    run_cli(tmp_path / 'lab.db', 'sample', 'numerical', '--target', 'ou', '--tau', '0.1', '--steps', '0',
            '--particles', '300', '--init', f"samples:{tmp_path / 'start.txt'}", '--output', str(out))
    np.testing.assert_array_equal(load_samples(str(out)).samples, start)

    run_cli(tmp_path / 'lab.db', 'sample', 'numerical', '--target', 'ou', '--tau', '0.1', '--steps', '10',
            '--particles', '300', '--init', f"samples:{tmp_path / 'start.txt'}", '--output', str(out))
    moved = load_samples(str(out)).samples
    assert moved.shape == (300, 1)
    assert not np.array_equal(moved, start)


def test_sample_file_initial_law_must_match_ensemble(tmp_path, capsys):
    persist_samples(str(tmp_path / 'start.txt'), np.zeros((300, 1)))
    with pytest.raises(SystemExit):
        run_cli(tmp_path / 'lab.db', 'sample', 'numerical', '--target', 'ou', '--tau', '0.1',
                '--particles', '200', '--init', f"samples:{tmp_path / 'start.txt'}",
                '--output', str(tmp_path / 'x.txt'))
    assert 'error=ParameterDomainError' in capsys.readouterr().err

    with pytest.raises(SystemExit):
        run_cli(tmp_path / 'lab.db', 'sample', 'numerical', '--target', 'mog2d', '--tau', '0.1',
                '--particles', '300', '--init', f"samples:{tmp_path / 'start.txt'}",
                '--output', str(tmp_path / 'x.txt'))
    assert 'error=SampleFileError' in capsys.readouterr().err


def test_sample_numerical_needs_tau(tmp_path, capsys):
    with pytest.raises(SystemExit):
        run_cli(tmp_path / 'lab.db', 'sample', 'numerical', '--target', 'ou', '--output', str(tmp_path / 'x.txt'))
    assert 'error=ConfigError' in capsys.readouterr().err
    [log] = LabDatabase(str(tmp_path / 'lab.db')).get_recent_logs()
    assert not log['success']


def test_diagnose_jacobian(tmp_path):
    run_cli(tmp_path / 'lab.db', 'diagnose', '--check', 'jacobian', '--out-dir', str(tmp_path))
    lines = (tmp_path / 'diagnostics' / 'jacobian.csv').read_text().splitlines()
    assert lines[0] == 'x,phi,J,group_product,roundtrip_error'
    assert len(lines) == 22
    products = [float(line.split(',')[3]) for line in lines[1:]]
    assert all(abs(p - 1.0) < 1e-8 for p in products)


def test_diagnose_mass(tmp_path):
    run_cli(tmp_path / 'lab.db', 'diagnose', '--check', 'mass', '--out-dir', str(tmp_path))
    header, row = (tmp_path / 'diagnostics' / 'mass.csv').read_text().splitlines()
    assert header == 't,defect,escaped_nodes'
    assert float(row.split(',')[1]) <= 1e-6


def test_diagnose_coupling_small(tmp_path):
    run_cli(tmp_path / 'lab.db', 'diagnose', '--check', 'coupling', '--target', 'ou', '--tau', '0.1',
            '--steps', '50', '--particles', '500', '--out-dir', str(tmp_path))
    lines = (tmp_path / 'diagnostics' / 'coupling.csv').read_text().splitlines()
    assert lines[0] == 'step,mean_distance,mean_f,coupled_fraction'
    assert len(lines) == 52


def test_logs_and_stats(tmp_path, capsys):
    db_path = tmp_path / 'lab.db'
    run_cli(db_path, 'diagnose', '--check', 'jacobian', '--out-dir', str(tmp_path))
    capsys.readouterr()

    run_cli(db_path, 'logs', '--limit', '5')
    assert 'diagnose:jacobian' in capsys.readouterr().out
    run_cli(db_path, 'stats')
    out = capsys.readouterr().out
    assert 'Total runs:        1' in out
    assert 'double-well' in out


def test_run_from_config_file(tmp_path, capsys):
    cfg = tmp_path / 'ou.cfg'
    cfg.write_text(
        "target = ou\n"
        "tau_list = 0.2 0.4\n"
        "particles = 2000\n"
        "t_final = 2\n"
        "replicates = 1\n"
        "workers = 1\n"
        "grid_nodes = 64\n"
        f"out_dir = {tmp_path / 'out'}\n"
    )
    run_cli(tmp_path / 'lab.db', 'run', '--config', str(cfg), '--seed', '5')
    out = capsys.readouterr().out
    assert 'Study ou-rslmc complete' in out
    assert (tmp_path / 'out' / 'ou-rslmc.csv').exists()

    [log] = LabDatabase(str(tmp_path / 'lab.db')).get_recent_logs()
    assert log['seed'] == '5'
    assert log['command'] == 'run'


def test_run_with_stored_reference_and_initial_samples(tmp_path, capsys):
    db_path = tmp_path / 'lab.db'
    reference = tmp_path / 'ou_ref.txt'
    run_cli(db_path, 'sample', 'reference', '--target', 'ou', '--particles', '2000', '--seed', '3',
            '--output', str(reference))
    persist_samples(str(tmp_path / 'start.txt'), np.linspace(-1.0, 1.0, 2000))
    capsys.readouterr()

    run_cli(db_path, 'run', '--target', 'ou', '--tau', '0.2', '0.4', '--particles', '2000', '--t-final', '1',
            '--replicates', '2', '--workers', '1', '--grid-nodes', '64', '--reference-file', str(reference),
            '--init', f"samples:{tmp_path / 'start.txt'}", '--out-dir', str(tmp_path / 'out'))
    assert 'Study ou-rslmc complete' in capsys.readouterr().out

    summary = json.loads((tmp_path / 'out' / 'ou-rslmc_report.json').read_text())
    assert summary['metadata']['spec']['init'] == 'samples'
    assert summary['metadata']['spec']['reference_file'] == str(reference)
    assert all(log['success'] for log in LabDatabase(str(db_path)).get_recent_logs())


def test_run_rejects_reference_file_of_wrong_dimension(tmp_path, capsys):
    persist_samples(str(tmp_path / 'ref2d.txt'), np.zeros((2000, 2)))
    with pytest.raises(SystemExit):
        run_cli(tmp_path / 'lab.db', 'run', '--target', 'ou', '--tau', '0.2', '--particles', '2000',
                '--t-final', '1', '--replicates', '1', '--reference-file', str(tmp_path / 'ref2d.txt'),
                '--out-dir', str(tmp_path / 'out'))
    assert 'error=SampleFileError' in capsys.readouterr().err


def test_diagnose_bias_with_reference_file(tmp_path):
    db_path = tmp_path / 'lab.db'
    reference = tmp_path / 'ou_ref.txt'
    run_cli(db_path, 'sample', 'reference', '--target', 'ou', '--particles', '1000', '--output', str(reference))
    run_cli(db_path, 'diagnose', '--check', 'bias', '--target', 'ou', '--tau', '0.2', '0.4', '0.8',
            '--particles', '1000', '--t-final', '2', '--replicates', '1', '--workers', '1',
            '--reference-file', str(reference), '--out-dir', str(tmp_path))

    lines = (tmp_path / 'diagnostics' / 'bias_rslmc.csv').read_text().splitlines()
    assert len(lines) == 4
    w1 = [float(line.split(',')[lines[0].split(',').index('w1')]) for line in lines[1:]]
    assert all(v > 0 for v in w1)


def test_diagnose_coupling_start_points(tmp_path, capsys):
    run_cli(tmp_path / 'lab.db', 'diagnose', '--check', 'coupling', '--target', 'ou', '--tau', '0.1',
            '--steps', '10', '--particles', '200', '--x0', '0.5', '--y0', '0.5', '--out-dir', str(tmp_path))
    assert 'x0=0.5, y0=0.5' in capsys.readouterr().out
    rows = [line.split(',') for line in (tmp_path / 'diagnostics' / 'coupling.csv').read_text().splitlines()[1:]]
    assert all(float(row[1]) == 0.0 for row in rows)
    assert all(float(row[3]) == 1.0 for row in rows)

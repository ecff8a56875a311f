import json

import pytest

from sivsim.cli import build_parser, main


def test_run_subcommand_writes_artifacts(scenario_file, tmp_path, capsys):
    path = scenario_file('name: cli-thermal\npreset: siv-nano\n')
    out = tmp_path / 'out'
    assert main(['thermal', '--scenario', str(path), '--out', str(out), '--seed', '3']) == 0
    assert (out / 'thermal.csv').is_file()
    assert json.loads((out / 'manifest.json').read_text())['seed'] == 3
    assert str(out) in capsys.readouterr().out


def test_default_output_directory_comes_from_environment(scenario_file, tmp_path):
    path = scenario_file('name: envdir\n')
    assert main(['superradiance', '--scenario', str(path)]) == 0
    assert (tmp_path / 'runs' / 'envdir-superradiance' / 'summary.json').is_file()


def test_config_error_exits_2_and_records_error(scenario_file, tmp_path):
    path = scenario_file('name: bad\nlevel:\n  delta_gs: 45 ns\n')
    out = tmp_path / 'out'
    assert main(['relaxation', '--scenario', str(path), '--out', str(out)]) == 2
    error = json.loads((out / 'error.json').read_text())
    assert error['code'] == 'UNIT_ERROR'
    assert error['context']['subcommand'] == 'relaxation'


def test_missing_scenario_exits_2(tmp_path):
    assert main(['thermal', '--scenario', str(tmp_path / 'absent.yaml')]) == 2


def test_physics_error_exits_1(scenario_file, tmp_path):
    path = scenario_file('preset: siv-nano\nextinction:\n  target: 0.99\n')
    out = tmp_path / 'out'
    assert main(['extinction', '--scenario', str(path), '--out', str(out)]) == 1
    assert json.loads((out / 'error.json').read_text())['code'] == 'FIT_FAILED'


def test_compare_exit_codes(scenario_file, tmp_path, capsys):
    good = tmp_path / 'good'
    main(['superradiance', '--scenario', str(scenario_file('name: sr\n')), '--out', str(good)])
    assert main(['compare', str(good)]) == 0
    assert 'PASS' in capsys.readouterr().out

    asym = scenario_file('superradiance:\n  couplings: [1.0, 0.0]\n', name='asym.yaml')
    bad = tmp_path / 'bad'
    main(['superradiance', '--scenario', str(asym), '--out', str(bad)])
    assert main(['compare', str(bad)]) == 1
    assert 'FAIL' in capsys.readouterr().out

    empty = tmp_path / 'empty'
    empty.mkdir()
    assert main(['compare', str(empty)]) == 2


def test_reproduce_single_target(tmp_path):
    out = tmp_path / 'repro'
    assert main(['reproduce', '--target', 'thermal', '--target', 'raman', '--out', str(out)]) == 0
    assert (out / 'thermal' / 'summary.json').is_file()
    assert (out / 'raman' / 'raman_sweep.csv').is_file()
    report = json.loads((out / 'acceptance.json').read_text())
    assert report['passed'] is True
    assert (out / 'acceptance.csv').is_file()


def test_parser_rejects_bad_usage():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(['thermal'])
    with pytest.raises(SystemExit):
        parser.parse_args(['reproduce', '--target', 'nope'])
    with pytest.raises(SystemExit):
        parser.parse_args(['reproduce', '--all', '--target', 'hom'])
    args = parser.parse_args(['spin', '--scenario', 's.yaml', '--jobs', '4', '-v'])
    assert args.jobs == 4 and args.verbose

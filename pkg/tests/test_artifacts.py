import json

import numpy as np
import pytest

from sivsim import __version__
from sivsim.artifacts import (
    ERROR_FILE,
    MANIFEST_FILE,
    SUMMARY_FILE,
    frame,
    read_summary,
    sanitize_csv_filename,
    scenario_hash,
    write_error,
    write_json_atomic,
    write_run,
    write_table,
)
from sivsim.errors import ArtifactError, FitError


def test_sanitize_csv_filename():
    assert sanitize_csv_filename('normal.csv') == 'normal.csv'
    assert sanitize_csv_filename('weird name!.CSV') == 'weird_name.csv'
    assert sanitize_csv_filename('noext') == 'noext.csv'
    assert sanitize_csv_filename('../../etc/passwd') == 'etc_passwd.csv'
    with pytest.raises(ArtifactError):
        sanitize_csv_filename('...')


def test_json_is_written_atomically_with_special_floats(tmp_path):
    path = write_json_atomic(tmp_path / 'sub' / 'data.json', {
        'inf': float('inf'), 'nan': float('nan'), 'np': np.float64(1.5), 'arr': np.arange(3), 'flag': np.bool_(True)})
    data = json.loads(path.read_text())
    assert data == {'inf': 'inf', 'nan': None, 'np': 1.5, 'arr': [0, 1, 2], 'flag': True}
    assert [p.name for p in path.parent.iterdir()] == ['data.json']


def test_scenario_hash_ignores_key_order():
    a = {'level': {'delta_gs': 45e9, 'strain_splitting': 0.0}, 'seed': 3}
    b = {'seed': 3, 'level': {'strain_splitting': 0.0, 'delta_gs': 45e9}}
    assert scenario_hash(a) == scenario_hash(b)
    assert scenario_hash(a) != scenario_hash(dict(a, seed=4))


def test_write_table_is_byte_stable(tmp_path):
    table = frame({'tau_ns': np.linspace(0, 1, 7), 'g2': np.exp(-np.linspace(0, 1, 7)) / 3})
    name = write_table(table, tmp_path / 'a', 'g2')
    write_table(table, tmp_path / 'b', 'g2')
    assert name == 'g2.csv'
    first = (tmp_path / 'a' / name).read_bytes()
    assert first == (tmp_path / 'b' / name).read_bytes()
    assert first.splitlines()[0] == b'tau_ns,g2'
    assert b'\r' not in first


def test_write_run_layout(tmp_path):
    write_error(tmp_path, FitError('old failure'))
    tables = {'thermal': frame({'temperature_K': [1.0, 2.0], 'line_ratio': [0.1, 0.2]})}
    manifest = write_run(tmp_path, 'thermal', {'name': 't', 'seed': 5}, 5, tables, {'delta_fit_GHz': 48.0})
    assert not (tmp_path / ERROR_FILE).exists()
    assert manifest.outputs == sorted(['thermal.csv', SUMMARY_FILE, MANIFEST_FILE])
    assert manifest.tool_version == __version__
    assert manifest.seed == 5
    assert manifest.scenario_hash == scenario_hash({'name': 't', 'seed': 5})
    summary = read_summary(tmp_path)
    assert summary == {'delta_fit_GHz': 48.0, 'subcommand': 'thermal'}
    on_disk = json.loads((tmp_path / MANIFEST_FILE).read_text())
    assert on_disk['parameters'] == {'name': 't', 'seed': 5}
    assert set(on_disk['environment']) == {'python', 'platform', 'memory_mb'}
    assert on_disk['environment']['memory_mb'] > 0


def test_write_error_structure(tmp_path):
    err = FitError('no bracket', target=0.63).with_context(scenario='wg', subcommand='waveguide')
    path = write_error(tmp_path, err)
    data = json.loads(path.read_text())
    assert data['code'] == 'FIT_FAILED'
    assert data['message'] == 'no bracket'
    assert data['context'] == {'target': 0.63, 'scenario': 'wg', 'subcommand': 'waveguide'}
    plain = json.loads(write_error(tmp_path, RuntimeError('boom')).read_text())
    assert plain == {'code': 'INTERNAL_ERROR', 'message': 'boom'}


def test_read_summary_errors(tmp_path):
    with pytest.raises(ArtifactError, match='missing'):
        read_summary(tmp_path)
    (tmp_path / SUMMARY_FILE).write_text('{not json')
    with pytest.raises(ArtifactError, match='unreadable'):
        read_summary(tmp_path)

import pytest

from sivsim.acceptance import TARGETS, compare_acceptance, evaluate_check
from sivsim.artifacts import write_error, write_json_atomic
from sivsim.errors import ArtifactError, FitError


def _summary(run_dir, subcommand, **values):
    write_json_atomic(run_dir / 'summary.json', dict(values, subcommand=subcommand))


def test_check_kinds():
    assert evaluate_check({'key': 'x', 'approx': 0.38, 'abs': 0.05}, {'x': 0.40})[0]
    assert not evaluate_check({'key': 'x', 'approx': 39e-9, 'rel': 0.01}, {'x': 40e-9})[0]
    assert evaluate_check({'key': 'x', 'range': [0.97, 1.07]}, {'x': 1.02})[0]
    assert evaluate_check({'key': 'x', 'min': 0.99}, {'x': 0.99})[0]
    assert not evaluate_check({'key': 'x', 'max': 0.05}, {'x': 0.051})[0]
    ok, value, _, diagnostic = evaluate_check({'key': 'x', 'max': 1}, {})
    assert not ok and value is None and 'missing' in diagnostic
    ok, _, _, diagnostic = evaluate_check({'key': 'x', 'max': 1}, {'x': float('nan')})
    assert not ok and 'NaN' in diagnostic


def test_every_target_is_machine_readable():
    for target in TARGETS.values():
        assert target['subcommand']
        for check in target['checks']:
            assert check['key']
            assert {'approx', 'range', 'min', 'max'} & set(check)


def test_extinction_target_passes(tmp_path):
    _summary(tmp_path, 'extinction', cooperativity=1.03, linear_vs_full_max_diff=1e-6, extinction=0.38, efficiency=0.5)
    report = compare_acceptance(tmp_path)
    assert report.passed
    assert {r['target'] for r in report.rows} == {'extinction'}
    row = next(r for r in report.rows if r['key'] == 'extinction')
    assert row['value'] == pytest.approx(0.38)
    assert row['expected'] == '0.38 ± 0.05'


def test_wrong_spectrum_beta_fails_with_diagnostic(tmp_path):
    _summary(tmp_path / 'spin', 'spin', t2star_rel_error=0.001, mc_t2_max_rel_error=0.01,
             oracle_beta=0.667, beta=2 / 3, t2_n32_ms=13.0)
    report = compare_acceptance(tmp_path)
    assert not report.passed
    failures = report.failures()
    assert [f['key'] for f in failures] == ['beta']
    assert 'beta=0.666667 outside [0.97, 1.07]' in failures[0]['diagnostic']
    frame = report.to_frame()
    assert list(frame.columns) == ['target', 'key', 'value', 'expected', 'passed', 'diagnostic']


def test_reproduce_root_with_failed_target(tmp_path):
    _summary(tmp_path / 'thermal', 'thermal', polarization_min=0.995, delta_fit_GHz=48.0)
    write_error(tmp_path / 'waveguide', FitError('no bracket'))
    (tmp_path / 'acceptance.csv').write_text('stale\n')
    report = compare_acceptance(tmp_path)
    assert not report.passed
    failed = report.failures()
    assert len(failed) == 1
    assert failed[0]['target'] == 'waveguide'
    assert 'FIT_FAILED' in failed[0]['diagnostic']
    assert all(r['passed'] for r in report.rows if r['target'] == 'thermal')


def test_sweep_points_are_matched_by_subcommand(tmp_path):
    for i in range(2):
        _summary(tmp_path / f'point_{i:03d}', 'superradiance', ratio=2.0, scan_ratio_min=1.0, scan_ratio_max=2.0)
    report = compare_acceptance(tmp_path)
    assert report.passed
    assert len(report.rows) == 2 * len(TARGETS['superradiance']['checks'])


def test_empty_or_missing_directory_is_an_error(tmp_path):
    with pytest.raises(ArtifactError):
        compare_acceptance(tmp_path)
    with pytest.raises(ArtifactError):
        compare_acceptance(tmp_path / 'absent')

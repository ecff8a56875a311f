import logging
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sivsim.config import (
    DEFAULT_QUBIT,
    dump_scenario,
    jobs_setting,
    log_level_setting,
    output_dir_setting,
    parse_quantity,
    parse_scenario,
    parse_scenario_text,
)
from sivsim.errors import ConfigError, ParameterError, UnitError, UnknownKeyError
from sivsim.siv_model import EMITTER_PRESETS, LEVEL_PRESETS
from sivsim.spin_memory import CompositeNoise, OrnsteinUhlenbeck, QuasiStatic, White


def test_minimal_preset_file_gets_all_defaults():
    s = parse_scenario_text('preset: siv-bulk\n', source_name='minimal.yaml')
    assert s.name == 'minimal'
    assert s.level == LEVEL_PRESETS['siv-bulk']
    assert s.emitter == EMITTER_PRESETS['siv-bulk']
    assert s.cavity.kappa == 57e9
    assert s.qubit == DEFAULT_QUBIT
    assert isinstance(s.noise, QuasiStatic)
    assert s.seed == 0
    assert s.runs == {}
    assert s.run_section('relaxation').n_points == 30
    assert len(s.system.emitters) == 1


def test_unit_suffixes_convert_to_si():
    s = parse_scenario_text('level:\n  delta_gs: "45 GHz"\n')
    assert s.level.delta_gs == 4.5e10
    assert parse_quantity('1.73 ns', 'time') == pytest.approx(1.73e-9)
    assert parse_quantity('300 mK', 'temperature') == pytest.approx(0.3)
    assert parse_quantity('50 mT', 'field') == pytest.approx(0.05)
    assert parse_quantity('4 µs', 'time') == pytest.approx(4e-6)
    assert parse_quantity('90 deg', 'angle') == pytest.approx(math.pi / 2)
    assert parse_quantity(2.5, 'frequency') == 2.5
    assert parse_quantity('2e3', 'rate') == 2e3


def test_unit_mismatch_and_unknown_unit():
    with pytest.raises(UnitError, match='time unit'):
        parse_quantity('5 ns', 'frequency', key='delta_gs')
    with pytest.raises(UnitError, match='unknown unit'):
        parse_quantity('5 furlongs', 'frequency')
    with pytest.raises(UnitError):
        parse_quantity(True, 'frequency')
    with pytest.raises(UnitError) as info:
        parse_scenario_text('name: x\nlevel:\n  delta_gs: 45 ns\n')
    assert info.value.context['line'] == 3
    assert info.value.exit_code == 2


def test_misspelled_key_rejected_with_suggestion():
    text = 'system:\n  emitters:\n    - {detuning: 0 GHz, cooperativty: 1.0}\n'
    with pytest.raises(UnknownKeyError) as info:
        parse_scenario_text(text)
    err = info.value
    assert err.key == 'cooperativty'
    assert err.suggestion == 'cooperativity'
    assert err.line == 3
    assert "did you mean 'cooperativity'" in err.message


def test_unknown_top_level_and_run_keys():
    with pytest.raises(UnknownKeyError) as info:
        parse_scenario_text('emiter:\n  lifetime: 1 ns\n')
    assert info.value.suggestion == 'emitter'
    with pytest.raises(UnknownKeyError) as info:
        parse_scenario_text('spin:\n  n_point: 10\n')
    assert info.value.suggestion == 'n_points'


def test_malformed_yaml_reports_position():
    with pytest.raises(ConfigError) as info:
        parse_scenario_text('level: [1, 2\nbath: 3\n')
    assert info.value.context['line'] is not None


def test_unknown_preset_is_config_error():
    with pytest.raises(ConfigError, match='siv-bulk'):
        parse_scenario_text('preset: siv-bulc\n')
    with pytest.raises(ConfigError):
        parse_scenario_text('presets:\n  noise: pink\n')


def test_parameter_invariants_surface_as_config_errors():
    with pytest.raises(ParameterError):
        parse_scenario_text('emitter:\n  gamma_rad: 10 MHz\n')
    with pytest.raises(ConfigError, match='exactly one'):
        parse_scenario_text('system:\n  emitters:\n    - {detuning: 0 GHz}\n')
    with pytest.raises(ConfigError, match='integer'):
        parse_scenario_text('relaxation:\n  n_points: 2.5\n')


def test_cooperativity_resolves_to_coupling():
    s = parse_scenario_text('preset: siv-nano\nsystem:\n  emitters:\n    - {detuning: 0 GHz, cooperativity: 1.0}\n')
    assert s.coupled_system().cooperativities()[0] == pytest.approx(1.0)


def test_cavity_kappa_override_resets_port_rates():
    s = parse_scenario_text('cavity:\n  kappa: 40 GHz\n')
    assert s.cavity.kappa_in == pytest.approx(20e9)
    assert s.cavity.kappa_out == pytest.approx(20e9)


def test_noise_sections():
    s = parse_scenario_text('noise:\n  model: ornstein_uhlenbeck\n  sigma: 3.5e5 rad/s\n  tau_c: 1 s\n')
    assert s.noise == OrnsteinUhlenbeck(sigma=3.5e5, tau_c=1.0)
    s = parse_scenario_text('noise:\n  model: quasi_static_gaussian\n  t2star: 4 us\n')
    assert s.noise.sigma == pytest.approx(math.sqrt(2) / 4e-6)
    s = parse_scenario_text(
        'noise:\n  model: composite\n  parts:\n    - {model: white, level: 100 /s}\n'
        '    - {preset: quasi-static-4us}\n')
    assert isinstance(s.noise, CompositeNoise)
    assert s.noise.parts[0] == White(level=100.0)
    with pytest.raises(ConfigError, match='ornstein_uhlenbeck'):
        parse_scenario_text('noise:\n  model: ornstein_uhlenbek\n')


def test_seed_must_be_uint64():
    assert parse_scenario_text(f'seed: {2 ** 64 - 1}\n').seed == 2 ** 64 - 1
    for bad in ('-1', str(2 ** 64), '1.5', 'true'):
        with pytest.raises(ConfigError, match='seed'):
            parse_scenario_text(f'seed: {bad}\n')


def test_sweep_axes_and_overrides():
    s = parse_scenario_text(
        'sweep:\n  - path: bath.temperature\n    values: [4 K, 10 K]\n'
        '  - path: relaxation.n_points\n    values: [5, 7, 9]\n')
    points = s.sweep_points()
    assert len(points) == 6
    assert points[0] == [('bath.temperature', 4.0), ('relaxation.n_points', 5)]
    moved = s.with_overrides(points[-1])
    assert moved.bath.temperature == 10.0
    assert moved.run_section('relaxation').n_points == 9
    assert s.bath.temperature == 5.0


def test_sweep_validation():
    with pytest.raises(ConfigError, match='finite'):
        parse_scenario_text('sweep:\n  - path: bath.temperature\n    values: [4 K, inf K]\n')
    with pytest.raises(UnknownKeyError) as info:
        parse_scenario_text('sweep:\n  - path: bath.temprature\n    values: [4 K]\n')
    assert info.value.suggestion == 'temperature'
    with pytest.raises(ConfigError):
        parse_scenario_text('sweep:\n  - path: temperature\n    values: [4 K]\n')


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match='not found'):
        parse_scenario(tmp_path / 'nope.yaml')


def test_parse_scenario_reads_file(scenario_file):
    path = scenario_file('name: from-file\nthermal:\n  delta: 48 GHz\n')
    s = parse_scenario(path)
    assert s.name == 'from-file'
    assert s.run_section('thermal').delta == 48e9


def test_round_trip_is_idempotent():
    text = (
        'name: rt\npreset: siv-nano\nseed: 11\n'
        'system:\n  emitters:\n    - {detuning: -20 GHz, g: 1.6 GHz}\n    - {detuning: 40 GHz, cooperativity: 0.4}\n'
        'noise:\n  model: power_law\n  amplitude: 3.0\n  exponent: 1.2\n  low_cutoff: 10 rad/s\n'
        'hom:\n  linewidths: [135 MHz, 136 MHz]\n'
        'sweep:\n  - path: drive.photons\n    values: [1.0e-4, 1.0e-3]\n'
    )
    first = parse_scenario_text(text)
    dumped = dump_scenario(first)
    second = parse_scenario_text(dumped)
    assert second == first
    assert dump_scenario(second) == dumped


@settings(max_examples=40, deadline=None)
@given(
    delta=st.floats(1e9, 1e12),
    temperature=st.floats(0.01, 100.0),
    kappa=st.floats(1e9, 1e11),
    seed=st.integers(0, 2 ** 64 - 1),
)
def test_round_trip_property(delta, temperature, kappa, seed):
    text = f'level:\n  delta_gs: {delta!r}\nbath:\n  temperature: {temperature!r}\ncavity:\n  kappa: {kappa!r}\nseed: {seed}\n'
    first = parse_scenario_text(text)
    again = parse_scenario_text(dump_scenario(first))
    assert again == first
    assert dump_scenario(again) == dump_scenario(first)


def test_environment_settings(monkeypatch, caplog):
    monkeypatch.setenv('SIVSIM_OUTPUT_DIR', '/tmp/somewhere')
    assert output_dir_setting() == '/tmp/somewhere'
    monkeypatch.delenv('SIVSIM_OUTPUT_DIR')
    assert output_dir_setting() == 'runs'

    monkeypatch.setenv('SIVSIM_JOBS', '4')
    assert jobs_setting() == 4
    monkeypatch.setenv('SIVSIM_JOBS', 'many')
    with caplog.at_level(logging.WARNING, logger='sivsim'):
        assert jobs_setting() == 1
    assert 'SIVSIM_JOBS' in caplog.text
    monkeypatch.setenv('SIVSIM_JOBS', '0')
    assert jobs_setting() == 1

    monkeypatch.setenv('SIVSIM_LOG_LEVEL', 'debug')
    assert log_level_setting() == logging.DEBUG
    monkeypatch.setenv('SIVSIM_LOG_LEVEL', 'chatty')
    assert log_level_setting() == logging.INFO

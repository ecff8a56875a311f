import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sivsim.errors import ParameterError
from sivsim.qdyn import TimeGrid
from sivsim.siv_model import (
    BATH_PRESETS,
    EMITTER_PRESETS,
    FWHM_PER_SIGMA,
    H,
    K_B,
    LEVEL_PRESETS,
    Branch,
    EmitterOpticalParams,
    PhononBathParams,
    SiVLevelParams,
    TransitionRates,
    bose_occupation,
    compare_rate_models,
    empirical_upward_time,
    fit_thermal_splitting,
    ground_hamiltonian,
    linear_rate_approx,
    linewidth_figures_of_merit,
    lower_branch_polarization,
    orbital_relaxation_trajectory,
    orbital_splitting,
    phonon_rates,
    sample_inhomogeneous_ensemble,
    sample_linewidths,
    thermal_line_ratio,
    zpl_photon_rate,
)

COUPLING = BATH_PRESETS['siv-bulk'].coupling_density_product


def _eigen_ghz(level):
    return np.linalg.eigvalsh(ground_hamiltonian(level).matrix) / (2 * np.pi * 1e9)


def test_ground_hamiltonian_zero_field_doublets():
    ev = _eigen_ghz(SiVLevelParams(delta_gs=45e9))
    assert np.allclose(ev, [-22.5, -22.5, 22.5, 22.5])
    assert abs(ev.sum()) < 1e-9


def test_ground_hamiltonian_with_strain_matches_splitting():
    level = SiVLevelParams(delta_gs=45e9, strain_splitting=30e9)
    ev = _eigen_ghz(level)
    assert ev[2] - ev[1] == pytest.approx(75.0)
    assert orbital_splitting(level) == pytest.approx(75e9)


def test_strained_preset_is_80_ghz():
    assert orbital_splitting(LEVEL_PRESETS['siv-strained-80GHz']) == pytest.approx(80e9)


def test_spin_zeeman_splits_doublets():
    level = SiVLevelParams(delta_gs=48e9, b_field=(0.0, 0.0, 0.1), orbital_quenching=0.0)
    ev = _eigen_ghz(level)
    spin_gap = 2.0 * 0.1 * 13.996245  # g * muB/h * B in GHz
    assert ev[1] - ev[0] == pytest.approx(spin_gap, rel=1e-4)
    assert ground_hamiltonian(level).is_hermitian()


def test_level_params_validation():
    with pytest.raises(ParameterError):
        SiVLevelParams(delta_gs=0.0)
    with pytest.raises(ParameterError):
        SiVLevelParams(delta_gs=45e9, strain_splitting=-1.0)
    with pytest.raises(ParameterError):
        SiVLevelParams(delta_gs=45e9, b_field=(0.0, 1.0))


def test_bose_occupation_values():
    assert bose_occupation(48e9, 0.0) == 0.0
    assert H * 48e9 / K_B == pytest.approx(2.3036, rel=1e-4)
    assert bose_occupation(48e9, 4.0) == pytest.approx(1.284, abs=2e-3)
    t_high = 50 * H * 48e9 / K_B
    assert bose_occupation(48e9, t_high) == pytest.approx(50.0, rel=0.02)


def test_calibration_reproduces_equilibration_time():
    rates = phonon_rates(LEVEL_PRESETS['siv-bulk'], BATH_PRESETS['siv-bulk'])
    assert rates.equilibration_time == pytest.approx(39e-9, rel=1e-9)


def test_zero_temperature_rates():
    level = LEVEL_PRESETS['siv-bulk']
    rates = phonon_rates(level, PhononBathParams(COUPLING, 0.0))
    assert rates.gamma_plus == 0.0
    assert rates.gamma_minus == pytest.approx(2 * np.pi * COUPLING * 45e9 ** 3)


@settings(max_examples=100, deadline=None)
@given(delta=st.floats(1e9, 2e11), temperature=st.floats(0.05, 50.0))
def test_detailed_balance(delta, temperature):
    rates = phonon_rates(SiVLevelParams(delta_gs=delta), PhononBathParams(COUPLING, temperature))
    assert rates.gamma_plus / rates.gamma_minus == pytest.approx(
        thermal_line_ratio(delta, temperature), rel=1e-9)


def test_rates_monotone_in_temperature():
    level = LEVEL_PRESETS['siv-bulk']
    temps = np.linspace(0.1, 30.0, 60)
    rates = [phonon_rates(level, PhononBathParams(COUPLING, t)) for t in temps]
    ups = np.array([r.gamma_plus for r in rates])
    downs = np.array([r.gamma_minus for r in rates])
    assert np.all(np.diff(ups) > 0)
    assert np.all(np.diff(downs) >= 0)


def test_rate_scaling_exponents():
    deltas = np.array([10e9, 20e9, 40e9, 80e9])
    hot = [phonon_rates(SiVLevelParams(d), PhononBathParams(COUPLING, 2000.0)).gamma_plus for d in deltas]
    assert np.polyfit(np.log(deltas), np.log(hot), 1)[0] == pytest.approx(2.0, rel=0.01)
    # temperature scaled with delta keeps the occupation fixed
    fixed_n = [phonon_rates(SiVLevelParams(d), PhononBathParams(COUPLING, H * d / K_B)).gamma_minus
               for d in deltas]
    assert np.polyfit(np.log(deltas), np.log(fixed_n), 1)[0] == pytest.approx(3.0, rel=0.01)


def test_rate_is_linear_between_4_5_and_22_kelvin():
    level = LEVEL_PRESETS['siv-bulk']
    temps = np.linspace(4.5, 22.0, 30)
    total = [phonon_rates(level, PhononBathParams(COUPLING, t)).total for t in temps]
    assert stats.linregress(temps, total).rvalue ** 2 > 0.999


def test_linear_approximation_limits(caplog):
    level = LEVEL_PRESETS['siv-bulk']
    crossover = H * 45e9 / K_B
    bath = PhononBathParams(COUPLING, 10 * crossover)
    ratio = linear_rate_approx(level, bath) / phonon_rates(level, bath).gamma_plus
    assert ratio == pytest.approx(1.0, abs=0.06)
    hot = PhononBathParams(COUPLING, 1e4 * crossover)
    assert linear_rate_approx(level, hot) / phonon_rates(level, hot).gamma_plus == pytest.approx(1.0, abs=1e-3)

    with caplog.at_level(logging.WARNING, logger='sivsim'):
        linear_rate_approx(level, PhononBathParams(COUPLING, 0.5 * crossover))
    assert 'below' in caplog.text


def test_empirical_upward_times():
    assert empirical_upward_time(1.0) == pytest.approx(2.0e-6, rel=0.05)
    assert empirical_upward_time(0.26) == pytest.approx(2.0e-3, rel=0.05)
    assert empirical_upward_time(0.0) == float('inf')


def test_model_and_empirical_prefactors_are_reported():
    report = compare_rate_models(LEVEL_PRESETS['siv-bulk'], BATH_PRESETS['siv-bulk'])
    assert report['model_prefactor_s'] == pytest.approx(183e-9, rel=0.02)
    assert report['prefactor_ratio'] == pytest.approx(1.0, abs=0.1)


def test_thermal_line_ratio_limits():
    assert thermal_line_ratio(48e9, 1e6) == pytest.approx(1.0, abs=1e-5)
    for t in np.linspace(0.05, 0.5, 10):
        assert lower_branch_polarization(48e9, t) > 0.99
    assert thermal_line_ratio(48e9, 0.0) == 0.0


def test_thermal_fit_recovers_splitting():
    temps = np.geomspace(0.1, 10.0, 25)
    ratios = [thermal_line_ratio(48e9, t) for t in temps]
    fit = fit_thermal_splitting(temps, ratios)
    assert fit.delta_fit == pytest.approx(48e9, rel=0.01)
    fit42 = fit_thermal_splitting(temps, [thermal_line_ratio(42e9, t) for t in temps])
    assert fit42.delta_fit == pytest.approx(42e9, rel=1e-6)


def test_thermal_fit_rejects_bad_input():
    with pytest.raises(ParameterError):
        fit_thermal_splitting([1.0], [0.5])
    with pytest.raises(ParameterError):
        fit_thermal_splitting([1.0, 2.0], [0.5, 0.0])


def test_relaxation_trajectory_zero_temperature():
    rates = TransitionRates(0.0, 1e7)
    grid = TimeGrid(0.0, 5e-7, 51)
    traj = orbital_relaxation_trajectory(rates, Branch.UB, grid)
    assert np.allclose(traj.upper, np.exp(-1e7 * grid.times()))


def test_relaxation_trajectory_equilibrates_and_conserves():
    level, bath = LEVEL_PRESETS['siv-bulk'], BATH_PRESETS['siv-bulk']
    rates = phonon_rates(level, bath)
    grid = TimeGrid(0.0, 2e-6, 401)
    traj = orbital_relaxation_trajectory(rates, 'LB', grid)
    assert np.max(np.abs(traj.lower + traj.upper - 1.0)) < 1e-12
    assert traj.upper[-1] / traj.lower[-1] == pytest.approx(thermal_line_ratio(45e9, 5.0), rel=1e-9)
    # 1/e of the way to equilibrium after 39 ns
    up = orbital_relaxation_trajectory(rates, 'UB', TimeGrid(0.0, 39e-9, 2))
    p_eq = rates.gamma_plus / rates.total
    assert (up.upper[-1] - p_eq) / (1 - p_eq) == pytest.approx(np.exp(-1), rel=1e-9)


def test_inhomogeneous_ensemble():
    params = EMITTER_PRESETS['siv-bulk']
    degenerate = EmitterOpticalParams(params.zpl_frequency, params.lifetime, params.gamma_rad)
    assert sample_inhomogeneous_ensemble(degenerate, 1, seed=3)[0] == params.zpl_frequency

    sample = sample_inhomogeneous_ensemble(params, 10_000, seed=7)
    assert np.std(sample) * FWHM_PER_SIGMA == pytest.approx(1e9, rel=0.05)
    assert np.array_equal(sample, sample_inhomogeneous_ensemble(params, 10_000, seed=7))
    assert EMITTER_PRESETS['siv-nano'].inhomogeneous_width == 20e9
    with pytest.raises(ParameterError):
        sample_inhomogeneous_ensemble(params, 0)


def test_linewidth_sampling_is_truncated_at_transform_limit():
    params = EMITTER_PRESETS['siv-nano']
    widths = sample_linewidths(320e6, 180e6, 5000, seed=1, floor=params.transform_limit)
    assert widths.min() >= params.transform_limit
    assert widths.mean() > 320e6


def test_figures_of_merit_and_zpl_rate():
    params = EmitterOpticalParams(406.7e12, 1.73e-9, 94e6, 316e6, 0.7, 20e9)
    merit = linewidth_figures_of_merit(params)
    assert merit['broadening_ratio'] == pytest.approx(410 / 94)
    assert zpl_photon_rate(params, 1e6) == pytest.approx(7e5)


def test_emitter_below_transform_limit_rejected():
    with pytest.raises(ParameterError):
        EmitterOpticalParams(406.7e12, 1.73e-9, 50e6)

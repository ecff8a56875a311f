"""Subcommand handlers plus the run/reproduce orchestration.

A handler takes a resolved Scenario, a seed and a worker count and returns
``(tables, summary)``: named DataFrames whose headers carry units, and a
flat dict of fitted values that the acceptance manifest reads.
"""
import logging
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import stats

from .acceptance import TARGETS, compare_acceptance
from .artifacts import frame, write_error, write_json_atomic, write_run, write_table
from .cavity_qed import (
    DriveParams,
    extinction,
    find_dips,
    fit_extinction_efficiency,
    half_saturation_flux,
    photon_statistics,
    purcell_lifetime,
    saturation_curve,
    transmission_linear,
    transmission_spectrum,
    weak_drive_amplitude,
    with_emitters,
)
from .config import jobs_setting, output_dir_setting, parse_scenario_text
from .errors import ConfigError, SivsimError
from .interference import (
    DetectorModel,
    RamanConfig,
    SinglePhotonSource,
    SpectralLine,
    TwoEmitterWaveguide,
    calibrate_waveguide,
    detune_pair,
    fit_hom_imperfections,
    hom_pair,
    line_profile,
    quantum_beat_period,
    raman_spectrum,
    raman_tuning_sweep,
    superradiant_rate,
    waveguide_g2,
)
from .qdyn import TimeGrid
from .siv_model import (
    FWHM_PER_SIGMA,
    LINEWIDTH_STATISTICS,
    compare_rate_models,
    empirical_upward_time,
    fit_thermal_splitting,
    linear_rate_approx,
    linewidth_figures_of_merit,
    lower_branch_polarization,
    orbital_relaxation_trajectory,
    phonon_rates,
    relaxation_time_grid,
    sample_inhomogeneous_ensemble,
    sample_linewidths,
    thermal_line_ratio,
    zpl_photon_rate,
)
from .spin_memory import (
    PulseSequence,
    QuasiStatic,
    adaptive_grid,
    cpmg_coherence,
    cpmg_family,
    fit_ramsey_fringe,
    monte_carlo_coherence,
    noise_preset,
    rabi_trajectory,
    ramsey_decay,
    spin_t1_floor,
    t2_scaling_fit,
)
from .worker import map_tasks, sweep_seed

logger = logging.getLogger('sivsim')

GHZ = 1e9
MHZ = 1e6
NS = 1e-9


# -- siv-model ----------------------------------------------------------------

def run_relaxation(scenario, seed, jobs):
    r = scenario.run_section('relaxation')
    temps = np.linspace(r.t_min, r.t_max, r.n_points)
    baths = [replace(scenario.bath, temperature=float(t)) for t in temps]
    rates = [phonon_rates(scenario.level, b) for b in baths]
    total = np.array([x.total for x in rates])
    fit = stats.linregress(temps, total)

    rates_table = frame({
        'temperature_K': temps,
        'gamma_plus_per_s': [x.gamma_plus for x in rates],
        'gamma_minus_per_s': [x.gamma_minus for x in rates],
        'rate_sum_per_s': total,
        'linear_gamma_plus_per_s': [linear_rate_approx(scenario.level, b) for b in baths],
        'empirical_gamma_plus_per_s': [1.0 / empirical_upward_time(t) for t in temps],
    })

    at_bath = phonon_rates(scenario.level, scenario.bath)
    traj = orbital_relaxation_trajectory(at_bath, r.initial_branch, relaxation_time_grid(at_bath, r.trajectory_points))
    trajectory_table = frame({
        'time_ns': traj.times / NS,
        'lower_population': traj.lower,
        'upper_population': traj.upper,
    })

    summary = {
        'linear_fit_slope_per_s_per_K': fit.slope,
        'linear_fit_intercept_per_s': fit.intercept,
        'linear_fit_r2': fit.rvalue ** 2,
        'equilibration_time_5K_s': phonon_rates(scenario.level, replace(scenario.bath, temperature=5.0)).equilibration_time,
        'trajectory_1e_time_s': _one_over_e_time(traj, at_bath),
        'empirical_upward_time_1K_s': empirical_upward_time(1.0),
        'empirical_upward_time_0p26K_s': empirical_upward_time(0.26),
        'initial_branch': r.initial_branch,
    }
    summary.update(compare_rate_models(scenario.level, scenario.bath))
    return {'relaxation_rates': rates_table, 'relaxation_trajectory': trajectory_table}, summary


def _one_over_e_time(traj, rates):
    if rates.total == 0:
        return float('inf')
    p_eq = rates.gamma_plus / rates.total
    start = traj.upper[0] - p_eq
    if start == 0:
        return 0.0
    remaining = (traj.upper - p_eq) / start
    # remaining decreases monotonically; interp wants increasing x
    return float(np.interp(np.exp(-1), remaining[::-1], traj.times[::-1]))


def run_thermal(scenario, seed, jobs):
    r = scenario.run_section('thermal')
    temps = np.geomspace(r.t_min, r.t_max, r.n_points)
    ratios = np.array([thermal_line_ratio(r.delta, t) for t in temps])
    polarization = np.array([lower_branch_polarization(r.delta, t) for t in temps])
    fit = fit_thermal_splitting(temps, ratios)
    cold = polarization[temps <= r.polarization_limit]
    summary = {
        'input_delta_GHz': r.delta / GHZ,
        'delta_fit_GHz': fit.delta_fit / GHZ,
        'delta_fit_stderr_GHz': fit.stderr / GHZ,
        'fit_r2': fit.r_squared,
        'polarization_limit_K': r.polarization_limit,
        'polarization_min': float(cold.min()) if cold.size else None,
    }
    table = frame({'temperature_K': temps, 'line_ratio': ratios, 'lower_branch_polarization': polarization})
    return {'thermal': table}, summary


def run_ensemble(scenario, seed, jobs):
    r = scenario.run_section('ensemble')
    emitter = scenario.emitter
    zpl = sample_inhomogeneous_ensemble(emitter, r.n_emitters, seed=seed)
    mean, std = LINEWIDTH_STATISTICS.get(scenario.presets.get('emitter'), (emitter.gamma_total, 0.0))
    if r.linewidth_mean is not None:
        mean = r.linewidth_mean
    if r.linewidth_std is not None:
        std = r.linewidth_std
    widths = sample_linewidths(mean, std, r.n_emitters, seed=seed + 1, floor=emitter.transform_limit)

    nu = emitter.zpl_frequency + np.linspace(-r.span / 2, r.span / 2, r.spectrum_points)
    lines = [SpectralLine('ZPL', f, w, 1.0 / r.n_emitters) for f, w in zip(zpl, widths)]
    profile = line_profile(lines, nu)

    measured = float(np.std(zpl, ddof=1) * FWHM_PER_SIGMA) if r.n_emitters > 1 else 0.0
    expected = emitter.inhomogeneous_width
    summary = {
        'n_emitters': r.n_emitters,
        'inhomogeneous_fwhm_GHz': measured / GHZ,
        'input_inhomogeneous_fwhm_GHz': expected / GHZ,
        'inhomogeneous_fwhm_rel_error': abs(measured - expected) / expected if expected > 0 else measured,
        'linewidth_mean_MHz': float(np.mean(widths)) / MHZ,
        'linewidth_std_MHz': float(np.std(widths, ddof=1)) / MHZ if r.n_emitters > 1 else 0.0,
        'zpl_photon_fraction': zpl_photon_rate(emitter, 1.0),
    }
    summary.update(linewidth_figures_of_merit(emitter))
    tables = {
        'ensemble_emitters': frame({
            'emitter': np.arange(r.n_emitters),
            'zpl_offset_GHz': (zpl - emitter.zpl_frequency) / GHZ,
            'linewidth_MHz': widths / MHZ,
        }),
        'ensemble_spectrum': frame({
            'frequency_offset_GHz': (nu - emitter.zpl_frequency) / GHZ,
            'intensity': profile / profile.max(),
        }),
    }
    return tables, summary


# -- cavity-qed ---------------------------------------------------------------

def run_spectrum(scenario, seed, jobs):
    r = scenario.run_section('spectrum')
    system = scenario.coupled_system()
    f0 = scenario.cavity.resonance
    offsets = np.arange(-r.span / 2, r.span / 2 + r.step / 2, r.step)
    nu = f0 + offsets
    t = transmission_spectrum(system, nu, weak_drive=r.weak_drive, amplitude=scenario.drive.amplitude)
    bare = transmission_linear(scenario.bare_cavity(), nu)
    dips = find_dips(nu, t, baseline=bare, min_depth=r.min_depth)

    expected = system.detunings()
    found = np.array([d.frequency - f0 for d in dips])
    if found.size and expected.size:
        errors = [float(np.min(np.abs(found - e))) for e in expected]
        max_error = max(errors) / GHZ
    else:
        max_error = None
    summary = {
        'n_emitters': len(system.emitters),
        'n_dips': len(dips),
        'max_position_error_GHz': max_error,
        'cooperativities': system.cooperativities(),
        'quality_factor': scenario.cavity.quality_factor,
    }
    tables = {
        'spectrum': frame({'detuning_GHz': offsets / GHZ, 'transmission': t, 'bare_transmission': bare}),
        'spectrum_dips': frame({
            'detuning_GHz': found / GHZ,
            'transmission': [d.transmission for d in dips],
            'depth': [d.depth for d in dips],
            'width_GHz': [d.width / GHZ for d in dips],
        }),
    }
    return tables, summary


def run_extinction(scenario, seed, jobs):
    r = scenario.run_section('extinction')
    system = scenario.coupled_system()
    c = system.cooperativities()[0] if system.emitters else 0.0
    fitted = r.efficiency is None
    eta = fit_extinction_efficiency(c, r.target) if fitted else r.efficiency
    value = extinction(system, eta)

    probes = system.emitters[0][0].zpl_frequency + np.asarray(r.check_probes, dtype=float)
    linear = transmission_spectrum(system, probes, weak_drive=True)
    full = transmission_spectrum(system, probes, weak_drive=False)
    diff = np.abs(linear - full)

    emitter = system.emitters[0][0]
    g = system.emitters[0][1]
    gs = g * np.linspace(0.1, 3.0, 30)
    sweep = [with_emitters(scenario.cavity, [(emitter.zpl_frequency - scenario.cavity.resonance, x)], scenario.emitter)
             for x in gs]
    coop = np.array([s.cooperativities()[0] for s in sweep])

    summary = {
        'cooperativity': c,
        'efficiency': eta,
        'efficiency_fitted': fitted,
        'extinction': value,
        'ideal_dip_depth': 1.0 - 1.0 / (1.0 + c) ** 2,
        'linear_vs_full_max_diff': float(diff.max()),
        'purcell_lifetime_ns': purcell_lifetime(system) / NS,
        'quality_factor': scenario.cavity.quality_factor,
    }
    tables = {
        'extinction_check': frame({
            'probe_detuning_GHz': np.asarray(r.check_probes, dtype=float) / GHZ,
            'linear_transmission': linear,
            'full_transmission': full,
            'abs_diff': diff,
        }),
        'extinction_vs_g': frame({
            'g_GHz': gs / GHZ,
            'cooperativity': coop,
            'ideal_dip_depth': 1.0 - 1.0 / (1.0 + coop) ** 2,
            'extinction': [extinction(s, eta) for s in sweep],
        }),
    }
    return tables, summary


def run_saturation(scenario, seed, jobs):
    r = scenario.run_section('saturation')
    system = scenario.coupled_system()
    amplitudes = np.geomspace(weak_drive_amplitude(scenario.cavity), r.max_amplitude, r.n_points)
    curve = saturation_curve(system, amplitudes)
    flux = half_saturation_flux(curve)
    summary = {
        'cooperativity': system.cooperativities()[0],
        'half_saturation_flux_per_s': flux,
        'reference_rate_per_s': 1.0 / r.reference_lifetime,
        'half_saturation_ratio': flux * r.reference_lifetime,
        'weak_drive_depth': curve[0].dip_depth,
        'strong_drive_depth_ratio': curve[-1].dip_depth / curve[0].dip_depth,
    }
    table = frame({
        'amplitude_GHz': [p.amplitude / GHZ for p in curve],
        'intracavity_flux_per_s': [p.intracavity_flux for p in curve],
        'transmission': [p.transmission for p in curve],
        'transmission_total': [p.transmission_total for p in curve],
        'dip_depth': [p.dip_depth for p in curve],
        'excited_population': [p.excited_population for p in curve],
        'linewidth_GHz': [p.linewidth / GHZ for p in curve],
    })
    return {'saturation': table}, summary


def run_g2(scenario, seed, jobs):
    r = scenario.run_section('g2')
    system = scenario.coupled_system()
    d = scenario.drive
    amplitude = d.amplitude if d.amplitude is not None else weak_drive_amplitude(scenario.cavity, d.photons)
    drive = DriveParams(scenario.cavity.resonance + d.detuning, amplitude)
    grid = TimeGrid(0.0, r.tau_max, r.n_points)
    columns = {'tau_ns': grid.times() / NS}
    summary = {'cooperativity': system.cooperativities()[0] if system.emitters else 0.0,
               'drive_amplitude_Hz': amplitude}
    tail = 0.0
    for port in r.ports:
        g2 = photon_statistics(system, drive, port, grid)
        columns[f'g2_{port}'] = g2
        summary[f'g2_{port}_zero'] = float(g2[0])
        tail = max(tail, abs(float(g2[-1]) - 1.0))
    summary['g2_tail_max_deviation'] = tail
    return {'g2': frame(columns)}, summary


# -- interference -------------------------------------------------------------

def run_hom(scenario, seed, jobs):
    r = scenario.run_section('hom')
    emitter = scenario.emitter
    f0, lifetime = emitter.zpl_frequency, emitter.lifetime
    s1 = SinglePhotonSource(f0, r.linewidths[0], lifetime)
    s2 = SinglePhotonSource(f0 - r.detuning, r.linewidths[1], lifetime)
    template = DetectorModel(timing_jitter_sigma=r.timing_jitter, dark_rate=r.dark_rate,
                             coincidence_bin=r.coincidence_bin)
    grid = TimeGrid(0.0, r.tau_max, r.n_points)

    ideal = SinglePhotonSource(f0, emitter.transform_limit, lifetime)
    ideal_par, ideal_perp = hom_pair(ideal, ideal, DetectorModel(), [0.0])

    fit = fit_hom_imperfections(s1, s2, r.targets, r.uncertainties, detector=template, max_jitter=r.max_jitter)
    detector = replace(template, timing_jitter_sigma=fit.timing_jitter_sigma)
    a = replace(s1, background_fraction=fit.background_fraction)
    b = replace(s2, background_fraction=fit.background_fraction)
    par, perp = hom_pair(a, b, detector, grid)
    raw_par, raw_perp = hom_pair(s1, s2, DetectorModel(), grid)
    taus = grid.times()

    summary = {
        'ideal_parallel_zero': float(ideal_par[0]),
        'ideal_perp_zero': float(ideal_perp[0]),
        'fitted_parallel_zero': fit.g2_parallel_zero,
        'fitted_perp_zero': fit.g2_perp_zero,
        'visibility': fit.visibility,
        'timing_jitter_ns': fit.timing_jitter_sigma / NS,
        'background_fraction': fit.background_fraction,
        'fit_on_bound': fit.on_bound,
        'fit_pinned': list(fit.pinned),
        'beat_period_ns': quantum_beat_period(taus, raw_par, raw_perp) / NS,
        'expected_beat_period_ns': 1.0 / abs(r.detuning) / NS if r.detuning else None,
    }
    table = frame({
        'tau_ns': taus / NS,
        'g2_parallel': par,
        'g2_perp': perp,
        'g2_parallel_unresolved': raw_par,
        'g2_perp_unresolved': raw_perp,
    })
    return {'hom': table}, summary


def run_raman(scenario, seed, jobs):
    r = scenario.run_section('raman')
    emitter = scenario.emitter
    f0 = emitter.zpl_frequency
    base = RamanConfig(0.0, f0, drive_rabi=r.drive_rabi)
    detunings = np.linspace(r.detuning_min, r.detuning_max, r.n_points)
    sweep = raman_tuning_sweep(base, detunings, emitter.gamma_total, r.width_floor)
    positions = np.array([lines[1].frequency for lines in sweep])
    errors = np.abs(positions - (f0 - detunings))

    profile_lines = raman_spectrum(replace(base, drive_detuning=r.profile_detuning), emitter.gamma_total, r.width_floor)
    nu = f0 + np.linspace(-r.profile_span / 2, r.profile_span / 2, r.profile_points)
    summary = {
        'max_position_error_Hz': float(errors.max()),
        'tuning_range_GHz': float(positions.max() - positions.min()) / GHZ,
        'profile_drive_detuning_GHz': r.profile_detuning / GHZ,
        'profile_raman_width_MHz': profile_lines[1].width / MHZ,
        'profile_raman_weight': profile_lines[1].weight,
    }
    tables = {
        'raman_sweep': frame({
            'drive_detuning_GHz': detunings / GHZ,
            'raman_offset_GHz': (positions - f0) / GHZ,
            'raman_width_MHz': [lines[1].width / MHZ for lines in sweep],
            'raman_weight': [lines[1].weight for lines in sweep],
            'spontaneous_weight': [lines[0].weight for lines in sweep],
        }),
        'raman_profile': frame({
            'frequency_offset_GHz': (nu - f0) / GHZ,
            'intensity': line_profile(profile_lines, nu),
        }),
    }
    return tables, summary


def _waveguide(scenario, raman_detuning, transition_offset, couplings=(1.0, 1.0), relative_phase=0.0):
    """Two transform-limited emitters whose Raman lines are tuned onto one frequency."""
    emitter = scenario.emitter
    f0, lifetime = emitter.zpl_frequency, emitter.lifetime
    sources = (SinglePhotonSource(f0, emitter.transform_limit, lifetime),
               SinglePhotonSource(f0 + transition_offset, emitter.transform_limit, lifetime))
    raman = (RamanConfig(raman_detuning, f0),
             RamanConfig(raman_detuning + transition_offset, f0 + transition_offset))
    return TwoEmitterWaveguide(sources, raman, relative_phase=relative_phase, couplings=couplings)


def run_waveguide(scenario, seed, jobs):
    r = scenario.run_section('waveguide')
    system = _waveguide(scenario, r.raman_detuning, r.transition_offset)
    detector = DetectorModel(timing_jitter_sigma=r.timing_jitter)
    cal = calibrate_waveguide(system, detector, r.single_target, r.dist_target)
    calibrated = replace(system, sources=tuple(replace(s, background_fraction=cal.background_fraction)
                                               for s in system.sources))
    grid = TimeGrid(0.0, r.tau_max, r.n_points)
    summary = {
        'single_g2_zero': cal.single_g2_zero,
        'tuned_g2_zero': cal.tuned_g2_zero,
        'untuned_g2_zero': cal.untuned_g2_zero,
        'background_fraction': cal.background_fraction,
        'rho_squared': cal.rho_squared,
        'untuned_separation_GHz': cal.separation / GHZ,
    }
    table = frame({
        'tau_ns': grid.times() / NS,
        'g2_tuned': waveguide_g2(calibrated, detector, grid),
        'g2_untuned': waveguide_g2(detune_pair(calibrated, cal.separation), detector, grid),
        'g2_single': waveguide_g2(calibrated, detector, grid, active=(True, False)),
    })
    return {'waveguide': table}, summary


def run_superradiance(scenario, seed, jobs):
    r = scenario.run_section('superradiance')
    ratio = superradiant_rate(_waveguide(scenario, 0.0, 0.0, r.couplings, r.relative_phase))
    second = np.linspace(0.0, 1.0, r.scan_points)
    scan = np.array([superradiant_rate(_waveguide(scenario, 0.0, 0.0, (1.0, float(c)), r.relative_phase))
                     for c in second])
    summary = {
        'ratio': ratio,
        'couplings': list(r.couplings),
        'relative_phase_rad': r.relative_phase,
        'scan_ratio_min': float(scan.min()),
        'scan_ratio_max': float(scan.max()),
    }
    table = frame({
        'coupling_ratio': second,
        'enhancement': scan,
        'closed_form': (1.0 + second) ** 2 / (1.0 + second ** 2),
    })
    return {'superradiance_scan': table}, summary


# -- spin-memory --------------------------------------------------------------

def run_spin(scenario, seed, jobs):
    r = scenario.run_section('spin')
    tables = {}
    summary = {'noise_model': scenario.noise.model}

    # free induction decay
    ramsey_noise = noise_preset(r.ramsey_noise)
    ramsey = ramsey_decay(ramsey_noise, r.ramsey_detuning, TimeGrid(0.0, r.ramsey_max, r.ramsey_points))
    fringe = fit_ramsey_fringe(ramsey.taus, ramsey.fringe)
    expected = np.sqrt(2) / ramsey_noise.sigma if isinstance(ramsey_noise, QuasiStatic) else None
    summary.update({
        't2star_s': ramsey.t2,
        't2star_expected_s': expected,
        't2star_rel_error': abs(ramsey.t2 - expected) / expected if expected else None,
        'fringe_frequency_Hz': fringe.frequency,
        'fringe_t2star_s': fringe.t2star,
    })
    tables['ramsey'] = frame({'tau_us': ramsey.taus / 1e-6, 'envelope': ramsey.coherence, 'fringe': ramsey.fringe})

    t1 = spin_t1_floor(r.temperature) if r.with_t1 else None
    qubit = replace(scenario.qubit, t1_floor=t1) if t1 is not None else scenario.qubit
    rabi_grid = TimeGrid(0.0, r.rabi_max, r.rabi_points)
    tables['rabi'] = frame({
        'tau_ns': rabi_grid.times() / NS,
        'p_down': rabi_trajectory(qubit, r.rabi_detuning, rabi_grid, with_t1=r.with_t1),
    })

    # dynamical decoupling with the scenario noise
    family = cpmg_family(scenario.noise, r.ns, r.n_points, t1=t1)
    scaling = t2_scaling_fit([(n, res.t2) for n, res in family])
    t2_by_n = {n: res.t2 for n, res in family}
    summary.update({
        'beta': scaling.beta,
        'beta_stderr': scaling.stderr,
        'beta_ci_low': scaling.ci_low,
        'beta_ci_high': scaling.ci_high,
        'curvature_p': scaling.curvature_p,
        'curved': scaling.curved,
        't2_n32_ms': t2_by_n[32] / 1e-3 if 32 in t2_by_n else None,
        't1_floor_s': t1,
    })
    tables['cpmg'] = _long_coherence(family)
    tables['t2_scaling'] = frame({
        'n_pulses': [n for n, _ in family],
        't2_ms': [res.t2 / 1e-3 for _, res in family],
        'stretch': [res.stretch for _, res in family],
    })

    # oracle: filter integral against sampled noise trajectories
    oracle = noise_preset(r.oracle_noise)
    oracle_family = cpmg_family(oracle, r.ns, r.n_points)
    summary['oracle_beta'] = t2_scaling_fit([(n, res.t2) for n, res in oracle_family]).beta
    rows = {'n_pulses': [], 'tau_ms': [], 'coherence_filter': [], 'coherence_mc': [], 'stderr': []}
    worst = 0.0
    for k, n in enumerate(r.mc_ns):
        grid = adaptive_grid(oracle, n, r.mc_points)
        analytic = cpmg_coherence(oracle, n, grid)
        sampled = monte_carlo_coherence(oracle, PulseSequence('cpmg', grid.stop, n), r.mc_trajectories,
                                        seed=seed + k, taugrid=grid, jobs=jobs)
        worst = max(worst, abs(sampled.t2 - analytic.t2) / analytic.t2)
        rows['n_pulses'].extend([n] * grid.n_points)
        rows['tau_ms'].extend(grid.times() / 1e-3)
        rows['coherence_filter'].extend(analytic.coherence)
        rows['coherence_mc'].extend(sampled.coherence)
        rows['stderr'].extend(sampled.stderr)
        logger.info('Monte-Carlo N=%s: T2 %.4g s vs filter %.4g s', n, sampled.t2, analytic.t2)
    summary['mc_t2_max_rel_error'] = worst if r.mc_ns else None
    tables['monte_carlo'] = frame(rows)
    return tables, summary


def _long_coherence(family):
    rows = {'n_pulses': [], 'tau_ms': [], 'coherence': []}
    for n, res in family:
        rows['n_pulses'].extend([n] * res.taus.size)
        rows['tau_ms'].extend(res.taus / 1e-3)
        rows['coherence'].extend(res.coherence)
    return frame(rows)


HANDLERS = {
    'relaxation': run_relaxation,
    'thermal': run_thermal,
    'spectrum': run_spectrum,
    'extinction': run_extinction,
    'saturation': run_saturation,
    'g2': run_g2,
    'hom': run_hom,
    'raman': run_raman,
    'waveguide': run_waveguide,
    'superradiance': run_superradiance,
    'spin': run_spin,
    'ensemble': run_ensemble,
}


# -- orchestration ------------------------------------------------------------

@dataclass
class RunResult:
    out_dir: Path
    manifests: list = field(default_factory=list)
    summaries: list = field(default_factory=list)


def _point_task(task):
    subcommand, scenario, seed, jobs = task
    return HANDLERS[subcommand](scenario, seed, jobs)


def default_out_dir(scenario, subcommand):
    if scenario.output:
        return Path(scenario.output)
    return Path(output_dir_setting()) / f'{scenario.name}-{subcommand}'


def run(subcommand, scenario, out_dir=None, seed=None, jobs=None):
    """Run one subcommand over every sweep point and write its artifacts.

    Parameters:
    - subcommand: key of HANDLERS
    - scenario: resolved Scenario
    - out_dir: run directory; sweep points go to point_NNN below it
    - seed: overrides the scenario seed
    - jobs: worker processes, defaults to SIVSIM_JOBS
    """
    if subcommand not in HANDLERS:
        raise ConfigError(f'unknown subcommand {subcommand!r}')
    out_dir = Path(out_dir) if out_dir is not None else default_out_dir(scenario, subcommand)
    seed = scenario.seed if seed is None else int(seed)
    jobs = jobs_setting() if jobs is None else max(1, int(jobs))
    points = scenario.sweep_points()
    swept = bool(scenario.sweep)

    scenarios, seeds = [], []
    try:
        for i, assignments in enumerate(points):
            point_seed = sweep_seed(seed, i) if swept else seed
            scenarios.append(replace(scenario.with_overrides(assignments), seed=point_seed))
            seeds.append(point_seed)
        # nested pools are not allowed, so parallelism goes to the outer level when sweeping
        inner = 1 if swept and jobs > 1 else jobs
        tasks = [(subcommand, s, sd, inner) for s, sd in zip(scenarios, seeds)]
        logger.info('Running %s for %s (%s point%s, seed %s)', subcommand, scenario.name, len(tasks),
                    '' if len(tasks) == 1 else 's', seed)
        results = map_tasks(_point_task, tasks, jobs=jobs if swept else 1)
    except SivsimError as e:
        e.with_context(scenario=scenario.name, subcommand=subcommand)
        write_error(out_dir, e)
        raise

    result = RunResult(out_dir=out_dir)
    index = []
    for i, ((tables, summary), s, sd) in enumerate(zip(results, scenarios, seeds)):
        point_dir = out_dir / f'point_{i:03d}' if swept else out_dir
        summary = dict(summary, scenario=s.name)
        result.manifests.append(write_run(point_dir, subcommand, s.to_dict(), sd, tables, summary))
        result.summaries.append(summary)
        if swept:
            index.append(dict({'point': i, 'seed': sd, 'directory': point_dir.name}, **dict(points[i])))
    if swept:
        write_table(frame({k: [row[k] for row in index] for k in index[0]}), out_dir, 'sweep')
        write_json_atomic(out_dir / 'sweep.json', {'subcommand': subcommand, 'scenario': scenario.name,
                                                   'points': index})
    logger.info('Finished %s: artifacts in %s', subcommand, out_dir)
    return result


REPRODUCE_TARGETS = tuple(TARGETS)


def load_bundled(name):
    """Parse a scenario shipped in sivsim/scenarios."""
    path = resources.files('sivsim').joinpath('scenarios', f'{name}.yaml')
    if not path.is_file():
        raise ConfigError(f'no bundled scenario named {name!r}')
    return parse_scenario_text(path.read_text(encoding='utf-8'), source_name=f'{name}.yaml')


def reproduce(out_root=None, targets=None, jobs=None):
    """Run bundled scenarios into out_root/<target> and compare them against the acceptance targets.

    A failing target leaves its error.json behind and the remaining targets
    still run. Returns the AcceptanceReport; acceptance.csv and
    acceptance.json are written next to the target directories.
    """
    out_root = Path(out_root) if out_root is not None else Path(output_dir_setting()) / 'reproduce'
    targets = list(targets) if targets else list(REPRODUCE_TARGETS)
    for target in targets:
        if target not in TARGETS:
            raise ConfigError(f'unknown reproduce target {target!r}', known=', '.join(REPRODUCE_TARGETS))
    for target in targets:
        target_dir = out_root / target
        try:
            run(TARGETS[target]['subcommand'], load_bundled(target), out_dir=target_dir, jobs=jobs)
        except SivsimError as e:
            write_error(target_dir, e)
            logger.error('Target %s failed: %s', target, e.message)
    report = compare_acceptance(out_root)
    write_table(report.to_frame(), out_root, 'acceptance')
    write_json_atomic(out_root / 'acceptance.json', {'passed': report.passed, 'rows': report.rows})
    return report

import numpy as np
import pytest
from scipy.integrate import trapezoid

from sivsim.cavity_qed import (
    NANOCAVITY,
    NANOCAVITY_G,
    CavityParams,
    CoupledSystem,
    DriveParams,
    Port,
    cooperativity,
    extinction,
    find_dips,
    fit_extinction_efficiency,
    g2_zero,
    half_saturation_flux,
    photon_statistics,
    purcell_lifetime,
    saturation_curve,
    transmission_linear,
    transmission_spectrum,
    weak_drive_amplitude,
    with_emitters,
)
from sivsim.errors import ParameterError
from sivsim.qdyn import TimeGrid
from sivsim.siv_model import EMITTER_PRESETS

NANO = EMITTER_PRESETS['siv-nano']
F0 = NANOCAVITY.resonance


def _single(g=NANOCAVITY_G, detuning=0.0, cavity=NANOCAVITY):
    return with_emitters(cavity, [(detuning, g)], NANO)


def test_cooperativity_values():
    assert cooperativity(2.1e9, 57e9, 0.30e9) == pytest.approx(1.0316, abs=1e-3)
    assert cooperativity(0.0, 57e9, 0.30e9) == 0.0
    assert cooperativity(4.2e9, 57e9, 0.30e9) == pytest.approx(4 * cooperativity(2.1e9, 57e9, 0.30e9))
    assert _single().cooperativities()[0] == pytest.approx(1.0316, abs=1e-3)


def test_cavity_params():
    assert NANOCAVITY.kappa_in == NANOCAVITY.kappa_out == pytest.approx(28.5e9)
    assert NANOCAVITY.quality_factor == pytest.approx(7135, rel=1e-3)
    with pytest.raises(ParameterError):
        CavityParams(F0, 57e9, kappa_in=40e9, kappa_out=40e9)


def test_bare_cavity_lorentzian():
    kappa = NANOCAVITY.kappa
    nu = F0 + np.linspace(-200 * kappa, 200 * kappa, 40001)
    t = transmission_linear(CoupledSystem(NANOCAVITY), nu)
    assert t.max() == pytest.approx(1.0)
    area = trapezoid(t, nu)
    assert area == pytest.approx(np.pi * kappa / 2, rel=0.01)
    half = transmission_linear(CoupledSystem(NANOCAVITY), [F0 + kappa / 2, F0 - kappa / 2])
    assert np.allclose(half, 0.5)
    assert np.all((t >= 0) & (t <= 1))


def test_resonant_emitter_dip_matches_cooperativity():
    system = _single()
    c = system.cooperativities()[0]
    t0 = transmission_spectrum(system, [F0])[0]
    assert t0 == pytest.approx(1 / (1 + c) ** 2, rel=1e-9)
    assert t0 == pytest.approx(0.243, abs=1e-3)


def test_full_solver_matches_linear_response():
    system = _single()
    probes = F0 + np.array([0.0, 0.15e9, -0.4e9, 20e9])
    linear = transmission_spectrum(system, probes, weak_drive=True)
    full = transmission_spectrum(system, probes, weak_drive=False)
    assert np.allclose(full, linear, atol=1e-4)


def test_full_solver_limited_to_two_emitters():
    system = with_emitters(NANOCAVITY, [(-10e9, 1e9), (0.0, 1e9), (10e9, 1e9)], NANO)
    with pytest.raises(ParameterError):
        transmission_spectrum(system, [F0], weak_drive=False)


def test_three_detuned_emitters_give_three_dips():
    couplings = [(-20e9, 1.6e9), (0.0, 2.1e9), (40e9, 1.0e9)]
    system = with_emitters(NANOCAVITY, couplings, NANO)
    nu = F0 + np.arange(-100e9, 100e9, 0.01e9)
    t = transmission_spectrum(system, nu)
    bare = transmission_linear(CoupledSystem(NANOCAVITY), nu)
    dips = find_dips(nu, t, baseline=bare)
    assert len(dips) == 3
    positions = sorted(d.frequency - F0 for d in dips)
    assert np.allclose(positions, [d for d, _ in couplings], atol=0.15e9)
    by_position = sorted(dips, key=lambda d: d.frequency)
    coop = [cooperativity(g, NANOCAVITY.kappa, NANO.gamma_total) for _, g in couplings]
    order_c = np.argsort(coop)
    depths = np.array([d.depth for d in by_position])
    assert np.all(np.diff(depths[order_c]) > 0)


def test_extinction_limits_and_fit():
    system = _single()
    c = system.cooperativities()[0]
    eta = fit_extinction_efficiency(c, 0.38)
    assert eta == pytest.approx(0.50, abs=0.01)
    assert extinction(system, eta) == pytest.approx(0.38, abs=1e-9)
    assert extinction(_single(g=200e9), 1.0) == pytest.approx(1.0, abs=1e-4)
    assert extinction(_single(g=1.0), 1.0) == pytest.approx(0.0, abs=1e-9)
    values = [extinction(_single(g=g), 0.5) for g in np.linspace(0.5e9, 5e9, 10)]
    assert np.all(np.diff(values) > 0)


def test_extinction_needs_one_emitter():
    with pytest.raises(ParameterError):
        extinction(CoupledSystem(NANOCAVITY), 0.5)


def test_purcell_lifetime():
    assert purcell_lifetime(_single(g=1.0)) == pytest.approx(1.73e-9, rel=1e-6)
    tau = purcell_lifetime(_single())
    assert 300e-12 / 1.5 < tau < 300e-12 * 1.5
    wide = CavityParams(F0, 1e20)
    assert purcell_lifetime(_single(cavity=wide)) == pytest.approx(1.73e-9, rel=1e-6)


def test_saturation_curve():
    system = _single()
    c = system.cooperativities()[0]
    weak_depth = 1 - 1 / (1 + c) ** 2
    amplitudes = np.geomspace(weak_drive_amplitude(NANOCAVITY), 18e9, 14)
    curve = saturation_curve(system, amplitudes)
    assert curve[0].dip_depth == pytest.approx(weak_depth, abs=1e-3)
    assert curve[-1].dip_depth < 0.05 * weak_depth
    depths = [p.dip_depth for p in curve]
    assert np.all(np.diff(depths) < 0)
    widths = [p.linewidth for p in curve]
    assert np.all(np.diff(widths) >= 0)

    flux = half_saturation_flux(curve)
    assert 0.5 / 300e-12 < flux < 2.0 / 300e-12


def test_empty_cavity_transmitted_light_is_coherent():
    system = CoupledSystem(NANOCAVITY)
    drive = DriveParams(F0, 0.5 * NANOCAVITY.kappa * 1e-2)
    g2 = photon_statistics(system, drive, Port.TRANSMITTED, TimeGrid(0.0, 1e-9, 21))
    assert np.allclose(g2, 1.0, atol=1e-6)


def test_photon_statistics_at_unit_cooperativity():
    system = _single()
    drive = DriveParams(F0, weak_drive_amplitude(NANOCAVITY, photons=1e-4))
    grid = TimeGrid(0.0, 12e-9, 241)
    transmitted = photon_statistics(system, drive, 'transmitted', grid)
    scattered = photon_statistics(system, drive, 'scattered', grid)
    assert transmitted[0] > 1.5
    assert scattered[0] < 0.5
    assert transmitted[-1] == pytest.approx(1.0, abs=2e-3)
    assert scattered[-1] == pytest.approx(1.0, abs=2e-3)


@pytest.mark.parametrize('c', [0.2, 0.5, 1.0, 2.0, 5.0])
def test_port_statistics_across_cooperativity(c):
    g = np.sqrt(c * NANOCAVITY.kappa * NANO.gamma_total / 4)
    system = _single(g=g)
    drive = DriveParams(F0, weak_drive_amplitude(NANOCAVITY, photons=1e-4))
    assert g2_zero(system, drive, Port.TRANSMITTED) >= 1.0
    assert g2_zero(system, drive, Port.SCATTERED) <= 1.0

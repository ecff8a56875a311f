"""Emitter-cavity input/output: transmission, cooperativity, saturation and
photon statistics of the transmitted and scattered fields.

Records carry ordinary frequencies (Hz). The full model is built in the frame
rotating at the probe frequency with all rates converted to rad/s:

    H = -dc a^dag a - sum_j dj s_j^dag s_j + sum_j g_j (a^dag s_j + a s_j^dag) + i eps (a^dag - a)

with collapse channels a (kappa), s_j (gamma_rad) and s_j^dag s_j (gamma_d).
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .errors import FitError, ParameterError
from .qdyn import (
    HilbertSpace,
    LindbladModel,
    Operator,
    converge_fock_cutoff,
    destroy,
    embed,
    g2_at_zero,
    g2_function,
    sigma_minus,
)
from .siv_model import EmitterOpticalParams

logger = logging.getLogger('sivsim')

TWO_PI = 2 * np.pi
# bare-cavity photon number used for "weak drive" full-model solves
WEAK_DRIVE_PHOTONS = 1e-8
MAX_FULL_EMITTERS = 2


class Port(str, Enum):
    TRANSMITTED = 'transmitted'
    SCATTERED = 'scattered'


@dataclass(frozen=True)
class CavityParams:
    resonance: float
    kappa: float
    kappa_in: float = None
    kappa_out: float = None

    def __post_init__(self):
        if self.kappa_in is None:
            object.__setattr__(self, 'kappa_in', self.kappa / 2)
        if self.kappa_out is None:
            object.__setattr__(self, 'kappa_out', self.kappa / 2)
        if min(self.resonance, self.kappa, self.kappa_in, self.kappa_out) <= 0:
            raise ParameterError('cavity resonance and all decay rates must be positive')
        if self.kappa_in + self.kappa_out > self.kappa * (1 + 1e-12):
            raise ParameterError(
                f'port rates {self.kappa_in} + {self.kappa_out} exceed the total decay rate {self.kappa}')

    @property
    def quality_factor(self):
        return self.resonance / self.kappa

    @property
    def peak_transmission(self):
        return 4 * self.kappa_in * self.kappa_out / self.kappa ** 2


@dataclass(frozen=True)
class CoupledSystem:
    cavity: CavityParams
    emitters: tuple = ()

    def __post_init__(self):
        emitters = tuple((e, float(g)) for e, g in self.emitters)
        for e, g in emitters:
            if not isinstance(e, EmitterOpticalParams):
                raise ParameterError('emitters must be (EmitterOpticalParams, g) pairs')
            if not g > 0:
                raise ParameterError(f'coupling g must be positive, got {g}')
        object.__setattr__(self, 'emitters', emitters)

    def detunings(self):
        """Emitter frequencies relative to the cavity resonance, Hz."""
        return np.array([e.zpl_frequency - self.cavity.resonance for e, _ in self.emitters])

    def cooperativities(self):
        return [cooperativity(g, self.cavity.kappa, e.gamma_total) for e, g in self.emitters]


@dataclass(frozen=True)
class DriveParams:
    frequency: float
    amplitude: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ParameterError(f'drive amplitude must be non-negative, got {self.amplitude}')


def cooperativity(g, kappa, gamma):
    """C = 4 g^2 / (kappa gamma)."""
    if g < 0 or kappa <= 0 or gamma <= 0:
        raise ParameterError(f'cooperativity needs g >= 0 and positive kappa, gamma (got {g}, {kappa}, {gamma})')
    return 4.0 * g ** 2 / (kappa * gamma)


def with_emitters(cavity, couplings, emitter):
    """Build a CoupledSystem from (detuning_Hz, g_Hz) pairs sharing one emitter template."""
    emitters = []
    for detuning, g in couplings:
        params = EmitterOpticalParams(
            zpl_frequency=cavity.resonance + detuning, lifetime=emitter.lifetime, gamma_rad=emitter.gamma_rad,
            gamma_dephasing=emitter.gamma_dephasing, zpl_branching=emitter.zpl_branching,
            inhomogeneous_width=emitter.inhomogeneous_width)
        emitters.append((params, g))
    return CoupledSystem(cavity, tuple(emitters))


# -- linear response ---------------------------------------------------------

def transmission_linear(system, frequencies):
    """Weak-probe transmission relative to the bare-cavity peak.

    Emitter susceptibilities add in the cavity self-energy, so any number of
    emitters is handled in closed form.
    """
    nu = np.asarray(frequencies, dtype=float)
    half_kappa = system.cavity.kappa / 2
    denom = half_kappa - 1j * (nu - system.cavity.resonance)
    for emitter, g in system.emitters:
        denom = denom + g ** 2 / (emitter.gamma_total / 2 - 1j * (nu - emitter.zpl_frequency))
    return np.abs(half_kappa / denom) ** 2


# -- full model --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CavityOperators:
    space: HilbertSpace
    a: Operator
    sigmas: tuple = field(default_factory=tuple)


def _operators(cutoff, n_emitters):
    space = HilbertSpace((cutoff,) + (2,) * n_emitters)
    a = embed(destroy(cutoff), 0, space)
    sigmas = tuple(embed(sigma_minus(), k + 1, space) for k in range(n_emitters))
    return CavityOperators(space, a, sigmas)


def build_model(system, probe_frequency, amplitude, cutoff):
    """LindbladModel in the probe frame plus its operators."""
    n = len(system.emitters)
    if n > MAX_FULL_EMITTERS:
        raise ParameterError(f'the full model supports at most {MAX_FULL_EMITTERS} emitters, got {n}')
    ops = _operators(cutoff, n)
    a, ad = ops.a, ops.a.dag()
    dc = TWO_PI * (probe_frequency - system.cavity.resonance)
    eps = TWO_PI * amplitude

    h = -dc * (ad @ a) + 1j * eps * (ad - a)
    channels = [(a, TWO_PI * system.cavity.kappa)]
    for (emitter, g), s in zip(system.emitters, ops.sigmas):
        sd = s.dag()
        dj = TWO_PI * (probe_frequency - emitter.zpl_frequency)
        h = h - dj * (sd @ s) + TWO_PI * g * (ad @ s + a @ sd)
        channels.append((s, TWO_PI * emitter.gamma_rad))
        if emitter.gamma_dephasing > 0:
            channels.append((sd @ s, TWO_PI * emitter.gamma_dephasing))
    return LindbladModel(h, channels), ops


@dataclass(frozen=True, eq=False)
class SteadySolution:
    solution: object
    operators: CavityOperators
    amplitude: float

    @property
    def state(self):
        return self.solution.state

    @property
    def model(self):
        return self.solution.model

    @property
    def photon_number(self):
        return self.solution.photon_number

    def excited_population(self, index=0):
        s = self.operators.sigmas[index]
        return self.state.expect(s.dag() @ s).real


def solve_steady(system, probe_frequency, amplitude):
    """Steady state with an adaptively converged Fock cutoff."""
    last_ops = {}

    def build(cutoff):
        model, ops = build_model(system, probe_frequency, amplitude, cutoff)
        last_ops[cutoff] = ops
        return model, ops.a.dag() @ ops.a

    solution = converge_fock_cutoff(build)
    return SteadySolution(solution, last_ops[solution.cutoff], amplitude)


def weak_drive_amplitude(cavity, photons=WEAK_DRIVE_PHOTONS):
    """Drive amplitude (Hz) that puts ``photons`` into the bare cavity on resonance."""
    return 0.5 * cavity.kappa * np.sqrt(photons)


def _normalized_transmission(steady, cavity, total=False):
    """Transmitted power relative to the bare-cavity peak.

    The default counts the elastic (coherent) component |<a>|^2, which is
    what the linear-response formula describes; ``total=True`` adds the
    inelastic light scattered into the mode by the emitter's pure dephasing
    and saturation.
    """
    bare = (2 * steady.amplitude / cavity.kappa) ** 2
    if total:
        return steady.photon_number / bare
    return abs(steady.state.expect(steady.operators.a)) ** 2 / bare


def transmission_spectrum(system, probe_frequencies, weak_drive=True, amplitude=None):
    """Transmission in [0, 1] relative to the bare-cavity peak at each probe frequency.

    Parameters:
    - system: CoupledSystem
    - probe_frequencies: absolute probe frequencies, Hz
    - weak_drive: linear response when True, full steady-state solve otherwise
    - amplitude: drive amplitude (Hz) for the full solve; defaults to the weak-drive amplitude
    """
    nu = np.asarray(probe_frequencies, dtype=float)
    if weak_drive:
        return transmission_linear(system, nu)
    amp = weak_drive_amplitude(system.cavity) if amplitude is None else float(amplitude)
    if amp <= 0:
        raise ParameterError('full-model transmission needs a positive drive amplitude')
    out = np.empty(nu.size)
    for k, f in enumerate(nu):
        out[k] = _normalized_transmission(solve_steady(system, f, amp), system.cavity)
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class Dip:
    frequency: float
    transmission: float
    depth: float
    width: float


def find_dips(frequencies, transmission, baseline=None, min_depth=1e-3):
    """Local transmission minima with fractional depth and half-depth width.

    ``baseline`` (same shape as ``transmission``) is the reference the depth
    is measured against, typically the bare-cavity spectrum; without it the
    local prominence is used.
    """
    nu = np.asarray(frequencies, dtype=float)
    t = np.asarray(transmission, dtype=float)
    peaks, props = find_peaks(-t, prominence=min_depth * max(t.max(), 1e-300))
    if peaks.size == 0:
        return []
    widths = peak_widths(-t, peaks, rel_height=0.5, prominence_data=(
        props['prominences'], props['left_bases'], props['right_bases']))[0]
    step = np.gradient(nu)
    dips = []
    for k, p in enumerate(peaks):
        if baseline is not None:
            depth = 1.0 - t[p] / np.asarray(baseline, dtype=float)[p]
        else:
            depth = props['prominences'][k] / (t[p] + props['prominences'][k])
        dips.append(Dip(frequency=float(nu[p]), transmission=float(t[p]), depth=float(depth),
                        width=float(widths[k] * step[p])))
    return dips


# -- extinction and saturation -----------------------------------------------

def _single_emitter(system):
    if len(system.emitters) != 1:
        raise ParameterError(f'this operation needs exactly one emitter, got {len(system.emitters)}')
    return system.emitters[0]


def extinction(system, fit_efficiency=1.0):
    """Delta T / T = efficiency * (1 - 1/(1+C)^2) for a single resonant emitter."""
    if not 0.0 <= fit_efficiency <= 1.0:
        raise ParameterError(f'fit_efficiency must lie in [0, 1], got {fit_efficiency}')
    emitter, g = _single_emitter(system)
    c = cooperativity(g, system.cavity.kappa, emitter.gamma_total)
    return fit_efficiency * (1.0 - 1.0 / (1.0 + c) ** 2)


def fit_extinction_efficiency(c, target):
    """Efficiency that maps cooperativity ``c`` onto a measured extinction ``target``."""
    ideal = 1.0 - 1.0 / (1.0 + c) ** 2
    if ideal <= 0:
        raise FitError('zero cooperativity cannot produce any extinction')
    eta = target / ideal
    if not 0.0 <= eta <= 1.0:
        raise FitError(f'extinction {target} is out of reach at C={c:.3g} (efficiency {eta:.3g})',
                       cooperativity=c, target=target)
    return eta


def purcell_lifetime(system):
    """Bad-cavity lifetime 1/(1/tau + 2*pi*4 g^2/kappa)."""
    emitter, g = _single_emitter(system)
    return 1.0 / (1.0 / emitter.lifetime + TWO_PI * 4 * g ** 2 / system.cavity.kappa)


@dataclass(frozen=True)
class SaturationPoint:
    amplitude: float
    transmission: float
    transmission_total: float
    dip_depth: float
    intracavity_flux: float
    excited_population: float
    linewidth: float


def saturation_curve(system, drive_amplitudes):
    """On-resonance transmission and power-broadened emitter linewidth vs drive.

    The probe sits on the emitter line. The linewidth is the power-broadened
    FWHM (Gamma_P + gamma_d) sqrt(1 + s) / 2 pi with the saturation parameter
    s recovered from the steady-state excited population.
    """
    emitter, _ = _single_emitter(system)
    gamma_p = 1.0 / purcell_lifetime(system)
    gamma_d = TWO_PI * emitter.gamma_dephasing
    probe = emitter.zpl_frequency
    bare = float(transmission_linear(CoupledSystem(system.cavity), [probe])[0])
    points = []
    for amp in drive_amplitudes:
        if amp <= 0:
            raise ParameterError(f'drive amplitudes must be positive, got {amp}')
        steady = solve_steady(system, probe, float(amp))
        t = min(max(_normalized_transmission(steady, system.cavity), 0.0), 1.0)
        p = steady.excited_population()
        s = 2 * p / (1 - 2 * p) if p < 0.5 else np.inf
        points.append(SaturationPoint(
            amplitude=float(amp),
            transmission=t,
            transmission_total=_normalized_transmission(steady, system.cavity, total=True),
            dip_depth=1.0 - t / bare,
            intracavity_flux=TWO_PI * system.cavity.kappa * steady.photon_number,
            excited_population=p,
            linewidth=(gamma_p + gamma_d) / TWO_PI * np.sqrt(1 + s),
        ))
        logger.debug('saturation: amplitude %.3g Hz -> T=%.4f, P_e=%.3g', amp, t, p)
    return points


def half_saturation_flux(curve, reference_depth=None):
    """Intracavity photon flux at which the dip depth halves.

    ``reference_depth`` defaults to the depth at the weakest drive in ``curve``.
    """
    depth = np.array([p.dip_depth for p in curve])
    flux = np.array([p.intracavity_flux for p in curve])
    ref = depth[0] if reference_depth is None else reference_depth
    target = 0.5 * ref
    below = np.nonzero(depth <= target)[0]
    if below.size == 0 or below[0] == 0:
        raise FitError('drive range does not bracket the half-saturation point')
    k = below[0]
    # interpolate in log flux
    x0, x1 = np.log(flux[k - 1]), np.log(flux[k])
    y0, y1 = depth[k - 1], depth[k]
    return float(np.exp(x0 + (target - y0) * (x1 - x0) / (y1 - y0)))


# -- photon statistics -------------------------------------------------------

def _port_operator(steady, port):
    port = Port(port)
    if port is Port.TRANSMITTED:
        return steady.operators.a
    if not steady.operators.sigmas:
        raise ParameterError('the scattered port needs at least one emitter')
    total = steady.operators.sigmas[0]
    for s in steady.operators.sigmas[1:]:
        total = total + s
    return total


def photon_statistics(system, drive, port, taugrid):
    """Normalised g2(tau) of the chosen output port."""
    steady = solve_steady(system, drive.frequency, drive.amplitude)
    op = _port_operator(steady, port)
    return g2_function(steady.model, steady.state, op, taugrid)


def g2_zero(system, drive, port):
    steady = solve_steady(system, drive.frequency, drive.amplitude)
    return g2_at_zero(steady.state, _port_operator(steady, port))


NANOCAVITY = CavityParams(resonance=406.7001e12, kappa=57e9)
NANOCAVITY_G = 2.1e9

CAVITY_PRESETS = {
    'nanocavity': NANOCAVITY,
}

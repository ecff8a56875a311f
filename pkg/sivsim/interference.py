"""Two-photon interference on a beamsplitter, Raman tuning and two-emitter
collective emission into a waveguide.

Sources are stationary (CW excitation). Correlations are built from each
source's first-order coherence exp(-pi * linewidth * |tau|) and its
single-emitter antibunching 1 - exp(-|tau| / lifetime), then passed through
the detector model: Gaussian timing jitter convolved with a coincidence bin,
and an uncorrelated background that pulls g2 towards 1 as
g2_meas = 1 + rho^2 (g2 - 1).
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.stats import norm

from .errors import FitError, ParameterError, PhysicsError
from .qdyn import DensityMatrix, HilbertSpace, LindbladModel, Operator, embed, sigma_minus

logger = logging.getLogger('sivsim')

RAMAN_TUNING_BOUND = 10e9
# coherence floor of the Raman line: control-laser and Fourier-limited width
RAMAN_WIDTH_FLOOR = 1e6
MAX_KERNEL_POINTS = 4001


@dataclass(frozen=True)
class SinglePhotonSource:
    frequency: float
    linewidth: float
    lifetime: float
    polarization_angle: float = 0.0
    emission_rate: float = 1e5
    background_fraction: float = 0.0

    def __post_init__(self):
        if self.lifetime <= 0 or self.emission_rate <= 0:
            raise ParameterError('source lifetime and emission rate must be positive')
        limit = 1.0 / (2 * np.pi * self.lifetime)
        if self.linewidth < limit * (1 - 1e-9):
            raise ParameterError(
                f'linewidth {self.linewidth:.4g} Hz is below the transform limit {limit:.4g} Hz')
        if not 0.0 <= self.background_fraction < 1.0:
            raise ParameterError(f'background_fraction must lie in [0, 1), got {self.background_fraction}')


@dataclass(frozen=True)
class DetectorModel:
    timing_jitter_sigma: float = 0.0
    dark_rate: float = 0.0
    coincidence_bin: float = 0.0

    def __post_init__(self):
        if min(self.timing_jitter_sigma, self.dark_rate, self.coincidence_bin) < 0:
            raise ParameterError('detector parameters must be non-negative')

    @property
    def resolves_nothing(self):
        return self.timing_jitter_sigma == 0 and self.coincidence_bin == 0


@dataclass(frozen=True)
class RamanConfig:
    drive_detuning: float
    transition_frequency: float
    control_phase: float = 0.0
    drive_rabi: float = 1e9

    def __post_init__(self):
        if self.drive_rabi <= 0:
            raise ParameterError('drive_rabi must be positive')
        if abs(self.drive_detuning) > RAMAN_TUNING_BOUND:
            logger.warning('Raman detuning %.3g GHz is outside the +/-%.0f GHz tuning range',
                           self.drive_detuning / 1e9, RAMAN_TUNING_BOUND / 1e9)


def effective_frequency(raman):
    """Frequency of the Raman-scattered photon, transition minus drive detuning."""
    return raman.transition_frequency - raman.drive_detuning


@dataclass(frozen=True)
class TwoEmitterWaveguide:
    sources: tuple
    raman: tuple
    relative_phase: float = 0.0
    tuned: bool = True
    couplings: tuple = (1.0, 1.0)

    def __post_init__(self):
        if len(self.sources) != 2 or len(self.raman) != 2 or len(self.couplings) != 2:
            raise ParameterError('a two-emitter waveguide needs exactly two sources, Raman configs and couplings')
        if min(self.couplings) < 0 or max(self.couplings) == 0:
            raise ParameterError(f'couplings must be non-negative and not both zero, got {self.couplings}')
        object.__setattr__(self, 'sources', tuple(self.sources))
        object.__setattr__(self, 'raman', tuple(self.raman))
        object.__setattr__(self, 'couplings', tuple(float(c) for c in self.couplings))
        if self.tuned:
            gap = abs(self.separation)
            tol = 1e-6 * min(s.linewidth for s in self.sources)
            if gap > tol:
                raise ParameterError(
                    f'tuned emitters must share one Raman frequency, they differ by {gap:.4g} Hz')

    @property
    def separation(self):
        return effective_frequency(self.raman[0]) - effective_frequency(self.raman[1])


# -- detector response -------------------------------------------------------

def _kernel(detector, resolution):
    """Sample offsets and normalised weights of the jitter x bin response."""
    sigma, width = detector.timing_jitter_sigma, detector.coincidence_bin
    if detector.resolves_nothing:
        return np.zeros(1), np.ones(1)
    half = 6.0 * sigma + 0.5 * width
    step = min(x for x in (sigma / 10, width / 20, resolution) if x > 0)
    n = int(min(np.ceil(half / step), (MAX_KERNEL_POINTS - 1) // 2))
    u = np.linspace(-half, half, 2 * n + 1)
    if sigma == 0:
        w = (np.abs(u) <= 0.5 * width).astype(float)
    elif width == 0:
        w = np.exp(-0.5 * (u / sigma) ** 2)
    else:
        w = norm.cdf((u + 0.5 * width) / sigma) - norm.cdf((u - 0.5 * width) / sigma)
    return u, w / w.sum()


def _measure(ideal, taus, detector, resolution, rho):
    """Convolve ``ideal(tau)`` with the detector kernel and add the background floor."""
    u, w = _kernel(detector, resolution)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    smoothed = ideal(taus[:, None] - u[None, :]) @ w
    return 1.0 + rho ** 2 * (smoothed - 1.0)


def _signal_fraction(sources, detector):
    rate = np.mean([s.emission_rate for s in sources])
    background = np.mean([s.background_fraction for s in sources])
    return (1.0 - background) * rate / (rate + detector.dark_rate)


def _resolution(sources, separation=0.0):
    scales = [s.lifetime / 20 for s in sources]
    scales += [1.0 / (20 * np.pi * s.linewidth) for s in sources]
    if separation:
        scales.append(1.0 / (20 * abs(separation)))
    return min(scales)


def _antibunching(tau, lifetime):
    return -np.expm1(-np.abs(tau) / lifetime)


# -- Hong-Ou-Mandel ----------------------------------------------------------

def _hom_ideal(s1, s2):
    visibility = np.cos(s1.polarization_angle - s2.polarization_angle) ** 2
    decay = np.pi * (s1.linewidth + s2.linewidth)
    delta = s1.frequency - s2.frequency

    def ideal(tau):
        self_terms = 0.25 * (_antibunching(tau, s1.lifetime) + _antibunching(tau, s2.lifetime))
        beat = visibility * np.exp(-decay * np.abs(tau)) * np.cos(2 * np.pi * delta * tau)
        return self_terms + 0.5 * (1.0 - beat)

    return ideal


def hom_g2(s1, s2, detector, taugrid):
    """Coincidence g2(tau) between the two outputs of a 50:50 beamsplitter.

    Equal detected intensities are assumed. The two-photon interference
    term is weighted by the polarization overlap cos^2(angle difference).
    """
    taus = taugrid.times() if hasattr(taugrid, 'times') else np.asarray(taugrid, dtype=float)
    rho = _signal_fraction((s1, s2), detector)
    return _measure(_hom_ideal(s1, s2), taus, detector,
                    _resolution((s1, s2), s1.frequency - s2.frequency), rho)


def hom_pair(s1, s2, detector, taugrid):
    """(parallel, perpendicular) curves with ``s2`` re-oriented relative to ``s1``."""
    par = replace(s2, polarization_angle=s1.polarization_angle)
    perp = replace(s2, polarization_angle=s1.polarization_angle + np.pi / 2)
    return hom_g2(s1, par, detector, taugrid), hom_g2(s1, perp, detector, taugrid)


def hom_visibility(g2_parallel, g2_perp):
    """eta = 1 - g2_par(0) / g2_perp(0); arrays are read at their first (tau = 0) sample."""
    par = float(np.atleast_1d(g2_parallel)[0])
    perp = float(np.atleast_1d(g2_perp)[0])
    if np.size(g2_parallel) != np.size(g2_perp):
        raise ParameterError('parallel and perpendicular curves must share one tau grid')
    if perp == 0:
        raise PhysicsError('visibility is undefined when g2_perp(0) = 0')
    return 1.0 - par / perp


@dataclass(frozen=True)
class HomFit:
    timing_jitter_sigma: float
    background_fraction: float
    g2_parallel_zero: float
    g2_perp_zero: float
    visibility: float
    cost: float
    on_bound: bool
    pinned: tuple = ()


def fit_hom_imperfections(s1, s2, targets=(0.26, 0.66), uncertainties=(0.05, 0.08),
                          detector=None, max_jitter=2e-9):
    """Jointly fit timing jitter and background fraction to measured zero-delay values.

    Parameters:
    - s1, s2: sources with the measured linewidths and detuning (background is overwritten)
    - targets: measured (g2_par(0), g2_perp(0))
    - uncertainties: one-sigma errors used as residual weights
    - detector: template for dark rate and bin; its jitter seeds the fitted jitter
    - max_jitter: upper bound of the jitter search, s
    """
    detector = detector or DetectorModel()
    zero = [0.0]

    def model(x):
        jitter, background = x[0] * 1e-9, x[1]
        det = replace(detector, timing_jitter_sigma=jitter)
        a = replace(s1, background_fraction=background)
        b = replace(s2, background_fraction=background)
        par, perp = hom_pair(a, b, det, zero)
        return par[0], perp[0]

    def residuals(x):
        par, perp = model(x)
        return [(par - targets[0]) / uncertainties[0], (perp - targets[1]) / uncertainties[1]]

    upper = [max_jitter * 1e9, 0.99]
    seed = detector.timing_jitter_sigma * 1e9 if detector.timing_jitter_sigma > 0 else 0.1
    x0 = [min(seed, 0.5 * upper[0]), 0.1]
    fit = least_squares(residuals, x0=x0, bounds=([0.0, 0.0], upper), method='trf')
    if not fit.success:
        raise FitError(f'HOM imperfection fit failed: {fit.message}')
    span = np.array(upper)
    at_bound = (fit.x <= 1e-4 * span) | (fit.x >= (1 - 1e-4) * span)
    pinned = tuple(name for name, hit in zip(('timing_jitter_sigma', 'background_fraction'), at_bound) if hit)
    on_bound = bool(pinned)
    if on_bound:
        logger.warning('HOM fit pinned %s to a bound: jitter=%.3g ns, background=%.3g',
                       ', '.join(pinned), fit.x[0], fit.x[1])
    par, perp = model(fit.x)
    return HomFit(
        timing_jitter_sigma=float(fit.x[0] * 1e-9),
        background_fraction=float(fit.x[1]),
        g2_parallel_zero=float(par),
        g2_perp_zero=float(perp),
        visibility=hom_visibility(par, perp),
        cost=float(fit.cost),
        on_bound=on_bound,
        pinned=pinned,
    )


def quantum_beat_period(taus, g2_parallel, g2_perp):
    """Beat period from the zero crossings of g2_perp - g2_par."""
    t = np.asarray(taus, dtype=float)
    d = np.asarray(g2_perp, dtype=float) - np.asarray(g2_parallel, dtype=float)
    idx = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    if idx.size < 2:
        raise FitError('fewer than two zero crossings; no beat is resolved on this grid')
    crossings = t[idx] - d[idx] * (t[idx + 1] - t[idx]) / (d[idx + 1] - d[idx])
    return float(2.0 * np.mean(np.diff(crossings)))


# -- Raman -------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralLine:
    label: str
    frequency: float
    width: float
    weight: float


def raman_spectrum(config, linewidth, floor=RAMAN_WIDTH_FLOOR):
    """Spontaneous (S) and Raman (R) emission lines under an off-resonant drive.

    S sits at the transition with the emitter ``linewidth``; R sits at
    transition - detuning with width linewidth * W + floor, W being the
    excited-state admixture Omega^2 / (Omega^2 + 4 Delta^2), which also sets
    the S weight.
    """
    omega2 = config.drive_rabi ** 2
    admixture = omega2 / (omega2 + 4 * config.drive_detuning ** 2)
    if config.drive_detuning == 0:
        r_width = linewidth
    else:
        r_width = linewidth * admixture + floor
    return (
        SpectralLine('S', config.transition_frequency, linewidth, admixture),
        SpectralLine('R', effective_frequency(config), r_width, 1.0 - admixture),
    )


def raman_tuning_sweep(config, detunings, linewidth, floor=RAMAN_WIDTH_FLOOR):
    return [raman_spectrum(replace(config, drive_detuning=float(d)), linewidth, floor) for d in detunings]


def line_profile(lines, frequencies):
    """Sum of area-normalised Lorentzians for plotting-ready spectra."""
    nu = np.asarray(frequencies, dtype=float)
    out = np.zeros_like(nu)
    for line in lines:
        hw = 0.5 * line.width
        out += line.weight * hw / np.pi / ((nu - line.frequency) ** 2 + hw ** 2)
    return out


# -- waveguide ---------------------------------------------------------------

def _waveguide_ideal(system, active):
    s1, s2 = system.sources
    i1 = s1.emission_rate * system.couplings[0] ** 2 * active[0]
    i2 = s2.emission_rate * system.couplings[1] ** 2 * active[1]
    total = i1 + i2
    if total == 0:
        raise ParameterError('at least one emitter must be active')
    i1, i2 = i1 / total, i2 / total
    decay = np.pi * (s1.linewidth + s2.linewidth)
    delta = system.separation

    def ideal(tau):
        self_terms = i1 ** 2 * _antibunching(tau, s1.lifetime) + i2 ** 2 * _antibunching(tau, s2.lifetime)
        cross = 2 * i1 * i2 * (1.0 + np.exp(-decay * np.abs(tau)) * np.cos(2 * np.pi * delta * tau))
        return self_terms + cross

    return ideal


def waveguide_g2(system, detector, taugrid, active=(True, True)):
    """Intensity autocorrelation of the common waveguide mode.

    The cross term interferes at the Raman line separation; tuned emitters
    have none, so the zero-delay peak survives detector averaging.
    """
    taus = taugrid.times() if hasattr(taugrid, 'times') else np.asarray(taugrid, dtype=float)
    used = [s for s, a in zip(system.sources, active) if a]
    rho = _signal_fraction(used, detector)
    return _measure(_waveguide_ideal(system, active), taus, detector,
                    _resolution(system.sources, system.separation), rho)


def detune_pair(system, separation):
    """Untuned copy of ``system`` whose second Raman line sits ``separation`` below the first.

    The drives keep their detunings; the second emitter's own transition is
    moved, so separations wider than the Raman tuning range are allowed.
    """
    r1, r2 = system.raman
    target = effective_frequency(r1) - separation
    r2 = replace(r2, transition_frequency=target + r2.drive_detuning)
    return replace(system, raman=(r1, r2), tuned=separation == 0)


@dataclass(frozen=True)
class WaveguideCalibration:
    background_fraction: float
    rho_squared: float
    separation: float
    single_g2_zero: float
    tuned_g2_zero: float
    untuned_g2_zero: float


def calibrate_waveguide(system, detector, single_target=0.16, dist_target=0.63):
    """Fit the background to g2_single(0) and the untuned line separation to g2_dist(0).

    ``system`` must be tuned; the detector must have finite timing resolution
    since an unresolved beat always averages to full interference at tau = 0.
    """
    if not system.tuned:
        raise ParameterError('calibration starts from a tuned system')
    if detector.resolves_nothing:
        raise FitError('untuned pair cannot be calibrated without detector timing jitter or a finite bin')
    zero = [0.0]
    clean = replace(system, sources=tuple(replace(s, background_fraction=0.0) for s in system.sources))
    ideal_single = waveguide_g2(clean, replace(detector, dark_rate=0.0), zero, active=(True, False))[0]
    rho2 = (1.0 - single_target) / (1.0 - ideal_single)
    if not 0 < rho2 <= 1:
        raise FitError(f'single-emitter target {single_target} is not reachable (ideal {ideal_single:.3f})')
    rate = system.sources[0].emission_rate
    background = 1.0 - np.sqrt(rho2) * (rate + detector.dark_rate) / rate
    if background < 0:
        raise FitError('dark counts alone exceed the calibrated background')
    calibrated = replace(system, sources=tuple(replace(s, background_fraction=background) for s in system.sources))

    def untuned_zero(separation):
        return waveguide_g2(detune_pair(calibrated, separation), detector, zero)[0]

    sigma_eff = np.hypot(detector.timing_jitter_sigma, detector.coincidence_bin / np.sqrt(12))
    upper = 5.0 / sigma_eff
    if untuned_zero(upper) > dist_target:
        raise FitError(f'distinguishable target {dist_target} lies below the fully averaged limit '
                       f'{untuned_zero(upper):.3f}; reduce the detector jitter')
    separation = brentq(lambda x: untuned_zero(x) - dist_target, 0.0, upper, xtol=1.0)
    return WaveguideCalibration(
        background_fraction=float(background),
        rho_squared=float(rho2),
        separation=float(separation),
        single_g2_zero=float(waveguide_g2(calibrated, detector, zero, active=(True, False))[0]),
        tuned_g2_zero=float(waveguide_g2(calibrated, detector, zero)[0]),
        untuned_g2_zero=float(untuned_zero(separation)),
    )


def superradiant_rate(system):
    """|B> emission rate into the waveguide relative to the incoherent mixture.

    |B> = (|eg> + e^{i phi}|ge>)/sqrt(2) decays through the collective jump
    c1 s1 + c2 e^{-i phi} s2; the rate is read off the master equation as the
    initial loss of excitation.
    """
    if not system.tuned:
        raise PhysicsError('collective enhancement needs tuned emitters')
    c1, c2 = system.couplings
    phi = system.relative_phase
    space = HilbertSpace((2, 2))
    s1 = embed(sigma_minus(), 0, space)
    s2 = embed(sigma_minus(), 1, space)
    jump = c1 * s1 + (c2 * np.exp(-1j * phi)) * s2
    model = LindbladModel(Operator(space, np.zeros((4, 4))), [(jump, 1.0)])
    excitation = s1.dag() @ s1 + s2.dag() @ s2

    eg = np.zeros(4, dtype=complex)
    eg[1] = 1.0  # |e, g>
    ge = np.zeros(4, dtype=complex)
    ge[2] = 1.0  # |g, e>
    bright = DensityMatrix.pure(space, eg + np.exp(1j * phi) * ge)
    mixture = DensityMatrix(space, 0.5 * (np.outer(eg, eg) + np.outer(ge, ge)))

    def loss(rho):
        return -np.trace(excitation.matrix @ model.apply(rho)).real

    return float(loss(bright) / loss(mixture))

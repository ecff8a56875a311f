"""Spin-qubit coherence under classical dephasing noise.

Decay is computed two ways: a filter-function overlap integral of the noise
spectrum with the pulse-sequence filter, and a Monte-Carlo average over
sampled noise trajectories. Noise spectra are two-sided in rad^2/s per
rad/s, so that the phase variance is int S(w) |F(w)|^2 dw / 2 pi.

Sequences are labelled by their number of pi pulses: 0 is a Ramsey (free
induction) sequence, N >= 1 is CPMG-N with pulses at (2k-1) tau / 2N.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid
from scipy.optimize import brentq, curve_fit, minimize

from .errors import FitError, NonConvergentIntegralError, ParameterError
from .qdyn import DensityMatrix, LindbladModel, TimeGrid, evolve_master, sigma_x, sigma_y, sigma_z
from .siv_model import empirical_upward_time

logger = logging.getLogger('sivsim')

TWO_PI = 2 * np.pi
Z_LOG_MIN = 1e-10
Z_LOG_POINTS = 500
Z_STEP = 0.05
Z_LINEAR_MIN = 50.0
FIT_WINDOW = (0.05, 0.95)
MC_CHUNK = 1000
SYNTH_COMPONENTS = 600
CPMG_GRID_POINTS = 60
DECOUPLING_NS = (1, 2, 4, 8, 16, 32)


# -- parameters ---------------------------------------------------------------

@dataclass(frozen=True)
class SpinQubitParams:
    transition_frequency: float
    rabi_frequency: float
    t1_floor: float = float('inf')

    def __post_init__(self):
        if min(self.transition_frequency, self.rabi_frequency, self.t1_floor) <= 0:
            raise ParameterError('spin qubit frequencies and t1_floor must be positive')


@dataclass(frozen=True)
class PulseSequence:
    kind: str
    total_time: float
    n_pulses: int = 0
    pulse_detuning: float = 0.0

    def __post_init__(self):
        if self.kind not in ('ramsey', 'cpmg'):
            raise ParameterError(f"sequence kind must be 'ramsey' or 'cpmg', got {self.kind!r}")
        if self.kind == 'cpmg' and self.n_pulses < 1:
            raise ParameterError('CPMG needs at least one pulse')
        if self.kind == 'ramsey':
            object.__setattr__(self, 'n_pulses', 0)
        if self.total_time < 0:
            raise ParameterError('total_time must be non-negative')


@dataclass(frozen=True)
class CoherenceResult:
    taus: np.ndarray
    coherence: np.ndarray
    t2: float
    beta: Optional[float] = None
    stderr: Optional[np.ndarray] = None
    fringe: Optional[np.ndarray] = None
    stretch: Optional[float] = None


# -- noise spectra ------------------------------------------------------------

@dataclass(frozen=True)
class OrnsteinUhlenbeck:
    sigma: float
    tau_c: float
    model = 'ornstein_uhlenbeck'

    def __post_init__(self):
        if self.sigma < 0 or self.tau_c <= 0:
            raise ParameterError('OU noise needs sigma >= 0 and tau_c > 0')

    low_exponent = 0.0
    support_max = np.inf

    def psd(self, omega):
        return 2 * self.sigma ** 2 * self.tau_c / (1 + (omega * self.tau_c) ** 2)

    def tail(self, omega):
        """int_omega^inf S(w) / w^2 dw."""
        y = 1.0 / (omega * self.tau_c)
        if y < 1e-2:
            diff = y ** 3 / 3 - y ** 5 / 5 + y ** 7 / 7
        else:
            diff = y - np.arctan(y)
        return 2 * self.sigma ** 2 * self.tau_c ** 2 * diff

    def _step_moments(self, dt):
        """Conditional moments of (x(t+dt), int x dt) given x(t), exact for any dt / tau_c."""
        tc, s2 = self.tau_c, self.sigma ** 2
        u = dt / tc
        a = np.exp(-u)
        m = -np.expm1(-u)
        var_x = s2 * -np.expm1(-2 * u)
        if u < 1e-3:
            var_i = s2 * tc ** 2 * u ** 3 * (2 / 3 - u / 2 + 7 * u ** 2 / 30)
        else:
            var_i = s2 * tc ** 2 * (2 * u - 3 + 4 * a - a * a)
        cov = s2 * tc * m * m
        return a, m, var_x, var_i, cov

    def sample_phases(self, n, tau, size, rng):
        if self.sigma == 0:
            return np.zeros(size)
        # steps line up with the pulse times, so each one has a single sign
        steps = 2 * max(n, 1) * 16
        a, m, var_x, var_i, cov = self._step_moments(tau / steps)
        gain = cov / var_x
        spread_x = np.sqrt(var_x)
        spread_i = np.sqrt(max(var_i - cov * gain, 0.0))
        signs = _toggling_signs(n, steps)
        x = rng.normal(0.0, self.sigma, size)
        phase = np.zeros(size)
        for i in range(steps):
            nxt = a * x + spread_x * rng.standard_normal(size)
            area = x * self.tau_c * m + gain * (nxt - a * x) + spread_i * rng.standard_normal(size)
            phase += signs[i] * area
            x = nxt
        return phase


@dataclass(frozen=True)
class QuasiStatic:
    sigma: float
    model = 'quasi_static_gaussian'

    def __post_init__(self):
        if self.sigma < 0:
            raise ParameterError('quasi-static noise needs sigma >= 0')

    def sample_phases(self, n, tau, size, rng):
        return rng.normal(0.0, self.sigma, size) * tau * _dc_weight(n)


@dataclass(frozen=True)
class White:
    level: float
    model = 'white'

    def __post_init__(self):
        if self.level < 0:
            raise ParameterError('white noise level must be non-negative')

    low_exponent = 0.0
    support_max = np.inf

    def psd(self, omega):
        return np.full_like(np.asarray(omega, dtype=float), self.level)

    def tail(self, omega):
        return self.level / omega

    def sample_phases(self, n, tau, size, rng):
        # phase variance S0 * tau for any sign pattern
        return rng.normal(0.0, np.sqrt(self.level * tau), size)


@dataclass(frozen=True)
class PowerLaw:
    """A / |w|^exponent between the cutoffs, flat below ``low_cutoff``, zero above ``high_cutoff``."""
    amplitude: float
    exponent: float
    low_cutoff: float = 0.0
    high_cutoff: float = np.inf
    model = 'power_law'

    def __post_init__(self):
        if self.amplitude < 0 or self.low_cutoff < 0 or self.high_cutoff <= self.low_cutoff:
            raise ParameterError('power-law noise needs amplitude >= 0 and 0 <= low_cutoff < high_cutoff')

    @property
    def low_exponent(self):
        return self.exponent if self.low_cutoff == 0 else 0.0

    @property
    def support_max(self):
        return self.high_cutoff

    def psd(self, omega):
        w = np.asarray(omega, dtype=float)
        with np.errstate(divide='ignore'):
            body = self.amplitude * np.abs(w) ** (-self.exponent)
        if self.low_cutoff > 0:
            body = np.where(w < self.low_cutoff, self.amplitude * self.low_cutoff ** (-self.exponent), body)
        return np.where(w <= self.high_cutoff, body, 0.0)

    def tail(self, omega):
        if omega >= self.high_cutoff:
            return 0.0
        total = 0.0
        start = omega
        if omega < self.low_cutoff:
            total += self.amplitude * self.low_cutoff ** (-self.exponent) * (1 / omega - 1 / self.low_cutoff)
            start = self.low_cutoff
        p = self.exponent + 1
        upper = 0.0 if np.isinf(self.high_cutoff) else self.high_cutoff ** (-p)
        return total + self.amplitude * (start ** (-p) - upper) / p

    def sample_phases(self, n, tau, size, rng):
        if self.low_cutoff == 0:
            raise ParameterError('spectral synthesis needs a finite low cutoff')
        top = self.high_cutoff if np.isfinite(self.high_cutoff) else 1e3 * np.pi * max(n, 1) / tau
        omega = np.geomspace(self.low_cutoff * 1e-3, top, SYNTH_COMPONENTS)
        weights = self.psd(omega) * np.gradient(omega) / np.pi
        response = tau * filter_response(n, omega * tau)
        c = (rng.standard_normal((size, omega.size)) + 1j * rng.standard_normal((size, omega.size)))
        c *= np.sqrt(weights)
        return np.real(c @ response)


@dataclass(frozen=True)
class CompositeNoise:
    parts: tuple = field(default_factory=tuple)
    model = 'composite'

    def sample_phases(self, n, tau, size, rng):
        return sum(p.sample_phases(n, tau, size, rng) for p in self.parts)


# -- filter functions ---------------------------------------------------------

def _dc_weight(n):
    """Time average of the toggling function."""
    return 1.0 if n == 0 else 0.0


def filter_function(n, z):
    """y(z) = 1 + (-1)^(N+1) e^{iz} + 2 sum_k (-1)^k e^{i z d_k}, d_k = (2k-1)/2N.

    The constant parts cancel, so it is evaluated with expm1 to keep
    precision at small z.
    """
    z = np.asarray(z, dtype=float)
    y = (-1) ** (n + 1) * np.expm1(1j * z)
    for k in range(1, n + 1):
        y = y + 2 * (-1) ** k * np.expm1(1j * z * (2 * k - 1) / (2 * n))
    return y


def filter_response(n, z):
    """Y(z) = int_0^1 f(x) e^{izx} dx = i y(z) / z for the toggling function f."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < 1e-12
    out[small] = _dc_weight(n)
    out[~small] = 1j * filter_function(n, z[~small]) / z[~small]
    return out


def filter_weight(n, z):
    """|Y(z)|^2 = |y(z)|^2 / z^2."""
    z = np.asarray(z, dtype=float)
    return np.abs(filter_function(n, z)) ** 2 / z ** 2


def _toggling_signs(n, steps):
    signs = np.ones(steps)
    for k in range(1, n + 1):
        signs[(2 * k - 1) * steps // (2 * n):] *= -1
    return signs


@lru_cache(maxsize=64)
def _filter_grid(n):
    z_max = max(Z_LINEAR_MIN, 40 * np.pi * max(n, 1))
    z = np.concatenate([
        np.geomspace(Z_LOG_MIN, 1.0, Z_LOG_POINTS, endpoint=False),
        np.arange(1.0, z_max, Z_STEP),
        [z_max],
    ])
    w = filter_weight(n, z)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def decoherence_function(noise, n, t):
    """chi(t) with coherence exp(-chi); chi(t) = (t/2 pi) int_0^inf S(z/t) |y(z)|^2 / z^2 dz."""
    if t < 0:
        raise ParameterError('time must be non-negative')
    if t == 0:
        return 0.0
    if isinstance(noise, CompositeNoise):
        return sum(decoherence_function(p, n, t) for p in noise.parts)
    if isinstance(noise, QuasiStatic):
        return 0.5 * (noise.sigma * t * _dc_weight(n)) ** 2

    filter_exponent = 0.0 if n == 0 else 2.0
    if noise.low_exponent - filter_exponent >= 1.0:
        raise NonConvergentIntegralError(
            f'{noise.model} spectrum with low-frequency exponent {noise.low_exponent} diverges '
            f'against the {"Ramsey" if n == 0 else f"CPMG-{n}"} filter; add a low cutoff',
            exponent=noise.low_exponent, n_pulses=n)

    z, w = _filter_grid(n)
    cap = noise.support_max * t
    tail = 0.0
    if cap < z[-1]:
        keep = z < cap
        z = np.append(z[keep], cap)
        w = np.append(w[keep], filter_weight(n, cap))
    else:
        average = 2.0 + 4.0 * n
        tail = average / TWO_PI * noise.tail(z[-1] / t)
    integrand = noise.psd(z / t) * w
    body = trapezoid(integrand, z) + integrand[0] * z[0]
    chi = t / TWO_PI * body + tail
    if not np.isfinite(chi):
        raise NonConvergentIntegralError(f'filter integral is not finite at t={t:.3e} s', n_pulses=n)
    return float(chi)


def coherence_curve(noise, n, taus):
    return np.exp(-np.array([decoherence_function(noise, n, t) for t in taus]))


# -- T2 extraction ------------------------------------------------------------

def extract_t2(taus, coherence):
    """1/e time of a stretched exponential exp(-(t/T2)^p) fitted in log-log form.

    Points with 0.05 < C < 0.95 enter the fit. With fewer than three such
    points the 1/e crossing is interpolated; a curve that never reaches the
    window gives T2 = inf. Returns (t2, p).
    """
    t = np.asarray(taus, dtype=float)
    c = np.asarray(coherence, dtype=float)
    lo, hi = FIT_WINDOW
    window = (c > lo) & (c < hi) & (t > 0)
    if np.count_nonzero(window) >= 3:
        slope, intercept = np.polyfit(np.log(t[window]), np.log(-np.log(c[window])), 1)
        if slope <= 0:
            raise FitError('coherence does not decay monotonically inside the fit window')
        return float(np.exp(-intercept / slope)), float(slope)
    below = np.nonzero(c <= np.exp(-1))[0]
    if below.size == 0:
        return float('inf'), None
    k = below[0]
    if k == 0:
        return float(t[0]), None
    x0, x1 = t[k - 1], t[k]
    y0, y1 = np.log(c[k - 1]), np.log(max(c[k], 1e-300))
    return float(x0 + (-1 - y0) * (x1 - x0) / (y1 - y0)), None


def _chi_crossing(noise, n, level=1.0, start=1e-12):
    """Smallest time (on a doubling search) where chi reaches ``level``."""
    lo, hi = 0.0, start
    for _ in range(400):
        if decoherence_function(noise, n, hi) >= level:
            break
        lo, hi = hi, hi * 2
    else:
        return float('inf')
    if lo == 0.0:
        return hi
    root = brentq(lambda x: decoherence_function(noise, n, np.exp(x)) - level, np.log(lo), np.log(hi),
                  xtol=1e-6)
    return float(np.exp(root))


# -- protocols ----------------------------------------------------------------

def rabi_trajectory(qubit, detuning, taugrid, with_t1=False):
    """P_down(tau) for a qubit starting in |up> under a drive detuned by ``detuning`` Hz.

    With ``with_t1`` the Bloch vector relaxes isotropically at 1/(2 T1)
    about the fully mixed state.
    """
    taus = taugrid.times()
    omega = qubit.rabi_frequency
    omega_eff = np.hypot(omega, detuning)
    p = (omega / omega_eff) ** 2 * np.sin(np.pi * omega_eff * taus) ** 2
    if with_t1 and np.isfinite(qubit.t1_floor):
        p = 0.5 - np.exp(-taus / (2 * qubit.t1_floor)) * (0.5 - p)
    return p


def rabi_master_equation(qubit, detuning, taugrid):
    """Depolarizing Lindblad solve of the same drive, used to cross-check ``rabi_trajectory``."""
    h = TWO_PI * (0.5 * detuning * sigma_z() + 0.5 * qubit.rabi_frequency * sigma_x())
    channels = []
    if np.isfinite(qubit.t1_floor):
        rate = 1.0 / (8 * qubit.t1_floor)
        channels = [(sigma_x(), rate), (sigma_y(), rate), (sigma_z(), rate)]
    model = LindbladModel(h, channels)
    states = evolve_master(model, DensityMatrix.basis(model.space, 0), taugrid)
    return np.array([s.populations()[1] for s in states])


def ramsey_decay(noise, detuning, taugrid):
    """Ramsey envelope exp(-chi) and fringe (1 + exp(-chi) cos(2 pi detuning tau)) / 2."""
    taus = taugrid.times()
    envelope = coherence_curve(noise, 0, taus)
    fringe = 0.5 * (1 + envelope * np.cos(TWO_PI * detuning * taus))
    t2, p = extract_t2(taus, envelope)
    return CoherenceResult(taus=taus, coherence=envelope, t2=t2, fringe=fringe, stretch=p)


@dataclass(frozen=True)
class RamseyFit:
    frequency: float
    t2star: float
    phase: float


def fit_ramsey_fringe(taus, fringe):
    """Fit (1 + exp(-(t/T2*)^2) cos(2 pi f t + phi)) / 2 to a measured fringe."""
    t = np.asarray(taus, dtype=float)
    y = np.asarray(fringe, dtype=float)
    spectrum = np.abs(np.fft.rfft(y - y.mean()))
    freqs = np.fft.rfftfreq(t.size, t[1] - t[0])
    f0 = freqs[np.argmax(spectrum[1:]) + 1]

    def model(x, f, t2, phi):
        return 0.5 * (1 + np.exp(-(x / t2) ** 2) * np.cos(TWO_PI * f * x + phi))

    try:
        popt, _ = curve_fit(model, t, y, p0=[f0, t[-1] / 3, 0.0], maxfev=20000)
    except RuntimeError as e:
        raise FitError(f'Ramsey fringe fit failed: {e}') from e
    return RamseyFit(frequency=float(abs(popt[0])), t2star=float(abs(popt[1])), phase=float(popt[2]))


def cpmg_coherence(noise, n, taugrid, t1=None):
    """CPMG-N coherence exp(-chi_N); an optional T1 adds exp(-tau / 2 T1)."""
    if int(n) != n or n < 1:
        raise ParameterError(f'CPMG needs N >= 1, got {n}')
    taus = taugrid.times()
    coherence = coherence_curve(noise, int(n), taus)
    if t1 is not None and np.isfinite(t1):
        coherence = coherence * np.exp(-taus / (2 * t1))
    t2, p = extract_t2(taus, coherence)
    return CoherenceResult(taus=taus, coherence=coherence, t2=t2, stretch=p)


def adaptive_grid(noise, n, n_points=CPMG_GRID_POINTS, span=2.5):
    """Time grid covering ``span`` times the chi = 1 crossing."""
    guess = _chi_crossing(noise, n)
    if not np.isfinite(guess):
        raise FitError(f'no decay found for N={n}')
    return TimeGrid(0.0, span * guess, n_points)


def cpmg_family(noise, ns, n_points=CPMG_GRID_POINTS, t1=None):
    """[(N, CoherenceResult)] with per-N adaptive grids."""
    return [(int(n), cpmg_coherence(noise, n, adaptive_grid(noise, n, n_points), t1=t1)) for n in ns]


# -- Monte-Carlo oracle -------------------------------------------------------

def _mc_point(task):
    noise, n, tau, n_trajectories, seed_seq = task
    if tau == 0:
        return 1.0, 0.0
    sizes = [MC_CHUNK] * (n_trajectories // MC_CHUNK)
    if n_trajectories % MC_CHUNK:
        sizes.append(n_trajectories % MC_CHUNK)
    s1 = s2 = 0.0
    for size, child in zip(sizes, seed_seq.spawn(len(sizes))):
        rng = np.random.default_rng(child)
        c = np.cos(noise.sample_phases(n, tau, size, rng))
        s1 += float(c.sum())
        s2 += float((c * c).sum())
    mean = s1 / n_trajectories
    var = max(s2 / n_trajectories - mean ** 2, 0.0)
    return mean, np.sqrt(var / n_trajectories)


def monte_carlo_coherence(noise, sequence, n_trajectories, seed=0, taugrid=None, jobs=1):
    """<cos phi> over sampled noise trajectories, with its standard error.

    Each tau point gets its own child of SeedSequence(seed) and each chunk of
    trajectories a child of that, so results do not depend on ``jobs``.
    """
    from .worker import map_tasks

    if n_trajectories < 1:
        raise ParameterError('n_trajectories must be positive')
    taus = np.array([sequence.total_time]) if taugrid is None else taugrid.times()
    children = np.random.SeedSequence(seed).spawn(len(taus))
    tasks = [(noise, sequence.n_pulses, float(t), int(n_trajectories), child) for t, child in zip(taus, children)]
    results = map_tasks(_mc_point, tasks, jobs=jobs)
    mean = np.array([r[0] for r in results])
    err = np.array([r[1] for r in results])
    coherence = np.clip(mean, 0.0, 1.0)
    t2, p = extract_t2(taus, coherence) if taus.size > 1 else (float('nan'), None)
    return CoherenceResult(taus=taus, coherence=coherence, t2=t2, stderr=err, stretch=p)


def ou_ramsey_exact(noise, taus):
    """Closed-form OU free-induction decay exp(-sigma^2 tc^2 (t/tc - 1 + e^{-t/tc}))."""
    t = np.asarray(taus, dtype=float)
    x = t / noise.tau_c
    return np.exp(-(noise.sigma * noise.tau_c) ** 2 * (x + np.expm1(-x)))


# -- scaling ------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    beta: float
    stderr: float
    ci_low: float
    ci_high: float
    prefactor: float
    n_points: int
    curvature_p: Optional[float]
    curved: bool


def t2_scaling_fit(points, alpha=0.05, warn=True):
    """Fit T2 = A N^beta on log-log axes.

    A quadratic term is tested with an F-test; a significant one is logged
    as curvature (for example T2 saturating at the T1 limit).
    """
    pts = sorted((float(n), float(t2)) for n, t2 in points)
    if len(pts) < 3:
        raise ParameterError(f'scaling fit needs at least 3 points, got {len(pts)}')
    ns = np.array([p[0] for p in pts])
    t2 = np.array([p[1] for p in pts])
    if np.any(t2 <= 0) or not np.all(np.isfinite(t2)) or np.any(ns <= 0):
        raise ParameterError('T2 values and pulse numbers must be positive and finite')
    x, y = np.log(ns), np.log(t2)
    fit = stats.linregress(x, y)
    dof = len(pts) - 2
    half = stats.t.ppf(0.975, dof) * fit.stderr if dof > 0 else np.inf

    curvature_p, curved = None, False
    if len(pts) >= 4:
        rss1 = float(np.sum((y - (fit.intercept + fit.slope * x)) ** 2))
        quad = np.polyfit(x, y, 2)
        rss2 = float(np.sum((y - np.polyval(quad, x)) ** 2))
        dof2 = len(pts) - 3
        if rss2 > 0:
            f_stat = (rss1 - rss2) / (rss2 / dof2)
            curvature_p = float(stats.f.sf(f_stat, 1, dof2))
        else:
            curvature_p = 0.0 if rss1 > 1e-20 else 1.0
        curved = curvature_p < alpha
        if curved and warn:
            logger.warning('T2(N) is curved on log-log axes (p=%.3g); beta=%.3f is a poor summary',
                           curvature_p, fit.slope)
    return ScalingFit(
        beta=float(fit.slope), stderr=float(fit.stderr),
        ci_low=float(fit.slope - half), ci_high=float(fit.slope + half),
        prefactor=float(np.exp(fit.intercept)), n_points=len(pts),
        curvature_p=curvature_p, curved=curved,
    )


def spin_t1_floor(temperature):
    """Spin T1 limited by phonon-driven orbital excitation at ``temperature``."""
    return empirical_upward_time(temperature)


# -- fitted decoupling spectrum -----------------------------------------------

@dataclass(frozen=True)
class FittedPsd:
    noise: PowerLaw
    beta: float
    exponent: float
    strength: float
    t2_anchor: float


def _edge_noise(exponent, log_strength, plateau_ratio, edge=1.0):
    amplitude = TWO_PI * 10.0 ** log_strength * edge ** (exponent + 1)
    return PowerLaw(amplitude=amplitude, exponent=exponent, low_cutoff=edge / plateau_ratio, high_cutoff=edge)


def cpmg_t2(noise, n, n_points=CPMG_GRID_POINTS):
    return cpmg_coherence(noise, n, adaptive_grid(noise, n, n_points)).t2


@lru_cache(maxsize=8)
def fit_decoupling_psd(beta_target=1.02, t2_target=13e-3, anchor_n=32, plateau_ratio=1e3, ns=DECOUPLING_NS):
    """Power law with a hard upper edge whose CPMG family scales as N^beta_target.

    In units of the edge frequency the T2(N) exponent depends only on the
    spectral exponent and the dimensionless strength A w_c^-(exponent+1) / 2 pi;
    both are found by Nelder-Mead, then the edge is rescaled so that
    T2(anchor_n) = t2_target.
    """
    def beta_for(params):
        exponent, log_strength = params
        if not 0.0 <= exponent <= 4.0:
            return np.nan
        noise = _edge_noise(exponent, log_strength, plateau_ratio)
        try:
            t2 = [cpmg_t2(noise, n) for n in ns]
            return t2_scaling_fit(list(zip(ns, t2)), warn=False).beta
        except (ParameterError, FitError):
            return np.nan

    def objective(params):
        b = beta_for(params)
        return 1e6 if not np.isfinite(b) else (b - beta_target) ** 2

    result = minimize(objective, x0=[1.0, 0.0], method='Nelder-Mead',
                      options={'xatol': 1e-3, 'fatol': 1e-7, 'maxiter': 300})
    exponent, log_strength = result.x
    beta = beta_for(result.x)
    if not np.isfinite(beta):
        raise FitError('decoupling spectrum fit left the admissible exponent range')
    logger.info('fitted decoupling spectrum: exponent=%.4f, log10 strength=%.4f, beta=%.4f',
                exponent, log_strength, beta)

    unit_t2 = cpmg_t2(_edge_noise(exponent, log_strength, plateau_ratio), anchor_n)
    edge = unit_t2 / t2_target
    noise = _edge_noise(exponent, log_strength, plateau_ratio, edge=edge)
    return FittedPsd(noise=noise, beta=float(beta), exponent=float(exponent),
                     strength=float(10.0 ** log_strength), t2_anchor=float(t2_target))


# -- presets ------------------------------------------------------------------

NOISE_PRESETS = {
    'quasi-static-4us': QuasiStatic(sigma=np.sqrt(2) / 4e-6),
    'quasi-static-300ns': QuasiStatic(sigma=np.sqrt(2) / 300e-9),
    'ou-slow-bath': OrnsteinUhlenbeck(sigma=np.sqrt(2) / 4e-6, tau_c=1.0),
    'white': White(level=2e3),
}


def noise_preset(name):
    if name == 'fitted-cpmg':
        return fit_decoupling_psd().noise
    try:
        return NOISE_PRESETS[name]
    except KeyError:
        raise ParameterError(f'unknown noise preset {name!r}') from None

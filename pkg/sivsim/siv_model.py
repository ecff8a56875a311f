"""SiV ground-state structure and single-phonon orbital relaxation.

Parameter records hold ordinary frequencies in Hz; ``ground_hamiltonian``
returns an operator in rad/s. The coupling constant ``chi_rho`` is a single
fitted scalar in s^2, so that the downward rate ``2*pi*chi_rho*delta**3*(n+1)``
comes out in 1/s for ``delta`` in Hz.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import constants, stats

from .errors import ParameterError
from .qdyn import HilbertSpace, Operator, TimeGrid

logger = logging.getLogger('sivsim')

H = constants.h
K_B = constants.k
BOHR_HZ_PER_T = constants.physical_constants['Bohr magneton in Hz/T'][0]

# measured equilibration time used for the coupling calibration
CALIBRATION_TEMPERATURE = 5.0
CALIBRATION_SPLITTING = 45e9
CALIBRATION_TIME = 39e-9

# empirical upward-time law: 1/gamma_plus = 200 ns * (exp(2.4 K / T) - 1)
EMPIRICAL_PREFACTOR = 200e-9
EMPIRICAL_ACTIVATION_K = 2.4


class Branch(str, Enum):
    LB = 'LB'
    UB = 'UB'


@dataclass(frozen=True)
class SiVLevelParams:
    delta_gs: float
    strain_splitting: float = 0.0
    b_field: tuple = (0.0, 0.0, 0.0)
    spin_g_factor: float = 2.0
    orbital_quenching: float = 0.1

    def __post_init__(self):
        if not self.delta_gs > 0:
            raise ParameterError(f'delta_gs must be positive, got {self.delta_gs}')
        if self.strain_splitting < 0:
            raise ParameterError(f'strain_splitting must be non-negative, got {self.strain_splitting}')
        if not 0.0 <= self.orbital_quenching <= 1.0:
            raise ParameterError(f'orbital_quenching must lie in [0, 1], got {self.orbital_quenching}')
        b = tuple(float(x) for x in np.atleast_1d(self.b_field))
        if len(b) != 3:
            raise ParameterError(f'b_field must have three components, got {len(b)}')
        object.__setattr__(self, 'b_field', b)


@dataclass(frozen=True)
class PhononBathParams:
    coupling_density_product: float
    temperature: float

    def __post_init__(self):
        if self.coupling_density_product < 0 or self.temperature < 0:
            raise ParameterError('phonon bath coupling and temperature must be non-negative')


@dataclass(frozen=True)
class TransitionRates:
    gamma_plus: float
    gamma_minus: float

    def __post_init__(self):
        if not self.gamma_minus >= self.gamma_plus >= 0:
            raise ParameterError(
                f'rates must satisfy gamma_minus >= gamma_plus >= 0, got {self.gamma_plus}, {self.gamma_minus}')

    @property
    def total(self):
        return self.gamma_plus + self.gamma_minus

    @property
    def equilibration_time(self):
        return 1.0 / self.total if self.total > 0 else float('inf')


@dataclass(frozen=True)
class EmitterOpticalParams:
    zpl_frequency: float
    lifetime: float
    gamma_rad: float
    gamma_dephasing: float = 0.0
    zpl_branching: float = 0.7
    inhomogeneous_width: float = 0.0

    def __post_init__(self):
        if self.lifetime <= 0 or self.gamma_rad <= 0:
            raise ParameterError('lifetime and gamma_rad must be positive')
        if self.gamma_dephasing < 0 or self.inhomogeneous_width < 0:
            raise ParameterError('gamma_dephasing and inhomogeneous_width must be non-negative')
        if not 0.0 <= self.zpl_branching <= 1.0:
            raise ParameterError(f'zpl_branching must lie in [0, 1], got {self.zpl_branching}')
        limit = 1.0 / (2 * np.pi * self.lifetime)
        if self.gamma_total < limit * (1 - 1e-9):
            raise ParameterError(
                f'total linewidth {self.gamma_total:.4g} Hz is below the transform limit {limit:.4g} Hz')

    @property
    def gamma_total(self):
        return self.gamma_rad + self.gamma_dephasing

    @property
    def transform_limit(self):
        return 1.0 / (2 * np.pi * self.lifetime)


def bose_occupation(delta, temperature):
    """Thermal phonon occupation at frequency ``delta`` (Hz) and ``temperature`` (K)."""
    if delta <= 0:
        raise ParameterError(f'delta must be positive, got {delta}')
    if temperature < 0:
        raise ParameterError(f'temperature must be non-negative, got {temperature}')
    if temperature == 0:
        return 0.0
    return float(1.0 / np.expm1(H * delta / (K_B * temperature)))


def orbital_splitting(level):
    """Gap between lower and upper orbital branch including transverse strain."""
    return float(np.hypot(level.delta_gs, 2.0 * level.strain_splitting))


def ground_hamiltonian(level):
    """4x4 ground-state Hamiltonian on orbital (e+, e-) x spin (up, down), in rad/s.

    Spin-orbit term (delta/2) sz.sz, transverse strain as an e+/e- coupling
    of magnitude ``strain_splitting``, quenched orbital Zeeman along z, and a
    spin Zeeman term with an isotropic effective g-factor.
    """
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    eye = np.eye(2)
    bx, by, bz = level.b_field

    h = 0.5 * level.delta_gs * np.kron(sz, sz)
    h = h + level.strain_splitting * np.kron(sx, eye)
    h = h + level.orbital_quenching * BOHR_HZ_PER_T * bz * np.kron(sz, eye)
    spin = 0.5 * level.spin_g_factor * BOHR_HZ_PER_T * (bx * sx + by * sy + bz * sz)
    h = h + np.kron(eye, spin)
    return Operator(HilbertSpace((2, 2)), 2 * np.pi * h)


def calibrate_coupling_density(splitting, temperature, equilibration_time):
    """chi_rho such that gamma_plus + gamma_minus = 1/equilibration_time.

    The measured 39 ns is read as the population equilibration time, so the
    summed rate itself (not the summed rate over 2 pi) equals its inverse.
    That is what makes the relaxation trajectory reach 1/e at 39 ns.
    """
    if equilibration_time <= 0:
        raise ParameterError('equilibration_time must be positive')
    n = bose_occupation(splitting, temperature)
    return 1.0 / (2 * np.pi * splitting ** 3 * (2 * n + 1) * equilibration_time)


CALIBRATED_COUPLING = calibrate_coupling_density(CALIBRATION_SPLITTING, CALIBRATION_TEMPERATURE, CALIBRATION_TIME)


def phonon_rates(level, bath):
    delta = orbital_splitting(level)
    n = bose_occupation(delta, bath.temperature)
    prefactor = 2 * np.pi * bath.coupling_density_product * delta ** 3
    return TransitionRates(gamma_plus=prefactor * n, gamma_minus=prefactor * (n + 1))


def linear_rate_approx(level, bath):
    """High-temperature limit of the upward rate, linear in T."""
    delta = orbital_splitting(level)
    crossover = H * delta / K_B
    if bath.temperature < crossover:
        logger.warning('linear rate approximation used at T=%.3g K below h*delta/k_B=%.3g K',
                       bath.temperature, crossover)
    return 2 * np.pi * bath.coupling_density_product * delta ** 2 * K_B * bath.temperature / H


def empirical_upward_time(temperature):
    """1/gamma_plus from the empirical activation law, in seconds."""
    if temperature < 0:
        raise ParameterError(f'temperature must be non-negative, got {temperature}')
    if temperature == 0:
        return float('inf')
    return float(EMPIRICAL_PREFACTOR * np.expm1(EMPIRICAL_ACTIVATION_K / temperature))


def empirical_rates(temperature):
    """Rate pair from the empirical law, with the downward rate fixed by detailed balance."""
    if temperature == 0:
        return TransitionRates(0.0, 1.0 / EMPIRICAL_PREFACTOR)
    n = 1.0 / np.expm1(EMPIRICAL_ACTIVATION_K / temperature)
    return TransitionRates(n / EMPIRICAL_PREFACTOR, (n + 1) / EMPIRICAL_PREFACTOR)


def compare_rate_models(level, bath):
    """Side-by-side first-principles vs empirical upward times at the bath temperature."""
    model = phonon_rates(level, bath)
    empirical_time = empirical_upward_time(bath.temperature)
    model_time = 1.0 / model.gamma_plus if model.gamma_plus > 0 else float('inf')
    # low-temperature prefactor of 1/gamma_plus, the quantity the empirical law fixes at 200 ns
    prefactor = 1.0 / (2 * np.pi * bath.coupling_density_product * orbital_splitting(level) ** 3)
    return {
        'temperature_K': bath.temperature,
        'model_upward_time_s': model_time,
        'empirical_upward_time_s': empirical_time,
        'model_prefactor_s': prefactor,
        'empirical_prefactor_s': EMPIRICAL_PREFACTOR,
        'prefactor_ratio': prefactor / EMPIRICAL_PREFACTOR,
    }


def thermal_line_ratio(delta, temperature):
    """Upper/lower branch population ratio in thermal equilibrium."""
    if delta <= 0:
        raise ParameterError(f'delta must be positive, got {delta}')
    if temperature < 0:
        raise ParameterError(f'temperature must be non-negative, got {temperature}')
    if temperature == 0:
        return 0.0
    return float(np.exp(-H * delta / (K_B * temperature)))


def lower_branch_polarization(delta, temperature):
    r = thermal_line_ratio(delta, temperature)
    return 1.0 / (1.0 + r)


@dataclass(frozen=True)
class ThermalFit:
    delta_fit: float
    stderr: float
    intercept: float
    r_squared: float


def fit_thermal_splitting(temperatures, ratios):
    """Fit ln(ratio) against 1/T and return the implied splitting in Hz.

    Parameters:
    - temperatures: sequence of K, all > 0
    - ratios: measured upper/lower line intensity ratios, all > 0
    """
    t = np.asarray(temperatures, dtype=float)
    r = np.asarray(ratios, dtype=float)
    if t.size < 2 or t.size != r.size:
        raise ParameterError('need at least two (temperature, ratio) pairs of equal length')
    if np.any(t <= 0) or np.any(r <= 0):
        raise ParameterError('temperatures and ratios must be positive')
    fit = stats.linregress(1.0 / t, np.log(r))
    scale = K_B / H
    return ThermalFit(delta_fit=float(-fit.slope * scale), stderr=float(fit.stderr * scale),
                      intercept=float(fit.intercept), r_squared=float(fit.rvalue ** 2))


@dataclass(frozen=True)
class PopulationTrajectory:
    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def orbital_relaxation_trajectory(rates, initial_branch, grid):
    """Closed-form two-level rate equation starting fully in ``initial_branch``."""
    branch = Branch(initial_branch)
    t = grid.times() - grid.start
    p0 = 1.0 if branch is Branch.UB else 0.0
    total = rates.total
    if total == 0:
        upper = np.full_like(t, p0)
    else:
        p_eq = rates.gamma_plus / total
        upper = p_eq + (p0 - p_eq) * np.exp(-total * t)
    return PopulationTrajectory(times=grid.times(), lower=1.0 - upper, upper=upper)


def relaxation_time_grid(rates, n_points=201, span=6.0):
    """Grid covering ``span`` equilibration times."""
    return TimeGrid(0.0, span * rates.equilibration_time, n_points)


FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


def sample_inhomogeneous_ensemble(params, n, seed=0):
    """ZPL frequencies (Hz) drawn from a Gaussian with FWHM ``inhomogeneous_width``."""
    if int(n) != n or n < 1:
        raise ParameterError(f'ensemble size must be a positive integer, got {n}')
    n = int(n)
    if params.inhomogeneous_width == 0:
        return np.full(n, float(params.zpl_frequency))
    rng = np.random.default_rng(seed)
    return rng.normal(params.zpl_frequency, params.inhomogeneous_width / FWHM_PER_SIGMA, n)


def sample_linewidths(mean, std, n, seed=0, floor=0.0):
    """Per-emitter total linewidths (Hz) from a normal law truncated at ``floor``."""
    if int(n) != n or n < 1:
        raise ParameterError(f'sample size must be a positive integer, got {n}')
    if std <= 0:
        return np.full(int(n), max(float(mean), floor))
    rng = np.random.default_rng(seed)
    a = (floor - mean) / std
    return stats.truncnorm.rvs(a, np.inf, loc=mean, scale=std, size=int(n), random_state=rng)


def linewidth_figures_of_merit(params):
    return {
        'total_linewidth_Hz': params.gamma_total,
        'transform_limit_Hz': params.transform_limit,
        'broadening_ratio': params.gamma_total / params.gamma_rad,
        'inhomogeneous_ratio': params.inhomogeneous_width / params.gamma_rad,
    }


def zpl_photon_rate(params, total_rate):
    """Share of ``total_rate`` emitted into the zero-phonon line."""
    if total_rate < 0:
        raise ParameterError('total_rate must be non-negative')
    return params.zpl_branching * total_rate


# named presets --------------------------------------------------------------

LEVEL_PRESETS = {
    'siv-bulk': SiVLevelParams(delta_gs=45e9),
    'siv-nano': SiVLevelParams(delta_gs=48e9),
    'siv-strained-80GHz': SiVLevelParams(delta_gs=48e9, strain_splitting=32e9),
}

BATH_PRESETS = {
    name: PhononBathParams(coupling_density_product=CALIBRATED_COUPLING, temperature=CALIBRATION_TEMPERATURE)
    for name in LEVEL_PRESETS
}

_ZPL = 406.7001e12
_LIFETIME = 1.73e-9
_GAMMA_RAD = 94e6

EMITTER_PRESETS = {
    # 135 MHz total, narrow 1 GHz inhomogeneous distribution
    'siv-bulk': EmitterOpticalParams(_ZPL, _LIFETIME, _GAMMA_RAD, 41e6, 0.7, 1e9),
    # 300 MHz total in nanostructures, ~20 GHz inhomogeneous distribution
    'siv-nano': EmitterOpticalParams(_ZPL, _LIFETIME, _GAMMA_RAD, 206e6, 0.7, 20e9),
    'siv-strained-80GHz': EmitterOpticalParams(_ZPL, _LIFETIME, _GAMMA_RAD, 206e6, 0.7, 20e9),
}

# (mean, std) of the measured single-emitter linewidth distributions, Hz
LINEWIDTH_STATISTICS = {
    'siv-bulk': (320e6, 180e6),
    'siv-nano': (410e6, 160e6),
    'siv-strained-80GHz': (410e6, 160e6),
}

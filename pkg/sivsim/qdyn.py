"""Open-quantum-system kernel: composite Hilbert spaces, Lindblad evolution,
steady states and two-time correlation functions.

Basis convention (frozen): subsystem 0 is the slowest-varying index of the
Kronecker product, i.e. ``np.kron`` order. For two-level subsystems index 0
is the upper level, so ``sigma_z = diag(1, -1)`` and ``sigma_plus = |0><1|``.

Operators carry angular frequencies (rad/s). Density matrices are vectorised
column-major (``vec(A X B) = (B^T kron A) vec(X)``).
"""
import logging
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, svd

from .errors import (
    ConvergenceError,
    DegenerateSteadyStateError,
    DimensionMismatchError,
    NonStationaryError,
    ParameterError,
    PhysicsError,
)

logger = logging.getLogger('sivsim')

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9
TRACE_DRIFT_TOL = 1e-8
RTOL = 1e-8
ATOL = 1e-10
STEADY_RESIDUAL = 1e-9
UNIQUENESS_RATIO = 1e3
FOCK_FLOOR = 4
FOCK_TOL = 1e-6
FOCK_MAX = 32


@dataclass(frozen=True)
class HilbertSpace:
    subsystem_dims: tuple

    def __post_init__(self):
        try:
            dims = tuple(int(d) for d in self.subsystem_dims)
        except TypeError:
            dims = (int(self.subsystem_dims),)
        if not dims:
            raise ParameterError('a Hilbert space needs at least one subsystem')
        if any(d < 1 for d in dims):
            raise ParameterError(f'subsystem dimensions must be positive, got {dims}')
        object.__setattr__(self, 'subsystem_dims', dims)

    @property
    def dim(self):
        return int(np.prod(self.subsystem_dims))

    def __len__(self):
        return len(self.subsystem_dims)


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.start) and np.isfinite(self.stop)):
            raise ParameterError('time grid bounds must be finite')
        if self.start < 0 or self.stop <= self.start:
            raise ParameterError(f'time grid needs stop > start >= 0, got [{self.start}, {self.stop}]')
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ParameterError(f'time grid needs at least 2 points, got {self.n_points}')
        object.__setattr__(self, 'n_points', int(self.n_points))

    def times(self):
        return np.linspace(self.start, self.stop, self.n_points)

    @property
    def step(self):
        return (self.stop - self.start) / (self.n_points - 1)


def _readonly(matrix):
    m = np.array(matrix, dtype=complex)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class Operator:
    space: HilbertSpace
    matrix: np.ndarray

    # numpy scalars defer to __rmul__
    __array_ufunc__ = None

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f'operator matrix must be square, got shape {m.shape}')
        if m.shape[0] != self.space.dim:
            raise DimensionMismatchError(
                f'operator of size {m.shape[0]} does not match space dimension {self.space.dim}')
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def from_matrix(cls, matrix, dims=None):
        m = np.asarray(matrix)
        return cls(HilbertSpace(dims if dims is not None else (m.shape[0],)), m)

    def dag(self):
        return Operator(self.space, self.matrix.conj().T)

    def is_hermitian(self, tol=HERMITIAN_TOL):
        scale = max(1.0, float(np.max(np.abs(self.matrix), initial=0.0)))
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol * scale)

    def _check(self, other):
        if other.space != self.space:
            raise DimensionMismatchError(
                f'operators live on different spaces {self.space.subsystem_dims} and {other.space.subsystem_dims}')

    def __add__(self, other):
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return Operator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __matmul__(self, other):
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatchError(
                f'density matrix shape {m.shape} does not match space dimension {self.space.dim}')
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ParameterError('density matrix is not Hermitian')
        trace = np.trace(m).real
        if abs(trace - 1.0) > TRACE_TOL:
            raise ParameterError(f'density matrix trace is {trace!r}, expected 1')
        smallest = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if smallest < -POSITIVITY_TOL:
            raise ParameterError(f'density matrix has negative eigenvalue {smallest:.3e}')
        object.__setattr__(self, 'matrix', m)

    @classmethod
    def pure(cls, space, ket):
        psi = np.asarray(ket, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(space, np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, space, index):
        psi = np.zeros(space.dim, dtype=complex)
        psi[index] = 1.0
        return cls.pure(space, psi)

    def expect(self, op):
        if op.space != self.space:
            raise DimensionMismatchError('operator and state live on different spaces')
        return complex(np.trace(op.matrix @ self.matrix))

    def populations(self):
        return np.real(np.diag(self.matrix)).copy()

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])


@dataclass(frozen=True, eq=False)
class LindbladModel:
    hamiltonian: Operator
    collapse_channels: tuple = ()

    def __post_init__(self):
        channels = tuple((op, float(rate)) for op, rate in self.collapse_channels)
        for op, rate in channels:
            if op.space != self.hamiltonian.space:
                raise DimensionMismatchError('collapse operator lives on a different space than the Hamiltonian')
            if not np.isfinite(rate) or rate < 0:
                raise ParameterError(f'collapse rate must be finite and non-negative, got {rate}')
        if not self.hamiltonian.is_hermitian():
            raise ParameterError('Hamiltonian is not Hermitian')
        object.__setattr__(self, 'collapse_channels', channels)

    @property
    def space(self):
        return self.hamiltonian.space

    @cached_property
    def liouvillian(self):
        d = self.space.dim
        eye = np.eye(d)
        h = self.hamiltonian.matrix
        L = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
        for op, rate in self.collapse_channels:
            if rate == 0:
                continue
            c = op.matrix
            cdc = c.conj().T @ c
            L = L + rate * (np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye))
        L.setflags(write=False)
        return L

    def apply(self, rho):
        """L(rho) as a matrix."""
        d = self.space.dim
        return unvec(self.liouvillian @ vec(rho.matrix if isinstance(rho, DensityMatrix) else rho), d)


def vec(matrix):
    return np.asarray(matrix).reshape(-1, order='F')


def unvec(vector, dim):
    return np.asarray(vector).reshape(dim, dim, order='F')


def _hermitize(m):
    return 0.5 * (m + m.conj().T)


# -- standard operators -----------------------------------------------------

def identity(n):
    return Operator.from_matrix(np.eye(n))


def destroy(n):
    return Operator.from_matrix(np.diag(np.sqrt(np.arange(1, n)), 1))


def sigma_plus():
    return Operator.from_matrix([[0, 1], [0, 0]])


def sigma_minus():
    return Operator.from_matrix([[0, 0], [1, 0]])


def sigma_z():
    return Operator.from_matrix([[1, 0], [0, -1]])


def sigma_x():
    return Operator.from_matrix([[0, 1], [1, 0]])


def sigma_y():
    return Operator.from_matrix([[0, -1j], [1j, 0]])


def projector(n, index):
    m = np.zeros((n, n))
    m[index, index] = 1.0
    return Operator.from_matrix(m)


def tensor_product(factors):
    factors = list(factors)
    if not factors:
        raise ParameterError('tensor_product needs at least one factor')
    dims = tuple(d for f in factors for d in f.space.subsystem_dims)
    matrix = reduce(np.kron, [f.matrix for f in factors])
    return Operator(HilbertSpace(dims), matrix)


def embed(op, position, space):
    """Place a single-subsystem operator at ``position`` of ``space``."""
    dims = space.subsystem_dims
    if op.space.dim != dims[position]:
        raise DimensionMismatchError(
            f'operator of size {op.space.dim} cannot act on subsystem {position} of size {dims[position]}')
    factors = [op if k == position else identity(d) for k, d in enumerate(dims)]
    return tensor_product(factors)


# -- solvers ---------------------------------------------------------------

def evolve_master(model, rho0, grid, method='BDF'):
    """Integrate the master equation on ``grid`` starting from ``rho0`` at ``grid.start``."""
    if rho0.space != model.space:
        raise DimensionMismatchError(
            f'initial state space {rho0.space.subsystem_dims} does not match model space {model.space.subsystem_dims}')
    times = grid.times()
    L = model.liouvillian
    if not np.any(L):
        return [DensityMatrix(rho0.space, rho0.matrix) for _ in times]

    sol = solve_ivp(lambda t, y: L @ y, (times[0], times[-1]), vec(rho0.matrix).astype(complex),
                    method=method, t_eval=times, rtol=RTOL, atol=ATOL, jac=L)
    if not sol.success:
        raise ConvergenceError(f'master-equation integration failed: {sol.message}',
                               rtol=RTOL, atol=ATOL, method=method)

    d = model.space.dim
    states = []
    for k in range(sol.y.shape[1]):
        m = _hermitize(unvec(sol.y[:, k], d))
        drift = abs(np.trace(m).real - 1.0)
        if drift > TRACE_DRIFT_TOL:
            raise ConvergenceError(f'trace drifted by {drift:.2e} at t={times[k]:.3e} s', time=float(times[k]))
        try:
            states.append(DensityMatrix(model.space, m))
        except ParameterError as e:
            raise ConvergenceError(f'integrator produced an invalid state at t={times[k]:.3e} s: {e}',
                                   time=float(times[k])) from e
    return states


def steady_state(model):
    """Null vector of the Liouvillian, normalised to unit trace.

    Uniqueness is required: the second-smallest singular value must exceed
    the smallest by UNIQUENESS_RATIO.
    """
    d = model.space.dim
    if d == 1:
        return DensityMatrix(model.space, np.ones((1, 1)))
    L = model.liouvillian
    _, s, vh = svd(L)
    scale = s[0]
    if scale == 0:
        raise DegenerateSteadyStateError('Liouvillian is identically zero; every state is stationary')
    smallest, second = s[-1], s[-2]
    if second <= UNIQUENESS_RATIO * smallest or second <= 1e-12 * scale:
        raise DegenerateSteadyStateError(
            f'steady state is not unique (singular values {smallest:.3e}, {second:.3e})',
            smallest=float(smallest), second=float(second))

    rho = unvec(vh[-1].conj(), d)
    trace = np.trace(rho)
    if abs(trace) < 1e-12:
        raise DegenerateSteadyStateError('null vector of the Liouvillian is traceless')
    rho = _hermitize(rho / trace)
    residual = np.linalg.norm(L @ vec(rho))
    if residual > STEADY_RESIDUAL * scale:
        raise ConvergenceError(f'steady-state residual {residual:.3e} exceeds tolerance',
                               residual=float(residual), norm=float(scale))
    return DensityMatrix(model.space, rho)


def _propagate(L, x, times):
    """exp(L t) x at each of the uniformly spaced ``times``."""
    out = np.empty((len(times), x.size), dtype=complex)
    y = expm(L * times[0]) @ x if times[0] > 0 else x.copy()
    step = expm(L * (times[1] - times[0]))
    out[0] = y
    for k in range(1, len(times)):
        y = step @ y
        out[k] = y
    return out


def two_time_correlation(model, rho_ss, A, B, taugrid):
    """G(tau) = Tr[B exp(L tau)(A rho A^dag)] on ``taugrid``.

    The conditional state is propagated normalised by <A^dag A> and rescaled
    afterwards, which keeps relative precision when photon numbers are tiny.
    """
    for op in (A, B):
        if op.space != model.space:
            raise DimensionMismatchError('correlation operators live on a different space than the model')
    if rho_ss.space != model.space:
        raise DimensionMismatchError('state lives on a different space than the model')

    L = model.liouvillian
    r = vec(rho_ss.matrix)
    residual = np.linalg.norm(L @ r)
    if residual > STEADY_RESIDUAL * np.linalg.norm(L):
        raise NonStationaryError(f'input state is not stationary (residual {residual:.3e})',
                                 residual=float(residual))

    a = A.matrix
    conditioned = a @ rho_ss.matrix @ a.conj().T
    weight = np.trace(conditioned).real
    times = taugrid.times()
    if weight <= 0:
        return np.zeros(len(times), dtype=complex)
    traj = _propagate(L, vec(conditioned / weight), times)
    b = B.matrix.reshape(-1)
    return weight * (traj @ b)


def g2_function(model, rho_ss, A, taugrid):
    """Normalised g2(tau) = G(tau) / <A^dag A>^2 with B = A^dag A."""
    number = A.dag() @ A
    mean = rho_ss.expect(number).real
    if mean <= 0:
        raise PhysicsError('g2 is undefined for an unoccupied mode', mean=mean)
    corr = two_time_correlation(model, rho_ss, A, number, taugrid)
    return np.real(corr) / mean ** 2


def g2_at_zero(rho_ss, A):
    a = A.matrix
    ad = a.conj().T
    mean = np.trace(ad @ a @ rho_ss.matrix).real
    if mean <= 0:
        raise PhysicsError('g2 is undefined for an unoccupied mode', mean=mean)
    return float(np.trace(ad @ ad @ a @ a @ rho_ss.matrix).real / mean ** 2)


@dataclass(frozen=True, eq=False)
class FockSolution:
    cutoff: int
    model: LindbladModel
    state: DensityMatrix
    photon_number: float


def converge_fock_cutoff(build, floor=FOCK_FLOOR, tol=FOCK_TOL, max_cutoff=FOCK_MAX):
    """Double the Fock cutoff until the steady-state photon number settles.

    ``build(cutoff)`` returns ``(LindbladModel, number_operator)``.
    """
    cutoff = max(int(floor), FOCK_FLOOR)
    model, number = build(cutoff)
    state = steady_state(model)
    n = state.expect(number).real
    while True:
        nxt = 2 * cutoff
        if nxt > max_cutoff:
            raise ConvergenceError(
                f'Fock cutoff did not converge below {max_cutoff} (last photon number {n:.6g})',
                cutoff=cutoff, photon_number=float(n))
        model2, number2 = build(nxt)
        state2 = steady_state(model2)
        n2 = state2.expect(number2).real
        if abs(n2 - n) < tol:
            return FockSolution(nxt, model2, state2, float(n2))
        logger.debug('Fock cutoff %d -> %d: photon number %.6g -> %.6g', cutoff, nxt, n, n2)
        cutoff, n = nxt, n2

"""Split-step Fourier time evolution for the linear and logarithmic Schroedinger equations."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh

from .errors import GridMismatch, UnstableStep
from .grid import FLOOR_RELATIVE, Grid
from .state import PhysicalConstants, WaveFunction, normalize

log = logging.getLogger(__name__)

# largest tolerated change of the norm within one step
MAX_STEP_NORM_DRIFT = 1e-6


@dataclass(frozen=True)
class PotentialSpec:
    """Time-independent potential U(x) sampled on a grid.

    ``params`` holds omega (harmonic) or gamma (quartic).  For analytic
    kinds the force is evaluated in closed form; sampled potentials are
    differentiated spectrally.
    """

    kind: str
    grid: Grid
    values: np.ndarray
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in ("free", "harmonic", "quartic", "custom"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        values = np.array(self.values, dtype=float)
        self.grid.check(values)
        if not np.all(np.isfinite(values)):
            raise ValueError("potential values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def free(cls, grid: Grid) -> "PotentialSpec":
        return cls("free", grid, np.zeros(grid.shape))

    @classmethod
    def harmonic(cls, grid: Grid, omega: float, mass: float = 1.0, seam: float = 0.0) -> "PotentialSpec":
        """m omega^2 x^2 / 2 per axis.

        On the periodic cell the parabola has a kink at x = +-L/2.  A positive
        ``seam`` rounds it off within that distance of the cell boundary, so
        that U is smooth and periodic while remaining exactly harmonic
        elsewhere (up to quadrature error of order 1e-10).
        """
        if seam:
            line = _rounded_parabola(grid, seam) * mass * omega**2
            u = sum(line[_axis_slice(grid.n_dims, ax)] for ax in range(grid.n_dims))
        else:
            u = 0.5 * mass * omega**2 * sum(x**2 for x in grid.coords)
        params = (("omega", float(omega)), ("mass", float(mass)), ("seam", float(seam)))
        return cls("harmonic", grid, u, params)

    @classmethod
    def quartic(cls, grid: Grid, gamma: float) -> "PotentialSpec":
        u = gamma * sum(x**4 for x in grid.coords)
        return cls("quartic", grid, u, (("gamma", float(gamma)),))

    @classmethod
    def custom(cls, grid: Grid, values) -> "PotentialSpec":
        return cls("custom", grid, values)

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    def gradient(self) -> np.ndarray:
        """Force field -F = grad U, shape (n_dims, *grid.shape)."""
        xs = self.grid.coords
        if self.kind == "free":
            return np.zeros((self.grid.n_dims,) + self.grid.shape)
        if self.kind == "harmonic" and not self.param("seam"):
            k = self.param("mass") * self.param("omega") ** 2
            return np.stack([k * x for x in xs])
        if self.kind == "quartic":
            return np.stack([4 * self.param("gamma") * x**3 for x in xs])
        return self.grid.gradient(self.values)


def _axis_slice(n_dims: int, ax: int):
    index = [None] * n_dims
    index[ax] = slice(None)
    return tuple(index)


def _rounded_parabola(grid: Grid, seam: float) -> np.ndarray:
    """x^2 / 2 on the grid axis with the periodic kink smoothed over +-seam.

    The second derivative 1 - L phi, phi a unit-mass C-infinity bump centred
    on the cell boundary, has zero mean; two spectral antiderivatives give a
    smooth periodic function equal to x^2 / 2 away from the bump.  The bump
    spectrum decays slowly, so samples of U are accurate to ~1e-10 but its
    spectral slope only to ~1e-7.
    """
    x, L = grid.axis, grid.extent
    if not 0 < seam < L / 4:
        raise ValueError("seam must lie in (0, L/4)")
    z = (L / 2 - np.abs(x)) / seam
    inside = np.abs(z) < 1
    bump = np.zeros_like(x)
    bump[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    phi = bump / (np.sum(bump) * grid.spacing)
    k = grid.wavenumber_axis
    spectrum = np.fft.fft(1.0 - L * phi)
    spectrum[0] = 0.0
    nonzero = k != 0
    spectrum[nonzero] /= -k[nonzero] ** 2
    u = np.fft.ifft(spectrum).real
    return u - u[grid.points // 2]


@dataclass(frozen=True)
class EvolutionSpec:
    dt: float
    n_steps: int
    nonlinearity_b: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")


StepCallback = Callable[[int, WaveFunction], None]


def _check(psi: WaveFunction, U: PotentialSpec) -> None:
    if psi.grid != U.grid:
        raise GridMismatch("wavefunction and potential live on different grids")


def _split_step(psi: WaveFunction, U: PotentialSpec, dt: float, n_steps: int, b: float,
                callback: Optional[StepCallback], every: int) -> WaveFunction:
    grid, c = psi.grid, psi.constants
    hbar, m = c.hbar, c.mass
    half_kinetic = np.exp(-0.25j * hbar * grid.k_squared * dt / m)
    full_kinetic = half_kinetic * half_kinetic
    undo_half = np.conj(half_kinetic)
    potential_phase = np.exp(-1j * U.values * dt / hbar)

    spectrum = grid.fft(psi.psi) * half_kinetic
    norm_prev = psi.norm()
    for step in range(1, n_steps + 1):
        field = grid.ifft(spectrum)
        if b:
            rho = np.abs(field) ** 2
            log_rho = np.log(np.maximum(rho, FLOOR_RELATIVE * rho.max()))
            field *= potential_phase * np.exp(-1j * b * log_rho * dt / hbar)
        else:
            field *= potential_phase
        norm = float(np.sum(np.abs(field) ** 2) * grid.cell_volume)
        if abs(norm - norm_prev) > MAX_STEP_NORM_DRIFT or not np.isfinite(norm):
            raise UnstableStep(f"norm changed from {norm_prev:.3e} to {norm:.3e} at step {step}")
        norm_prev = norm
        spectrum = grid.fft(field)
        spectrum *= full_kinetic if step < n_steps else half_kinetic
        if callback is not None and step % every == 0 and step < n_steps:
            callback(step, psi.replace(grid.ifft(spectrum * undo_half)))
    out = psi.replace(grid.ifft(spectrum))
    if callback is not None and n_steps % every == 0:
        callback(n_steps, out)
    return out


def evolve_linear(psi: WaveFunction, U: PotentialSpec, spec: EvolutionSpec, *, reverse: bool = False,
                  callback: Optional[StepCallback] = None, every: int = 1) -> WaveFunction:
    """Strang splitting (half kinetic, potential, half kinetic) for the linear equation.

    ``reverse=True`` integrates backwards in time with the same step size.
    ``callback(step, state)`` is invoked every ``every`` steps.
    """
    if spec.nonlinearity_b != 0:
        raise ValueError("evolve_linear requires nonlinearity_b == 0; use evolve_log_nls")
    _check(psi, U)
    dt = -spec.dt if reverse else spec.dt
    return _split_step(psi, U, dt, spec.n_steps, 0.0, callback, every)


def evolve_log_nls(psi: WaveFunction, U: PotentialSpec, spec: EvolutionSpec, *, reverse: bool = False,
                   callback: Optional[StepCallback] = None, every: int = 1) -> WaveFunction:
    """Strang splitting with the pointwise phase (U + b ln|psi|^2) dt / hbar."""
    if spec.nonlinearity_b == 0:
        raise ValueError("evolve_log_nls requires a nonzero nonlinearity_b")
    _check(psi, U)
    dt = -spec.dt if reverse else spec.dt
    return _split_step(psi, U, dt, spec.n_steps, spec.nonlinearity_b, callback, every)


def evolve(psi: WaveFunction, U: PotentialSpec, spec: EvolutionSpec, **kwargs) -> WaveFunction:
    """Dispatch on the nonlinearity coefficient."""
    if spec.nonlinearity_b:
        return evolve_log_nls(psi, U, spec, **kwargs)
    return evolve_linear(psi, U, spec, **kwargs)


def snapshots(psi: WaveFunction, U: PotentialSpec, dt_fd: float, substeps: int = 16):
    """States at t0 - dt_fd, t0 and t0 + dt_fd around ``psi`` taken at t0.

    Each side is integrated with ``substeps`` Strang steps, backwards and
    forwards from the same state, so centred differences are symmetric.
    """
    spec = EvolutionSpec(dt_fd / substeps, substeps)
    return evolve_linear(psi, U, spec, reverse=True), psi, evolve_linear(psi, U, spec)


def stationary_state(U: PotentialSpec, constants: PhysicalConstants | None = None, level: int = 0) -> WaveFunction:
    """Eigenstate of the lattice Hamiltonian used by the split-step propagator.

    Dense diagonalization of the Fourier kinetic term plus the sampled
    potential.  On 2D grids the potential must be separable (harmonic, quartic
    or free) and the state is the product of 1D ground states; ``level`` then
    applies to the first axis only.
    """
    constants = constants or PhysicalConstants()
    grid = U.grid
    if grid.n_dims == 1:
        return normalize(WaveFunction(grid, _lattice_eigenvector(grid, U.values, constants, level), constants))
    if U.kind == "custom":
        raise ValueError("2D stationary states need a separable potential")
    line = Grid(1, grid.points, grid.extent)
    # U(x, y) = u(x) + u(y) on identical axes, so u(x) = U(x, y0) - U(x0, y0) / 2
    u_line = U.values[:, 0] - U.values[0, 0] / 2
    first = _lattice_eigenvector(line, u_line, constants, level)
    second = _lattice_eigenvector(line, u_line, constants, 0)
    return normalize(WaveFunction(grid, np.outer(first, second), constants))


def _lattice_eigenvector(grid: Grid, u: np.ndarray, constants: PhysicalConstants, level: int) -> np.ndarray:
    n = grid.points
    k2 = grid.wavenumber_axis**2
    kinetic = np.fft.ifft(k2[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0).real
    kinetic = 0.5 * (kinetic + kinetic.T) * constants.hbar**2 / (2 * constants.mass)
    _, vecs = eigh(kinetic + np.diag(u), subset_by_index=[level, level])
    vec = vecs[:, 0]
    # fix the sign convention: largest component positive
    return vec * np.sign(vec[np.argmax(np.abs(vec))])

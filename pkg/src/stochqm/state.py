"""Wavefunctions, their hydrodynamic decomposition and momentum representation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_hermite, factorial

from .errors import GridMismatch, ZeroState
from .grid import FLOOR_RELATIVE, Grid


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0 or not self.mass > 0:
            raise ValueError("hbar and mass must be positive")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WaveFunction:
    grid: Grid
    psi: np.ndarray
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        self.grid.check(self.psi)
        object.__setattr__(self, "psi", _frozen(np.asarray(self.psi, dtype=complex)))

    @property
    def rho(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def norm(self) -> float:
        return float(self.grid.integrate(self.rho))

    def replace(self, psi: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, psi, self.constants)

    def same_setup(self, other: "WaveFunction") -> bool:
        return self.grid == other.grid and self.constants == other.constants


@dataclass(frozen=True)
class HydroFields:
    """Density, log-density and velocity of a state (v is (n_dims, *shape))."""

    grid: Grid
    constants: PhysicalConstants
    rho: np.ndarray
    logrho: np.ndarray
    velocity: np.ndarray

    @property
    def phase_gradient(self) -> np.ndarray:
        return self.constants.mass * self.velocity

    @property
    def current(self) -> np.ndarray:
        return self.rho * self.velocity


@dataclass(frozen=True)
class MomentumRepresentation:
    """psi-hat sampled on an ascending momentum lattice with spacing ``dp``."""

    p: np.ndarray
    values: np.ndarray
    dp: float
    n_dims: int

    @property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.p] * self.n_dims), indexing="ij"))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def integrate(self, f: np.ndarray) -> float:
        return np.sum(f) * self.dp**self.n_dims


def density_floor(rho: np.ndarray) -> float:
    return FLOOR_RELATIVE * float(np.max(rho))


def normalize(wf: WaveFunction) -> WaveFunction:
    n2 = wf.norm()
    if not n2 >= 1e-300:
        raise ZeroState(f"state norm {n2!r} is too small to normalize")
    return wf.replace(wf.psi / np.sqrt(n2))


def hydrodynamic_fields(wf: WaveFunction) -> HydroFields:
    """Madelung decomposition using the probability current for the velocity."""
    grid, c = wf.grid, wf.constants
    rho = wf.rho
    floored = np.maximum(rho, density_floor(rho))
    # Im(psi* grad psi) = a grad b - b grad a; exactly zero for real psi
    a, b = wf.psi.real, wf.psi.imag
    current = (c.hbar / c.mass) * (a * grid.gradient(b) - b * grid.gradient(a))
    return HydroFields(grid, c, rho, np.log(floored), current / floored)


def momentum_representation(wf: WaveFunction) -> MomentumRepresentation:
    grid, hbar = wf.grid, wf.constants.hbar
    n = grid.n_dims
    # phase factor moves the origin of the DFT sum from x = -L/2 to x = 0
    shift = np.ones(grid.shape, dtype=complex)
    for k in grid.wavenumbers:
        shift = shift * np.exp(0.5j * k * grid.extent)
    values = grid.fft(wf.psi) * shift * grid.cell_volume / (2 * np.pi * hbar) ** (n / 2)
    values = np.fft.fftshift(values)
    p = hbar * np.fft.fftshift(grid.wavenumber_axis)
    return MomentumRepresentation(p, values, hbar * 2 * np.pi / grid.extent, n)


# weights integrating the degree-7 interpolant through nodes -3..4 over [0, 1]
_NODES = np.arange(-3, 5)
_CELL_WEIGHTS = np.linalg.solve(np.vander(_NODES, increasing=True).T, 1.0 / np.arange(1, 9))


def _cumulative_integral(f: np.ndarray, dx: float, axis: int) -> np.ndarray:
    """Running integral from the first sample, eighth order in dx.

    Stencils wrap around the cell; the first and last few intervals therefore
    use samples from the opposite edge, which only matters where the density
    (and hence the reassembled state) is negligible.
    """
    f = np.moveaxis(f, axis, 0)
    cells = sum(w * np.roll(f, -int(j), axis=0) for w, j in zip(_CELL_WEIGHTS, _NODES)) * dx
    out = np.zeros_like(f)
    out[1:] = np.cumsum(cells[:-1], axis=0)
    return np.moveaxis(out, 0, axis)


def reassemble(h: HydroFields) -> WaveFunction:
    """Rebuild sqrt(rho) exp(i S / hbar) with S line-integrated from m v.

    In 2D, S is accumulated along the first axis on the row through the
    density maximum and then along the second axis away from that row, which
    is path independent for curl-free v.  Velocities in the far tails are
    unreliable, so neither path leg runs through them to reach the bulk.
    """
    grid, c = h.grid, h.constants
    dx = grid.spacing
    mv = c.mass * h.velocity
    if grid.n_dims == 1:
        S = _cumulative_integral(mv[0], dx, 0)
    else:
        j0 = int(np.unravel_index(np.argmax(h.rho), grid.shape)[1])
        base = _cumulative_integral(mv[0][:, j0], dx, 0)
        up = _cumulative_integral(mv[1], dx, 1)
        S = base[:, None] + up - up[:, j0:j0 + 1]
    return WaveFunction(grid, np.sqrt(h.rho) * np.exp(1j * S / c.hbar), c)


def imprint_phase(wf: WaveFunction, action: np.ndarray) -> WaveFunction:
    """Multiply by exp(i S / hbar) for an action field S."""
    return wf.replace(wf.psi * np.exp(1j * np.asarray(action) / wf.constants.hbar))


# -- named initial conditions ------------------------------------------------


def _per_axis(value, n_dims):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n_dims,))
    return tuple(float(v) for v in arr)


def gaussian(grid: Grid, constants: PhysicalConstants | None = None, sigma=1.0, center=0.0,
             momentum=0.0, periodic: bool = False) -> WaveFunction:
    """Minimum-uncertainty packet; ``sigma`` is the position standard deviation.

    With ``periodic=True`` the packet is summed over its periodic images so
    that the sampled state is smooth across the cell boundary.  The momentum
    should then be a multiple of 2 pi hbar / L.
    """
    constants = constants or PhysicalConstants()
    sig = _per_axis(sigma, grid.n_dims)
    x0 = _per_axis(center, grid.n_dims)
    p0 = _per_axis(momentum, grid.n_dims)
    L = grid.extent
    psi = np.ones(grid.shape, dtype=complex)
    for x, s, c0, q in zip(grid.coords, sig, x0, p0):
        if periodic:
            reach = int(np.ceil(40 * s / L)) + 1
            shifts = L * np.arange(-reach, reach + 1)
        else:
            shifts = [0.0]
        factor = sum(np.exp(-((x - c0 - d) ** 2) / (4 * s**2) + 1j * q * (x - d) / constants.hbar) for d in shifts)
        psi = psi * (2 * np.pi * s**2) ** -0.25 * factor
    return normalize(WaveFunction(grid, psi, constants))


def coherent_state(grid: Grid, constants: PhysicalConstants | None = None, omega=1.0, x0=0.0, p0=0.0,
                   t: float = 0.0, periodic: bool = False) -> WaveFunction:
    """Displaced harmonic ground state, carried along its classical orbit to time ``t``.

    The global phase is dropped.
    """
    constants = constants or PhysicalConstants()
    m, hbar = constants.mass, constants.hbar
    x0 = np.asarray(_per_axis(x0, grid.n_dims))
    p0 = np.asarray(_per_axis(p0, grid.n_dims))
    xt = x0 * np.cos(omega * t) + p0 / (m * omega) * np.sin(omega * t)
    pt = p0 * np.cos(omega * t) - m * omega * x0 * np.sin(omega * t)
    sigma = np.sqrt(hbar / (2 * m * omega))
    return gaussian(grid, constants, sigma, xt, pt, periodic=periodic)


def harmonic_eigenstate(grid: Grid, constants: PhysicalConstants | None = None, omega=1.0, n=0,
                        center=0.0) -> WaveFunction:
    """Product of 1D oscillator eigenfunctions, quantum number ``n`` per axis."""
    constants = constants or PhysicalConstants()
    m, hbar = constants.mass, constants.hbar
    ns = [int(v) for v in np.broadcast_to(n, (grid.n_dims,))]
    x0 = _per_axis(center, grid.n_dims)
    psi = np.ones(grid.shape, dtype=complex)
    for x, q, c0 in zip(grid.coords, ns, x0):
        xi = np.sqrt(m * omega / hbar) * (x - c0)
        norm = (m * omega / (np.pi * hbar)) ** 0.25 / np.sqrt(2.0**q * factorial(q))
        psi = psi * norm * eval_hermite(q, xi) * np.exp(-(xi**2) / 2)
    return normalize(WaveFunction(grid, psi, constants))


def gausson(grid: Grid, constants: PhysicalConstants | None = None, b=-1.0, center=0.0) -> WaveFunction:
    """Stationary Gaussian of the logarithmic equation, A exp(-a x^2) with a = m|b|/hbar^2."""
    constants = constants or PhysicalConstants()
    a = constants.mass * abs(b) / constants.hbar**2
    return gaussian(grid, constants, sigma=np.sqrt(1.0 / (4 * a)), center=center)


def cat_state(grid: Grid, constants: PhysicalConstants | None = None, sigma=1.0, separation=4.0,
              momentum=0.0) -> WaveFunction:
    """Equal superposition of two Gaussians displaced by +-separation/2 along axis 1."""
    constants = constants or PhysicalConstants()
    shift = np.zeros(grid.n_dims)
    shift[0] = separation / 2
    left = gaussian(grid, constants, sigma, -shift, momentum)
    right = gaussian(grid, constants, sigma, shift, momentum)
    return normalize(WaveFunction(grid, left.psi + right.psi, constants))


def plane_wave(grid: Grid, constants: PhysicalConstants | None = None, mode=1) -> WaveFunction:
    """Normalized Fourier mode exp(i p0 x / hbar) with p0 = 2 pi hbar mode / L on axis 1."""
    constants = constants or PhysicalConstants()
    k = 2 * np.pi * mode / grid.extent
    psi = np.exp(1j * k * grid.coords[0]).astype(complex)
    return normalize(WaveFunction(grid, psi, constants))

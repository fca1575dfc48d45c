"""Characteristic function G(x, s) = psi(x + s/2) psi*(x - s/2) and the Wigner function.

Separations are sampled at s_m = 2 m dx so that x +- s/2 are grid points.
Pairs further apart than half the cell are periodic images of each other;
the Wigner sum keeps only |m| < N/4 (minimum image), which leaves
G(x, 0) = rho and hence the position marginal exact.  The conjugate momentum
lattice then has spacing dp = pi hbar / (N dx).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, SnapshotMismatch
from .grid import Grid
from .propagators import PotentialSpec
from .state import WaveFunction


def _separation_index(n: int) -> np.ndarray:
    return np.arange(-n // 2, n // 2)


@dataclass(frozen=True)
class CharacteristicField:
    """Complex samples on (x, s); array axes are (x_1..x_n, s_1..s_n), s ascending."""

    grid: Grid
    values: np.ndarray

    @property
    def s(self) -> np.ndarray:
        return 2 * self.grid.spacing * _separation_index(self.grid.points)

    @property
    def ds(self) -> float:
        return 2 * self.grid.spacing

    @property
    def zero_index(self) -> int:
        return self.grid.points // 2

    @property
    def mask(self) -> np.ndarray:
        """Minimum-image separations |m| < N/4 on every axis, broadcastable to ``values``."""
        keep = np.abs(_separation_index(self.grid.points)) < self.grid.points // 4
        n = self.grid.n_dims
        out = np.ones((1,) * (2 * n), dtype=bool)
        for ax in range(n):
            shape = [1] * (2 * n)
            shape[n + ax] = self.grid.points
            out = out & keep.reshape(shape)
        return out

    def s_derivative(self, axis: int = 0) -> np.ndarray:
        """Spectral derivative along s_axis; G is 2L-periodic in s, so no window is needed."""
        n = self.grid.n_dims
        N = self.grid.points
        k = 2 * np.pi * np.fft.fftfreq(N, d=self.ds)
        k[N // 2] = 0.0
        shape = [1] * (2 * n)
        shape[n + axis] = N
        ax = n + axis
        spectrum = np.fft.fft(np.fft.ifftshift(self.values, axes=ax), axis=ax)
        return np.fft.fftshift(np.fft.ifft(1j * k.reshape(shape) * spectrum, axis=ax), axes=ax)

    def at_zero(self) -> np.ndarray:
        n = self.grid.n_dims
        return self.values[(Ellipsis,) + (self.zero_index,) * n]


def _shifted(psi: np.ndarray, n_dims: int, sign: int) -> np.ndarray:
    """psi at index j + sign * m as an array over (j, m)."""
    N = psi.shape[0]
    j = np.arange(N)
    m = _separation_index(N)
    idx = (j[:, None] + sign * m[None, :]) % N
    index = []
    for ax in range(n_dims):
        # axes (j_ax, m_ax) of idx go to positions ax and n_dims + ax
        index.append(idx.reshape([N if d in (ax, n_dims + ax) else 1 for d in range(2 * n_dims)]))
    return psi[tuple(index)]


def momentum_density_from_characteristic(G: CharacteristicField, hbar: float) -> np.ndarray:
    """(hbar / i) grad_s G at s = 0, the momentum density rho m v; shape (n, *grid.shape)."""
    n = G.grid.n_dims
    zero = (Ellipsis,) + (G.zero_index,) * n
    return np.stack([(hbar / 1j * G.s_derivative(ax))[zero].real for ax in range(n)])


def characteristic_function(wf: WaveFunction) -> CharacteristicField:
    n = wf.grid.n_dims
    G = _shifted(wf.psi, n, +1) * np.conj(_shifted(wf.psi, n, -1))
    return CharacteristicField(wf.grid, G)


@dataclass(frozen=True)
class PhaseSpaceField:
    """Real samples W on (x, p); array axes (x_1..x_n, p_1..p_n), p ascending."""

    grid: Grid
    p: np.ndarray
    dp: float
    values: np.ndarray

    @property
    def n_dims(self) -> int:
        return self.grid.n_dims

    @property
    def cell(self) -> float:
        return (self.grid.spacing * self.dp) ** self.n_dims

    @property
    def coords(self):
        """(x_1..x_n, p_1..p_n) broadcast over the full phase-space shape."""
        n = self.n_dims
        return tuple(np.meshgrid(*([self.grid.axis] * n + [self.p] * n), indexing="ij"))

    def position_marginal(self) -> np.ndarray:
        n = self.n_dims
        return self.values.sum(axis=tuple(range(n, 2 * n))) * self.dp**n

    def momentum_marginal(self) -> np.ndarray:
        n = self.n_dims
        return self.values.sum(axis=tuple(range(n))) * self.grid.spacing**n

    def total(self) -> float:
        return float(self.values.sum() * self.cell)


def wigner_lattice(grid: Grid, hbar: float) -> tuple[np.ndarray, float]:
    dp = np.pi * hbar / (grid.points * grid.spacing)
    return dp * _separation_index(grid.points), dp


def wigner_from_characteristic(G: CharacteristicField, hbar: float) -> PhaseSpaceField:
    """(2 pi hbar)^-n sum_m G(x, s_m) exp(-i s_m p / hbar) ds^n over the minimum-image window."""
    grid = G.grid
    n = grid.n_dims
    s_axes = tuple(range(n, 2 * n))
    masked = np.where(G.mask, G.values, 0.0)
    spectrum = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(masked, axes=s_axes), axes=s_axes), axes=s_axes)
    W = spectrum * (G.ds / (2 * np.pi * hbar)) ** n
    scale = max(1.0, float(np.abs(W).max()))
    residue = float(np.abs(W.imag).max())
    if residue > 1e-12 * scale:
        raise ValueError(f"Wigner function has imaginary residue {residue:.2e}; input is not Hermitian")
    p, dp = wigner_lattice(grid, hbar)
    return PhaseSpaceField(grid, p, dp, W.real)


def wigner_transform(wf: WaveFunction) -> PhaseSpaceField:
    return wigner_from_characteristic(characteristic_function(wf), wf.constants.hbar)


def momentum_density_at(wf: WaveFunction, p: np.ndarray) -> np.ndarray:
    """|psi-hat|^2 at arbitrary momenta (ascending 1D axis, reused on every dimension).

    Direct quadrature of (2 pi hbar)^(-n/2) int psi exp(-i p.x / hbar) dx,
    spectrally accurate for states that vanish at the cell boundary.
    """
    grid, hbar = wf.grid, wf.constants.hbar
    kernel = np.exp(-1j * np.outer(p, grid.axis) / hbar) * grid.spacing / np.sqrt(2 * np.pi * hbar)
    out = wf.psi
    for ax in range(grid.n_dims):
        out = np.moveaxis(np.tensordot(kernel, out, axes=([1], [ax])), 0, ax)
    return np.abs(out) ** 2


def phase_space_expectation(W: PhaseSpaceField, A) -> float:
    """Sum of A W dx^n dp^n; ``A`` is an array on the phase-space lattice or a callable of coords."""
    if callable(A):
        A = A(*W.coords)
    if isinstance(A, PhaseSpaceField):
        if A.grid != W.grid or A.dp != W.dp:
            raise GridMismatch("observable and Wigner function live on different lattices")
        A = A.values
    A = np.asarray(A)
    if A.shape != W.values.shape:
        try:
            A = np.broadcast_to(A, W.values.shape)
        except ValueError as err:
            raise GridMismatch(f"observable shape {A.shape} does not match {W.values.shape}") from err
    if np.iscomplexobj(A) and np.abs(A.imag).max() > 0:
        raise ValueError("phase-space observable must be real")
    return float(np.sum(np.real(A) * W.values) * W.cell)


def characteristic_equation_residual(psi_t: WaveFunction, psi_t_plus: WaveFunction, psi_t_minus: WaveFunction,
                                     U: PotentialSpec, dt_fd: float) -> CharacteristicField:
    """dG/dt - (i hbar / m) grad_s . grad_x G + (i / hbar)(s . grad U) G on the (x, s) lattice.

    The mixed derivative uses grad_s . grad_x G
    = (1/2)[lap psi(x + s/2) psi*(x - s/2) - psi(x + s/2) lap psi*(x - s/2)].
    The time derivative is a centred difference over ``dt_fd``.  Pairs for
    which x + s/2 or x - s/2 wraps around the cell see the potential jump
    at the boundary and are set to zero.
    """
    if not (psi_t.same_setup(psi_t_plus) and psi_t.same_setup(psi_t_minus)) or psi_t.grid != U.grid:
        raise SnapshotMismatch("snapshots must share grid, constants and potential grid")
    grid, c = psi_t.grid, psi_t.constants
    n = grid.n_dims
    G_t = (characteristic_function(psi_t_plus).values - characteristic_function(psi_t_minus).values) / (2 * dt_fd)
    psi = psi_t.psi
    lap = grid.laplacian(psi)
    mixed = 0.5 * (_shifted(lap, n, +1) * np.conj(_shifted(psi, n, -1))
                   - _shifted(psi, n, +1) * np.conj(_shifted(lap, n, -1)))
    G = characteristic_function(psi_t).values
    s = 2 * grid.spacing * _separation_index(grid.points)
    grad = U.gradient()
    s_dot = 0.0
    for ax in range(n):
        g_shape = list(grid.shape) + [1] * n
        s_shape = [1] * (2 * n)
        s_shape[n + ax] = grid.points
        s_dot = s_dot + grad[ax].reshape(g_shape) * s.reshape(s_shape)
    residual = G_t - (1j * c.hbar / c.mass) * mixed + (1j / c.hbar) * s_dot * G
    return CharacteristicField(grid, np.where(unwrapped_pairs(grid), residual, 0.0))


def unwrapped_pairs(grid: Grid) -> np.ndarray:
    """True where both x + s/2 and x - s/2 lie inside the cell without wrapping."""
    N, n = grid.points, grid.n_dims
    j = np.arange(N)[:, None]
    m = _separation_index(N)[None, :]
    ok = (j + m >= 0) & (j + m < N) & (j - m >= 0) & (j - m < N)
    out = np.ones((1,) * (2 * n), dtype=bool)
    for ax in range(n):
        out = out & ok.reshape([N if d in (ax, n + ax) else 1 for d in range(2 * n)])
    return out


def fit_power_law(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def residual_profile(residual: CharacteristicField) -> tuple[np.ndarray, np.ndarray]:
    """Largest |residual| over x for each separation along the first s axis (s >= 0)."""
    grid = residual.grid
    n = grid.n_dims
    vals = np.abs(residual.values)
    vals = vals.max(axis=tuple(range(n)))
    if n == 2:
        vals = vals[:, residual.zero_index]
    s = residual.s
    keep = s >= 0
    return s[keep], vals[keep]

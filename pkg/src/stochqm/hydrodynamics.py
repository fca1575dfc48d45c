"""Madelung fluid: quantum potential, equation residuals and a direct integrator."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NodeFormation, SnapshotMismatch
from .grid import FLOOR_RELATIVE, Grid, unit_index
from .propagators import EvolutionSpec, PotentialSpec
from .state import HydroFields, PhysicalConstants, WaveFunction, density_floor

log = logging.getLogger(__name__)

BULK_LEVEL = 1e-6


@dataclass(frozen=True)
class HydroResiduals:
    """Pointwise residuals of continuity, momentum balance and Hamilton-Jacobi equations."""

    continuity: np.ndarray
    momentum: np.ndarray
    hamilton_jacobi: np.ndarray
    bulk: np.ndarray
    grid: Grid

    def norms(self) -> dict[str, float]:
        out = {}
        m = self.bulk
        for name, field in (("continuity", self.continuity), ("momentum", self.momentum),
                            ("hamilton_jacobi", self.hamilton_jacobi)):
            sq = np.abs(field) ** 2
            if sq.ndim > self.grid.n_dims:
                sq = sq.sum(axis=0)
            out[name + "_max"] = float(np.sqrt(sq[m].max()))
            out[name + "_l2"] = float(np.sqrt(np.sum(sq[m]) * self.grid.cell_volume))
        return out


def _amplitude_quotient(grid: Grid, rho: np.ndarray) -> np.ndarray:
    """Laplacian of sqrt(rho) divided by sqrt(rho), sqrt(rho) floored at sqrt(rho_floor)."""
    a = np.sqrt(np.maximum(rho, 0.0))
    return grid.laplacian(a) / np.maximum(a, np.sqrt(density_floor(rho)))


def quantum_potential(grid: Grid, rho: np.ndarray, constants: PhysicalConstants) -> np.ndarray:
    """Q = -(hbar^2 / 2m) lap(sqrt rho) / sqrt rho."""
    return -(constants.hbar**2 / (2 * constants.mass)) * _amplitude_quotient(grid, rho)


def _quantum_terms(grid: Grid, logd: dict):
    """lap(a)/a and its gradient from derivatives of ln a."""
    n = grid.n_dims
    e = [unit_index(n, k) for k in range(n)]

    def add(*idx):
        return tuple(sum(t) for t in zip(*idx))

    lap_ratio = sum(logd[add(e[k], e[k])] + logd[e[k]] ** 2 for k in range(n))
    grad = []
    for j in range(n):
        g = 0.0
        for k in range(n):
            g = g + logd[add(e[k], e[k], e[j])] + 2 * logd[e[k]] * logd[add(e[k], e[j])]
        grad.append(g)
    return lap_ratio, np.stack(grad)


def quantum_force(wf: WaveFunction) -> np.ndarray:
    """-grad Q / m evaluated from the wavefunction amplitude."""
    grid, c = wf.grid, wf.constants
    logd = {k: v.real for k, v in grid.log_derivatives(wf.psi, 3).items()}
    _, grad = _quantum_terms(grid, logd)
    return (c.hbar**2 / (2 * c.mass**2)) * grad


def _velocity_and_gradient(wf: WaveFunction, logd: dict):
    grid, c = wf.grid, wf.constants
    n = grid.n_dims
    scale = c.hbar / c.mass
    v = np.stack([scale * logd[unit_index(n, k)].imag for k in range(n)])
    dv = np.empty((n, n) + grid.shape)
    for k in range(n):
        for j in range(n):
            idx = tuple(a + b for a, b in zip(unit_index(n, k), unit_index(n, j)))
            dv[k, j] = scale * logd[idx].imag  # d_k v_j
    return v, dv


def madelung_residuals(psi_t: WaveFunction, psi_t_plus: WaveFunction, psi_t_minus: WaveFunction,
                       U: PotentialSpec, dt_fd: float) -> HydroResiduals:
    """Residuals of the hydrodynamic equations on three Schroedinger snapshots.

    Time derivatives are centred differences over ``dt_fd``; space
    derivatives are spectral.
    """
    if not (psi_t.same_setup(psi_t_plus) and psi_t.same_setup(psi_t_minus)) or psi_t.grid != U.grid:
        raise SnapshotMismatch("snapshots must share grid, constants and potential grid")
    grid, c = psi_t.grid, psi_t.constants
    hbar, m = c.hbar, c.mass
    n = grid.n_dims

    rho = psi_t.rho
    current = (hbar / m) * np.imag(np.conj(psi_t.psi) * grid.gradient(psi_t.psi))
    rho_t = (psi_t_plus.rho - psi_t_minus.rho) / (2 * dt_fd)
    continuity = rho_t + grid.divergence(current)

    logd = grid.log_derivatives(psi_t.psi, 3)
    v, dv = _velocity_and_gradient(psi_t, logd)
    v_plus = np.stack([(hbar / m) * d.imag for d in
                       (grid.log_derivatives(psi_t_plus.psi, 1)[unit_index(n, k)] for k in range(n))])
    v_minus = np.stack([(hbar / m) * d.imag for d in
                        (grid.log_derivatives(psi_t_minus.psi, 1)[unit_index(n, k)] for k in range(n))])
    v_t = (v_plus - v_minus) / (2 * dt_fd)
    advection = np.einsum("k...,kj...->j...", v, dv)
    lap_ratio, grad_ratio = _quantum_terms(grid, {k: val.real for k, val in logd.items()})
    momentum = v_t + advection + U.gradient() / m - (hbar**2 / (2 * m**2)) * grad_ratio

    # phase derivative from the snapshot overlap avoids branch cuts
    S_t = hbar * np.angle(psi_t_plus.psi * np.conj(psi_t_minus.psi)) / (2 * dt_fd)
    grad_S2 = (m * v) ** 2
    hamilton_jacobi = S_t + grad_S2.sum(axis=0) / (2 * m) + U.values - (hbar**2 / (2 * m)) * lap_ratio

    return HydroResiduals(continuity, momentum, hamilton_jacobi, grid.bulk_mask(rho, BULK_LEVEL), grid)


# -- direct integration of the fluid equations --------------------------------

# initial densities must stay above this fraction of their maximum
NODELESS_LEVEL = 1e-8
# largest hbar k^2 dt / 2m kept by the low-pass filter; RK4 is stable up to 2.83
RK4_PHASE_LIMIT = 2.6


class _MadelungRHS:
    """Time derivative of (rho, j) for the conservative form of the fluid equations.

    The momentum flux is j j / rho plus the quantum stress
    rho C = alpha (grad grad rho - grad rho grad rho / rho), alpha = -hbar^2 / 4m^2.
    """

    def __init__(self, grid: Grid, U: PotentialSpec, constants: PhysicalConstants):
        self.grid = grid
        self.n = grid.n_dims
        self.alpha = -(constants.hbar**2) / (4 * constants.mass**2)
        self.force = U.gradient() / constants.mass
        self.e = [unit_index(self.n, k) for k in range(self.n)]
        self.second = {(k, j): tuple(a + b for a, b in zip(self.e[k], self.e[j]))
                       for k in range(self.n) for j in range(self.n)}

    def __call__(self, rho: np.ndarray, j: np.ndarray):
        grid, n, e = self.grid, self.n, self.e
        floored = np.maximum(rho, FLOOR_RELATIVE * rho.max())
        d_rho = grid.derivatives(rho, e + list(set(self.second.values())))
        drho = -sum(grid.derivative(j[k], e[k]) for k in range(n))
        dj = np.empty_like(j)
        for col in range(n):
            acc = None
            for k in range(n):
                flux = j[k] * j[col] / floored
                stress = self.alpha * (d_rho[self.second[k, col]] - d_rho[e[k]] * d_rho[e[col]] / floored)
                term = grid.derivative(flux + stress, e[k])
                acc = term if acc is None else acc + term
            dj[col] = -acc - rho * self.force[col]
        return drho, dj


def stability_filter(grid: Grid, constants: PhysicalConstants, dt: float) -> np.ndarray:
    """Exponential low-pass exp(-36 (k/k_c)^16) with hbar k_c^2 dt / 2m = RK4_PHASE_LIMIT.

    The dispersive modes of the fluid equations rotate at hbar k^2 / 2m, so
    explicit RK4 needs the spectrum cut below k_c.  When k_c exceeds the grid
    Nyquist number the filter only touches the outermost modes.
    """
    kc2 = 2 * constants.mass * RK4_PHASE_LIMIT / (constants.hbar * dt)
    return np.exp(-36.0 * (grid.k_squared / kc2) ** 8)


def evolve_madelung(h: HydroFields, U: PotentialSpec, spec: EvolutionSpec, *, return_drift: bool = False):
    """Classic RK4 integration of the Madelung system from hydrodynamic fields.

    The fluid is advanced in conservative variables (rho, j = rho v); this is
    the same system as continuity plus the velocity equation with the
    quantum potential, written so that no third derivative of ln rho is
    needed.  After each step the fields pass through ``stability_filter`` and
    the density is rescaled to unit mass.  The largest per-step mass drift
    before rescaling is logged and, with ``return_drift=True``, returned
    alongside the final fields.

    The initial density must exceed ``NODELESS_LEVEL`` times its maximum
    everywhere.  Gaussian tails that decay into round-off make the discrete
    system ill-posed, so such states are rejected rather than integrated.
    """
    grid, c = h.grid, h.constants
    if grid != U.grid:
        raise SnapshotMismatch("fields and potential live on different grids")
    rho = np.array(h.rho, dtype=float)
    if not rho.min() > NODELESS_LEVEL * rho.max():
        raise NodeFormation(
            f"initial density is not nodeless: min/max = {rho.min() / rho.max():.2e} <= {NODELESS_LEVEL:g}")
    rhs = _MadelungRHS(grid, U, c)
    filt = stability_filter(grid, c, spec.dt)
    j = rho * h.velocity
    dt = spec.dt
    max_drift = 0.0
    for step in range(spec.n_steps):
        k1 = rhs(rho, j)
        k2 = rhs(rho + 0.5 * dt * k1[0], j + 0.5 * dt * k1[1])
        k3 = rhs(rho + 0.5 * dt * k2[0], j + 0.5 * dt * k2[1])
        k4 = rhs(rho + dt * k3[0], j + dt * k3[1])
        rho = rho + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        j = j + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        rho = grid.ifft(grid.fft(rho) * filt).real
        j = grid.ifft(grid.fft(j) * filt).real
        mass = float(grid.integrate(rho))
        if not np.isfinite(mass):
            raise NodeFormation(f"fluid integration diverged at step {step + 1}")
        max_drift = max(max_drift, abs(mass - 1.0))
        rho /= mass
        j /= mass
        if rho.min() < FLOOR_RELATIVE * rho.max():
            raise NodeFormation(f"density fell below the floor at step {step + 1}")
    log.debug("madelung: max per-step mass drift %.3e", max_drift)
    out = HydroFields(grid, c, rho, np.log(rho), j / rho)
    return (out, max_drift) if return_drift else out

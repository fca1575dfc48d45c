"""Expectation values, uncertainties and their cross-checks across representations."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .fluctuations import FluctuationModel, correlation_tensor
from .phase_space import phase_space_expectation, wigner_transform
from .propagators import PotentialSpec
from .state import WaveFunction, hydrodynamic_fields, momentum_representation

# largest imaginary part tolerated in a real expectation value
IMAG_TOLERANCE = 1e-12


def _real(value: complex, what: str) -> float:
    if abs(np.imag(value)) > IMAG_TOLERANCE * max(1.0, abs(value)):
        raise ValueError(f"{what} has imaginary part {np.imag(value):.2e}")
    return float(np.real(value))


def expect_position_function(wf: WaveFunction, F) -> float:
    """Integral of F(x) |psi|^2; ``F`` is an array on the grid or a callable of the coordinates."""
    values = F(*wf.grid.coords) if callable(F) else np.broadcast_to(F, wf.grid.shape)
    return _real(wf.grid.integrate(values * wf.rho), "<F(x)>")


def expect_momentum(wf: WaveFunction) -> np.ndarray:
    grid, hbar = wf.grid, wf.constants.hbar
    grad = grid.gradient(wf.psi)
    vals = -1j * hbar * grid.integrate(np.conj(wf.psi) * grad)
    return np.array([_real(v, "<p>") for v in np.atleast_1d(vals)])


def expect_momentum_squared(wf: WaveFunction) -> float:
    grid, hbar = wf.grid, wf.constants.hbar
    grad = grid.gradient(wf.psi)
    return float(hbar**2 * grid.integrate(np.sum(np.abs(grad) ** 2, axis=0)))


def momentum_squared_from_fluid(wf: WaveFunction) -> float:
    """m^2 int rho (v^2 + Tr C) dx with C from the fluctuation layer (F = 0)."""
    grid, c = wf.grid, wf.constants
    h = hydrodynamic_fields(wf)
    C = correlation_tensor(grid, wf.rho, FluctuationModel.quantum(c), jet_order=0)
    return float(c.mass**2 * grid.integrate(wf.rho * (np.sum(h.velocity**2, axis=0) + C.trace)))


@dataclass(frozen=True)
class KineticSplit:
    """Mean kinetic energy split into flow and internal parts."""

    flow: float
    internal: float
    total: float

    @property
    def discrepancy(self) -> float:
        return abs(self.flow + self.internal - self.total)


def kinetic_energy_split(wf: WaveFunction) -> KineticSplit:
    grid, c = wf.grid, wf.constants
    h = hydrodynamic_fields(wf)
    C = correlation_tensor(grid, wf.rho, FluctuationModel.quantum(c), jet_order=0)
    flow = 0.5 * c.mass * grid.integrate(wf.rho * np.sum(h.velocity**2, axis=0))
    internal = 0.5 * c.mass * grid.integrate(wf.rho * C.trace)
    return KineticSplit(float(flow), float(internal), expect_momentum_squared(wf) / (2 * c.mass))


def expect_energy(wf: WaveFunction, U: PotentialSpec) -> float:
    kinetic = expect_momentum_squared(wf) / (2 * wf.constants.mass)
    return kinetic + float(wf.grid.integrate(U.values * wf.rho))


def expect_momentum_function(wf: WaveFunction, F) -> float:
    """Sum of F(p) |psi-hat(p)|^2 dp^n over the momentum lattice."""
    mom = momentum_representation(wf)
    values = F(*mom.coords) if callable(F) else np.broadcast_to(F, mom.values.shape)
    return _real(mom.integrate(values * mom.density), "<F(p)>")


@dataclass(frozen=True)
class MomentumRoutes:
    """<p> and <p^2> from position space, momentum space and the Wigner function."""

    mean_p: dict
    mean_p2: dict

    def spread(self) -> float:
        out = 0.0
        for table in (self.mean_p, self.mean_p2):
            vals = np.array(list(table.values()))
            out = max(out, float(np.max(vals.max(axis=0) - vals.min(axis=0))))
        return out


def momentum_routes(wf: WaveFunction) -> MomentumRoutes:
    n = wf.grid.n_dims
    W = wigner_transform(wf)
    coords = W.coords
    wig_p = np.array([phase_space_expectation(W, coords[n + k]) for k in range(n)])
    wig_p2 = phase_space_expectation(W, sum(coords[n + k] ** 2 for k in range(n)))
    mom_p = np.array([expect_momentum_function(wf, lambda *q, k=k: q[k]) for k in range(n)])
    mom_p2 = expect_momentum_function(wf, lambda *q: sum(qi**2 for qi in q))
    return MomentumRoutes(
        {"position": expect_momentum(wf), "momentum": mom_p, "wigner": wig_p},
        {"position": np.array([expect_momentum_squared(wf)]), "momentum": np.array([mom_p2]),
         "wigner": np.array([wig_p2])},
    )


@dataclass(frozen=True)
class ExpectationReport:
    mean_x: list
    mean_p: list
    var_x: list
    var_p: list
    energy: float
    uncertainty_products: list

    def to_dict(self) -> dict:
        return asdict(self)

    def satisfies_heisenberg(self, hbar: float, slack: float = 1e-9) -> bool:
        return all(u >= 0.5 * hbar * (1 - slack) for u in self.uncertainty_products)


def uncertainty_report(wf: WaveFunction, U: PotentialSpec | None = None) -> ExpectationReport:
    """Moments per axis; the energy uses ``U`` (free particle when omitted)."""
    grid = wf.grid
    n = grid.n_dims
    U = U or PotentialSpec.free(grid)
    mean_x = [expect_position_function(wf, lambda *x, k=k: x[k]) for k in range(n)]
    var_x = [expect_position_function(wf, lambda *x, k=k: (x[k] - mean_x[k]) ** 2) for k in range(n)]
    mean_p = expect_momentum(wf)
    hbar = wf.constants.hbar
    var_p = []
    for k in range(n):
        dk = grid.derivative(wf.psi, tuple(1 if j == k else 0 for j in range(n)))
        p2 = hbar**2 * grid.integrate(np.abs(dk) ** 2)
        var_p.append(max(float(p2) - mean_p[k] ** 2, 0.0))
    products = [float(np.sqrt(vx * vp)) for vx, vp in zip(var_x, var_p)]
    return ExpectationReport([float(v) for v in mean_x], [float(v) for v in mean_p], [float(v) for v in var_x],
                             var_p, expect_energy(wf, U), products)

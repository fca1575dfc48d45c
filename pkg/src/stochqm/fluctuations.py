"""Correlators of irrotational velocity fluctuations and their consistency checks.

Derivatives of R = ln rho and of the velocity are taken as jets: dictionaries
from multi-index to field, built from pointwise cumulants of rho or psi
(``Grid.log_derivatives``).  Spectrally differentiating ln rho itself is
hopeless for states whose tails fall below round-off, while the cumulant
route stays accurate down to the bulk threshold.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .errors import DimensionTooLow
from .grid import FLOOR_RELATIVE, Grid, index_of, multi_indices, unit_index
from .hydrodynamics import BULK_LEVEL, quantum_force
from .state import PhysicalConstants, WaveFunction


@dataclass(frozen=True)
class FluctuationModel:
    """alpha multiplies the Hessian of R; ``f_value`` is the constant isotropic part.

    ``f_value = 0`` gives the linear equation, ``f_value = b / m`` the
    logarithmic one.  The proportionality between Gamma and R is fixed to 1.
    """

    alpha: float
    f_value: float = 0.0

    def __post_init__(self):
        if not self.alpha < 0:
            raise ValueError(f"alpha must be negative for a positive internal energy, got {self.alpha}")

    @classmethod
    def quantum(cls, constants: PhysicalConstants, b: float = 0.0) -> "FluctuationModel":
        return cls(-(constants.hbar**2) / (4 * constants.mass**2), b / constants.mass)


@dataclass(frozen=True)
class CorrelationTensorField:
    """Symmetric C_kn with shape (n, n, *grid.shape), optional rank-3 D_kln.

    ``jets`` optionally holds derivatives of C keyed by multi-index; when
    absent they are taken spectrally from ``c``.
    """

    grid: Grid
    c: np.ndarray
    d: np.ndarray | None = None
    jets: dict = field(default=None, repr=False)

    def __post_init__(self):
        n = self.grid.n_dims
        self.grid.check(self.c, components=2)
        if self.c.shape[:2] != (n, n):
            raise ValueError("C must carry two component axes of length n_dims")

    @property
    def trace(self) -> np.ndarray:
        return np.einsum("kk...->...", self.c)

    def derivative(self, order: tuple[int, ...]) -> np.ndarray:
        order = tuple(order)
        if not any(order):
            return self.c
        if self.jets is not None and order in self.jets:
            return self.jets[order]
        return np.stack([np.stack([self.grid.derivative(self.c[k, j], order) for j in range(self.grid.n_dims)])
                         for k in range(self.grid.n_dims)])


def _symmetric(tensor_of, n_dims: int, rank: int, shape) -> np.ndarray:
    """Fill a fully symmetric rank-``rank`` array from its sorted index tuples."""
    out = np.empty((n_dims,) * rank + tuple(shape))
    for idx in itertools.combinations_with_replacement(range(n_dims), rank):
        value = tensor_of(idx)
        for perm in set(itertools.permutations(idx)):
            out[perm] = value
    return out


def log_density_jet(grid: Grid, rho: np.ndarray, max_order: int) -> dict:
    """Derivatives of R = 2 ln sqrt(rho) from cumulants of the amplitude.

    The amplitude has half the dynamic range of rho, which keeps the
    quotients accurate to the bulk edge; the floor sits at 1e-12 max rho.
    """
    amplitude = np.sqrt(np.maximum(np.asarray(rho, dtype=float), 0.0))
    return {a: 2 * d for a, d in grid.log_derivatives(amplitude, max_order).items()}


def velocity_jet(wf: WaveFunction, max_order: int) -> dict:
    """Map (k, a) -> d^a v_k with v = (hbar/m) grad Im ln psi, for |a| <= max_order."""
    grid, c = wf.grid, wf.constants
    n = grid.n_dims
    logpsi = grid.log_derivatives(wf.psi, max_order + 1)
    scale = c.hbar / c.mass
    out = {}
    for k in range(n):
        for a in multi_indices(n, max_order):
            out[k, a] = scale * logpsi[tuple(x + y for x, y in zip(a, unit_index(n, k)))].imag
    return out


def _add(*indices):
    return tuple(sum(t) for t in zip(*indices))


def correlation_tensor(grid: Grid, rho: np.ndarray, model: FluctuationModel, jet_order: int = 2
                       ) -> CorrelationTensorField:
    """C_kn = alpha d_k d_n R + delta_kn F, with derivative jets of C up to ``jet_order``."""
    n = grid.n_dims
    R = log_density_jet(grid, rho, 2 + jet_order)
    e = [unit_index(n, k) for k in range(n)]
    iso = np.eye(n)

    def component(a, idx):
        k, j = idx
        value = model.alpha * R[_add(e[k], e[j], a)]
        if not any(a):
            value = value + iso[k, j] * model.f_value
        return value

    c = _symmetric(lambda idx: component((0,) * n, idx), n, 2, grid.shape)
    jets = {a: _symmetric(lambda idx, a=a: component(a, idx), n, 2, grid.shape)
            for a in multi_indices(n, jet_order, min_order=1)}
    return CorrelationTensorField(grid, c, jets=jets)


def irrotationality_pde_residual(c: CorrelationTensorField, rho: np.ndarray) -> np.ndarray:
    """Left side of the second-order PDE for C, antisymmetric in (m, n); shape (n, n, *grid.shape).

    (d_k + d_k R)(d_m C_kn - d_n C_km) + C_kn d_k d_m R - C_km d_k d_n R
    """
    grid = c.grid
    n = grid.n_dims
    if n < 2:
        raise DimensionTooLow("the irrotationality equation has no antisymmetric content in 1D")
    R = log_density_jet(grid, rho, 2)
    e = [unit_index(n, k) for k in range(n)]
    out = np.zeros((n, n) + grid.shape)
    for m, nn in itertools.combinations(range(n), 2):
        total = 0.0
        for k in range(n):
            second = c.derivative(_add(e[k], e[m]))[k, nn] - c.derivative(_add(e[k], e[nn]))[k, m]
            first = c.derivative(e[m])[k, nn] - c.derivative(e[nn])[k, m]
            total = total + second + R[e[k]] * first
            total = total + c.c[k, nn] * R[_add(e[k], e[m])] - c.c[k, m] * R[_add(e[k], e[nn])]
        out[m, nn] = total
        out[nn, m] = -total
    return out


def _d_from_jet(vj: dict, n: int, constants: PhysicalConstants, extra=None) -> np.ndarray:
    """D_kln (or its derivative along multi-index ``extra``) from a velocity jet."""
    pref = -(constants.hbar**2) / (12 * constants.mass**2)
    extra = extra or (0,) * n
    e = [unit_index(n, k) for k in range(n)]
    shape = vj[0, (0,) * n].shape

    def comp(idx):
        k, l, m = idx
        return pref * (vj[k, _add(e[l], e[m], extra)] + vj[l, _add(e[m], e[k], extra)]
                       + vj[m, _add(e[k], e[l], extra)])

    return _symmetric(comp, n, 3, shape)


def third_order_correlator(grid: Grid, v: np.ndarray, constants: PhysicalConstants) -> np.ndarray:
    """D_kln = -(hbar^2/12 m^2)(d_l d_n v_k + d_n d_k v_l + d_k d_l v_n) for a smooth periodic v."""
    n = grid.n_dims
    grid.check(v, components=1)
    vj = {}
    for k in range(n):
        ders = grid.derivatives(v[k], multi_indices(n, 2, min_order=2))
        for a, val in ders.items():
            vj[k, a] = val
    vj[0, (0,) * n] = v[0]
    return _d_from_jet(vj, n, constants)


def fisher_information(grid: Grid, rho: np.ndarray) -> float:
    """Integral of |grad rho|^2 / rho with the density floor in the denominator."""
    rho = np.asarray(rho, dtype=float)
    floored = np.maximum(rho, FLOOR_RELATIVE * rho.max())
    grad = grid.gradient(rho)
    return float(grid.integrate(np.sum(grad**2, axis=0) / floored))


@dataclass(frozen=True)
class InternalEnergy:
    value: float
    from_trace: float

    @property
    def discrepancy(self) -> float:
        return abs(self.value - self.from_trace)


def internal_energy(grid: Grid, rho: np.ndarray, model: FluctuationModel) -> InternalEnergy:
    """(n/2) int rho F - (alpha/2) Fisher information, with (1/2) int rho Tr C alongside."""
    n = grid.n_dims
    mass = float(grid.integrate(rho))
    value = 0.5 * n * model.f_value * mass - 0.5 * model.alpha * fisher_information(grid, rho)
    C = correlation_tensor(grid, rho, model, jet_order=0)
    return InternalEnergy(value, float(0.5 * grid.integrate(rho * C.trace)))


@dataclass(frozen=True)
class BBound:
    bound: float
    b: float | None = None

    @property
    def ratio(self) -> float | None:
        return None if self.b is None else abs(self.b) / self.bound if self.bound else np.inf

    @property
    def holds(self) -> bool | None:
        return None if self.b is None else abs(self.b) < self.bound


def b_bound(grid: Grid, rho: np.ndarray, constants: PhysicalConstants, n_particles: int = 1,
            b: float | None = None) -> BBound:
    """Upper bound on |b| for b < 0 from positivity of the internal energy.

    The bound hbar^2 I / (4 n m^2 N) refers to the Fisher information of the
    mass density, which is m N times the unit-normalized density used here;
    N therefore cancels and the returned value is hbar^2 I / (4 n m).
    """
    m = constants.mass
    fisher_mass = m * n_particles * fisher_information(grid, rho)
    bound = constants.hbar**2 * fisher_mass / (4 * grid.n_dims * m**2 * n_particles)
    return BBound(bound, b)


# -- series expansion of the compatibility condition ---------------------------


@dataclass(frozen=True)
class CompatibilityOrder:
    order: int
    lhs: dict
    rhs: dict
    bulk: np.ndarray

    @property
    def max_difference(self) -> float:
        if not self.lhs:
            return 0.0
        return float(max(np.abs(self.lhs[i] - self.rhs[i])[self.bulk].max() for i in self.lhs))


def compatibility_coefficients(wf: WaveFunction, model: FluctuationModel | None = None,
                               include_d: bool = True) -> list[CompatibilityOrder]:
    """Taylor coefficients in s of both sides of rho <exp(i m s.V / hbar)> = psi(x+s/2) psi*(x-s/2).

    Coefficients are symmetric tensors keyed by sorted index tuples, normalised
    so that order r contributes sum s_k1 .. s_kr T_k1..kr.  The left side uses
    v, C (with F = 0) and, at third order, D; ``include_d=False`` drops D.
    """
    grid, c = wf.grid, wf.constants
    model = model or FluctuationModel.quantum(c)
    if model.f_value:
        raise ValueError("the compatibility expansion is defined for F = 0")
    hbar, m = c.hbar, c.mass
    n = grid.n_dims
    e = [unit_index(n, k) for k in range(n)]
    rho = wf.rho
    bulk = grid.bulk_mask(rho, BULK_LEVEL)

    vj = velocity_jet(wf, 2)
    v = [vj[k, (0,) * n] for k in range(n)]
    logpsi = grid.log_derivatives(wf.psi, 2)

    def C(k, j):
        return model.alpha * 2 * logpsi[_add(e[k], e[j])].real

    D = _d_from_jet(vj, n, c) if include_d else np.zeros((n,) * 3 + grid.shape)
    psi = wf.psi
    conj = np.conj(psi)
    ders = grid.derivatives(psi, multi_indices(n, 3, min_order=1))
    dpsi = lambda *ax: ders[index_of(ax, n)]
    dconj = lambda *ax: np.conj(dpsi(*ax))

    out = []
    out.append(CompatibilityOrder(0, {(): rho}, {(): rho}, bulk))
    lhs, rhs = {}, {}
    for (k,) in itertools.combinations_with_replacement(range(n), 1):
        lhs[k,] = 1j * (m / hbar) * rho * v[k]
        rhs[k,] = 0.5 * (conj * dpsi(k) - psi * dconj(k))
    out.append(CompatibilityOrder(1, lhs, rhs, bulk))
    lhs, rhs = {}, {}
    for k, j in itertools.combinations_with_replacement(range(n), 2):
        lhs[k, j] = -(m**2) / (2 * hbar**2) * rho * (v[k] * v[j] + C(k, j))
        rhs[k, j] = (conj * dpsi(k, j) - dconj(k) * dpsi(j) - dconj(j) * dpsi(k) + psi * dconj(k, j)) / 8
    out.append(CompatibilityOrder(2, lhs, rhs, bulk))
    lhs, rhs = {}, {}
    for k, l, j in itertools.combinations_with_replacement(range(n), 3):
        moment = v[k] * v[l] * v[j] + v[k] * C(l, j) + v[l] * C(j, k) + v[j] * C(k, l) + D[k, l, j]
        lhs[k, l, j] = -1j * m**3 / (6 * hbar**3) * rho * moment
        cyclic = sum(dpsi(a) * dconj(b, d) - dconj(a) * dpsi(b, d) for a, b, d in ((k, l, j), (l, j, k), (j, k, l)))
        rhs[k, l, j] = (conj * dpsi(k, l, j) - psi * dconj(k, l, j) + cyclic) / 48
    out.append(CompatibilityOrder(3, lhs, rhs, bulk))
    return out


def taylor_coefficient(order: CompatibilityOrder, side: str, exponent: tuple[int, ...]) -> np.ndarray:
    """Coefficient of the monomial s^exponent assembled from the symmetric tensor."""
    data = order.lhs if side == "lhs" else order.rhs
    r = sum(exponent)
    if r != order.order:
        raise ValueError("exponent degree does not match the order")
    idx = tuple(k for k, a in enumerate(exponent) for _ in range(a))
    multiplicity = factorial(r)
    for a in exponent:
        multiplicity //= factorial(a)
    return multiplicity * data[idx]


# -- second-moment balance ------------------------------------------------------


@dataclass(frozen=True)
class SecondMomentBalance:
    """Residual of the averaged second-moment equation with zero forcing correlation.

    ``residual`` excludes the vorticity terms C_sk (d_k v_n - d_n v_k) + (n <-> s),
    which are reported in ``vorticity``; both have shape (n, n, *grid.shape).
    """

    residual: np.ndarray
    vorticity: np.ndarray
    bulk: np.ndarray

    def max_residual(self) -> float:
        return float(np.abs(self.residual)[..., self.bulk].max())

    def max_vorticity(self) -> float:
        return float(np.abs(self.vorticity)[..., self.bulk].max())


def _balance_from_jets(vj, R, alpha, C, D, dD, n, bulk) -> SecondMomentBalance:
    e = [unit_index(n, k) for k in range(n)]
    shape = bulk.shape
    res = np.zeros((n, n) + shape)
    vort = np.zeros((n, n) + shape)
    for a, s in itertools.product(range(n), repeat=2):
        total = 0.0
        rot = 0.0
        for k in range(n):
            total = total - alpha * (vj[k, _add(e[a], e[s], e[k])] + vj[k, _add(e[a], e[s])] * R[e[k]])
            total = total + dD[k][a, s, k] + D[a, s, k] * R[e[k]]
            rot = rot + C[s, k] * (vj[a, e[k]] - vj[k, e[a]]) + C[a, k] * (vj[s, e[k]] - vj[k, e[s]])
        res[a, s] = total
        vort[a, s] = rot
    return SecondMomentBalance(res, vort, bulk)


def second_moment_balance_residual(wf: WaveFunction, model: FluctuationModel | None = None,
                                   include_d: bool = True) -> SecondMomentBalance:
    """Second-moment balance evaluated on a wavefunction, with D from the velocity jet."""
    grid, c = wf.grid, wf.constants
    model = model or FluctuationModel.quantum(c)
    n = grid.n_dims
    vj = velocity_jet(wf, 3)
    R = log_density_jet(grid, wf.rho, 2)
    C = correlation_tensor(grid, wf.rho, model, jet_order=0).c
    zero = np.zeros((n,) * 3 + grid.shape)
    D = _d_from_jet(vj, n, c) if include_d else zero
    dD = [_d_from_jet(vj, n, c, unit_index(n, k)) if include_d else zero for k in range(n)]
    return _balance_from_jets(vj, R, model.alpha, C, D, dD, n, grid.bulk_mask(wf.rho, BULK_LEVEL))


def second_moment_balance_fields(grid: Grid, rho: np.ndarray, v: np.ndarray, constants: PhysicalConstants,
                                 model: FluctuationModel | None = None) -> SecondMomentBalance:
    """Same balance for a prescribed smooth periodic velocity field (which may carry vorticity)."""
    model = model or FluctuationModel.quantum(constants)
    n = grid.n_dims
    grid.check(v, components=1)
    vj = {}
    for k in range(n):
        for a, val in grid.derivatives(v[k], multi_indices(n, 4)).items():
            vj[k, a] = val
    R = log_density_jet(grid, rho, 2)
    C = correlation_tensor(grid, rho, model, jet_order=0).c
    D = _d_from_jet(vj, n, constants)
    dD = [_d_from_jet(vj, n, constants, unit_index(n, k)) for k in range(n)]
    return _balance_from_jets(vj, R, model.alpha, C, D, dD, n, grid.bulk_mask(rho, BULK_LEVEL))


# -- force from the stress tensor ------------------------------------------------


def stress_force(grid: Grid, rho: np.ndarray, model: FluctuationModel) -> np.ndarray:
    """-(1/rho) d_k (rho C_kn) = -d_k C_kn - C_kn d_k R, built from the C jet."""
    C = correlation_tensor(grid, rho, model, jet_order=1)
    R = log_density_jet(grid, rho, 1)
    n = grid.n_dims
    e = [unit_index(n, k) for k in range(n)]
    return np.stack([-sum(C.derivative(e[k])[k, j] + C.c[k, j] * R[e[k]] for k in range(n)) for j in range(n)])


def force_route_difference(wf: WaveFunction) -> float:
    """Largest bulk difference between the stress-tensor force and -grad Q / m."""
    model = FluctuationModel.quantum(wf.constants)
    diff = stress_force(wf.grid, wf.rho, model) - quantum_force(wf)
    bulk = wf.grid.bulk_mask(wf.rho, BULK_LEVEL)
    return float(np.abs(diff)[:, bulk].max())

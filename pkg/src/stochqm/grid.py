"""Uniform periodic grids with Fourier differentiation and quadrature.

Fields are plain numpy arrays whose trailing axes match ``Grid.shape``.
Vector fields carry a leading component axis of length ``n_dims``; rank-2
tensor fields carry two.  Derivatives are indexed by multi-indices, tuples
holding the derivative order along each axis, e.g. ``(1, 2)`` is
d^3 / dx1 dx2^2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .errors import GridError, GridMismatch

# Relative density floor used wherever a division by |f|^2 occurs.
FLOOR_RELATIVE = 1e-12


@dataclass(frozen=True)
class Grid:
    """Periodic lattice spanning [-L/2, L/2) along each of ``n_dims`` axes."""

    n_dims: int
    points: int
    extent: float

    def __post_init__(self):
        if self.n_dims not in (1, 2):
            raise GridError(f"n_dims must be 1 or 2, got {self.n_dims}")
        n = int(self.points)
        if n != self.points or n < 8 or n & (n - 1):
            raise GridError(f"points per axis must be a power of two >= 8, got {self.points}")
        if not np.isfinite(self.extent) or self.extent <= 0:
            raise GridError(f"extent must be positive, got {self.extent}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.n_dims

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.n_dims

    @property
    def size(self) -> int:
        return self.points**self.n_dims

    @cached_property
    def axis(self) -> np.ndarray:
        """1D coordinate array shared by every axis."""
        return -0.5 * self.extent + self.spacing * np.arange(self.points)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcast to the full grid shape ('ij' indexing)."""
        return tuple(np.meshgrid(*([self.axis] * self.n_dims), indexing="ij"))

    @cached_property
    def wavenumber_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        k = self.wavenumber_axis
        out = []
        for ax in range(self.n_dims):
            shape = [1] * self.n_dims
            shape[ax] = self.points
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers)

    def _multiplier(self, order: tuple[int, ...]) -> np.ndarray:
        nyq = self.points // 2
        mult = np.ones((1,) * self.n_dims, dtype=complex)
        for ax, o in enumerate(order):
            if o == 0:
                continue
            ik = 1j * self.wavenumber_axis
            factor = ik**o
            if o % 2:
                # odd derivatives of the Nyquist mode are not representable
                factor = factor.copy()
                factor[nyq] = 0.0
            shape = [1] * self.n_dims
            shape[ax] = self.points
            mult = mult * factor.reshape(shape)
        return mult

    def check(self, f: np.ndarray, components: int = 0) -> None:
        if f.shape[f.ndim - self.n_dims:] != self.shape or f.ndim != self.n_dims + components:
            raise GridMismatch(f"field of shape {f.shape} does not live on {self}")

    def _trailing(self, f: np.ndarray) -> None:
        if f.shape[f.ndim - self.n_dims:] != self.shape:
            raise GridMismatch(f"field of shape {f.shape} does not live on {self}")

    def fft(self, f: np.ndarray) -> np.ndarray:
        self._trailing(f)
        axes = tuple(range(f.ndim - self.n_dims, f.ndim))
        return np.fft.fftn(f, axes=axes)

    def ifft(self, F: np.ndarray) -> np.ndarray:
        self._trailing(F)
        axes = tuple(range(F.ndim - self.n_dims, F.ndim))
        return np.fft.ifftn(F, axes=axes)

    def derivative(self, f: np.ndarray, order: tuple[int, ...]) -> np.ndarray:
        """Spectral partial derivative of multi-index ``order``."""
        return self.derivatives(f, [order])[tuple(order)]

    def derivatives(self, f: np.ndarray, orders) -> dict[tuple[int, ...], np.ndarray]:
        """Several partial derivatives of one field from a single forward FFT."""
        real = np.isrealobj(f)
        F = self.fft(f)
        out = {}
        for order in orders:
            order = tuple(order)
            if not any(order):
                out[order] = np.array(f, copy=True)
                continue
            d = self.ifft(F * self._multiplier(order))
            out[order] = d.real if real else d
        return out

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Stack of first partial derivatives, shape (n_dims, *grid.shape)."""
        ders = self.derivatives(f, unit_indices(self.n_dims))
        return np.stack([ders[e] for e in unit_indices(self.n_dims)])

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        d = self.ifft(-self.k_squared * self.fft(f))
        return d.real if np.isrealobj(f) else d

    def divergence(self, v: np.ndarray) -> np.ndarray:
        return sum(self.derivative(v[k], unit_index(self.n_dims, k)) for k in range(self.n_dims))

    def integrate(self, f: np.ndarray):
        """Rectangle rule over the trailing grid axes."""
        self._trailing(f)
        axes = tuple(range(f.ndim - self.n_dims, f.ndim))
        return np.sum(f, axis=axes) * self.cell_volume

    def parseval_integral(self, f: np.ndarray) -> float:
        """Integral of |f|^2 evaluated in wavenumber space."""
        F = self.fft(f)
        return float(np.sum(np.abs(F) ** 2) * self.cell_volume / self.size)

    def bulk_mask(self, rho: np.ndarray, level: float = 1e-6) -> np.ndarray:
        """Points where rho exceeds ``level`` times its maximum."""
        return rho > level * np.max(rho)

    def log_derivatives(self, f: np.ndarray, max_order: int, floor_relative: float = FLOOR_RELATIVE):
        """Partial derivatives of ln f up to total order ``max_order``.

        Only derivatives of the smooth field ``f`` are taken spectrally; the
        ratios d^a f / f are formed pointwise (with |f|^2 floored) and turned
        into derivatives of ln f by the moment-to-cumulant recursion.  This
        keeps vacuum regions, where ln f is meaningless, from polluting the
        bulk through Gibbs ringing.
        """
        idx = multi_indices(self.n_dims, max_order)
        ders = self.derivatives(f, idx)
        mod2 = np.abs(f) ** 2
        denom = np.maximum(mod2, floor_relative * np.max(mod2))
        conj = np.conj(f)
        ratio = {}
        for a in idx:
            if not any(a):
                continue
            r = ders[a] * conj / denom
            ratio[a] = r.real if np.isrealobj(f) else r
        return cumulants(ratio, self.n_dims, max_order)


def unit_index(n_dims: int, k: int) -> tuple[int, ...]:
    return tuple(1 if j == k else 0 for j in range(n_dims))


def unit_indices(n_dims: int) -> list[tuple[int, ...]]:
    return [unit_index(n_dims, k) for k in range(n_dims)]


def multi_indices(n_dims: int, max_order: int, min_order: int = 0) -> list[tuple[int, ...]]:
    """All multi-indices with min_order <= |a| <= max_order, graded order."""
    out = []
    for total in range(min_order, max_order + 1):
        for a in itertools.product(range(total + 1), repeat=n_dims):
            if sum(a) == total:
                out.append(a)
    return out


def index_of(components: tuple[int, ...], n_dims: int) -> tuple[int, ...]:
    """Multi-index counting how often each axis appears in ``components``."""
    a = [0] * n_dims
    for c in components:
        a[c] += 1
    return tuple(a)


def cumulants(moments: dict, n_dims: int, max_order: int) -> dict:
    """Multivariate moment-to-cumulant recursion (moments exclude order 0)."""
    kappa = {}
    for a in multi_indices(n_dims, max_order, min_order=1):
        j = next(i for i, ai in enumerate(a) if ai)
        ap = list(a)
        ap[j] -= 1
        ap = tuple(ap)
        val = moments[a]
        for g in itertools.product(*(range(x + 1) for x in ap)):
            if g == ap:
                continue
            coef = 1
            for gi, api in zip(g, ap):
                coef *= comb(api, gi)
            gj = list(g)
            gj[j] += 1
            rest = tuple(x - y for x, y in zip(ap, g))
            val = val - coef * kappa[tuple(gj)] * moments[rest]
        kappa[a] = val
    return kappa

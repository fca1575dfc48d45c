"""Poisson and Moyal brackets of phase-space polynomials and of exponential observables.

Polynomials are sparse maps from exponent tuples (a_1..a_n, b_1..b_n), the
powers of x_1..x_n and p_1..p_n, to real coefficients.  The Moyal sine series
terminates on polynomials, so brackets are exact up to floating-point
rounding of the coefficients.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .errors import DimensionMismatch

_TOKEN = re.compile(r"[xp]\d+(?:\^\d+)?|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+*-]")
_FACTOR = re.compile(r"([xp])(\d+)(?:\^(\d+))?")


@dataclass(frozen=True)
class PolyObservable:
    n_dims: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for exps, coef in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != 2 * self.n_dims or min(exps, default=0) < 0:
                raise ValueError(f"exponent {exps} does not fit {self.n_dims} dimensions")
            coef = float(coef)
            if coef != 0.0:
                clean[exps] = clean.get(exps, 0.0) + coef
        object.__setattr__(self, "terms", {k: clean[k] for k in sorted(clean, key=_order) if clean[k] != 0.0})

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, n_dims: int, value: float) -> "PolyObservable":
        return cls(n_dims, {(0,) * (2 * n_dims): value})

    @classmethod
    def monomial(cls, n_dims: int, x=(), p=(), coef: float = 1.0) -> "PolyObservable":
        a = list(x) + [0] * (n_dims - len(x))
        b = list(p) + [0] * (n_dims - len(p))
        return cls(n_dims, {tuple(a + b): coef})

    @classmethod
    def parse(cls, text: str, n_dims: int | None = None) -> "PolyObservable":
        """Read e.g. ``3 x1^2 p1 - 0.5 p2^3``; variables are x<i>, p<i> with i from 1."""
        tokens = _TOKEN.findall(text)
        if "".join(tokens) != re.sub(r"\s+", "", text) or not tokens:
            raise ValueError(f"cannot parse polynomial {text!r}")
        parsed = []  # (coefficient, {(var, index): power})
        sign, coef, powers, open_term, signed = 1.0, None, {}, False, False
        for tok in tokens:
            if tok in "+-":
                if open_term:
                    parsed.append((sign * (1.0 if coef is None else coef), powers))
                    coef, powers, open_term = None, {}, False
                elif signed:
                    raise ValueError(f"repeated sign in {text!r}")
                sign, signed = (-1.0 if tok == "-" else 1.0), True
                continue
            if tok == "*":
                continue
            open_term, signed = True, False
            factor = _FACTOR.fullmatch(tok)
            if factor is None:
                if coef is not None or powers:
                    raise ValueError(f"misplaced number {tok!r} in {text!r}")
                coef = float(tok)
                continue
            var, idx, power = factor.group(1), int(factor.group(2)), int(factor.group(3) or 1)
            if idx < 1:
                raise ValueError("variable indices start at 1")
            powers[var, idx] = powers.get((var, idx), 0) + power
        if open_term:
            parsed.append((sign * (1.0 if coef is None else coef), powers))
        elif signed:
            raise ValueError(f"trailing sign in {text!r}")
        if not parsed:
            raise ValueError(f"cannot parse polynomial {text!r}")
        top = max((idx for _, pw in parsed for _, idx in pw), default=1)
        n = n_dims or top
        if top > n:
            raise ValueError(f"variable index {top} exceeds n_dims = {n}")
        terms = {}
        for c, pw in parsed:
            exps = [0] * (2 * n)
            for (var, idx), power in pw.items():
                exps[(idx - 1) + (n if var == "p" else 0)] += power
            terms[tuple(exps)] = terms.get(tuple(exps), 0.0) + c
        return cls(n, terms)

    def format(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exps, coef in self.terms.items():
            factors = []
            for var, offset in (("x", 0), ("p", self.n_dims)):
                for i in range(self.n_dims):
                    e = exps[offset + i]
                    if e:
                        factors.append(f"{var}{i + 1}" + (f"^{e}" if e > 1 else ""))
            mag = abs(coef)
            num = _number(mag)
            text = " ".join(factors) if factors and mag == 1.0 else " ".join([num] + factors)
            parts.append(("- " if coef < 0 else "+ ") + text)
        out = " ".join(parts)
        return out[2:] if out.startswith("+ ") else "-" + out[2:]

    __str__ = format

    # -- algebra ------------------------------------------------------------
    def _check(self, other: "PolyObservable") -> None:
        if self.n_dims != other.n_dims:
            raise DimensionMismatch(f"{self.n_dims}D and {other.n_dims}D observables")

    def __add__(self, other):
        if not isinstance(other, PolyObservable):
            other = PolyObservable.constant(self.n_dims, other)
        self._check(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return PolyObservable(self.n_dims, terms)

    __radd__ = __add__

    def __neg__(self):
        return PolyObservable(self.n_dims, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PolyObservable):
            return PolyObservable(self.n_dims, {k: v * float(other) for k, v in self.terms.items()})
        self._check(other)
        terms = {}
        for (ka, va), (kb, vb) in itertools.product(self.terms.items(), other.terms.items()):
            k = tuple(x + y for x, y in zip(ka, kb))
            terms[k] = terms.get(k, 0.0) + va * vb
        return PolyObservable(self.n_dims, terms)

    __rmul__ = __mul__

    def derivative(self, orders: tuple[int, ...]) -> "PolyObservable":
        """Partial derivative with ``orders`` over (x_1..x_n, p_1..p_n)."""
        terms = {}
        for exps, coef in self.terms.items():
            if any(e < o for e, o in zip(exps, orders)):
                continue
            factor = 1
            for e, o in zip(exps, orders):
                factor *= factorial(e) // factorial(e - o)
            k = tuple(e - o for e, o in zip(exps, orders))
            terms[k] = terms.get(k, 0.0) + coef * factor
        return PolyObservable(self.n_dims, terms)

    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def norm(self) -> float:
        """Largest absolute coefficient."""
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def evaluate(self, x, p):
        """Value at coordinates given per axis; in 1D a bare array is the x (or p) sample itself."""
        x, p = _axes(x, self.n_dims), _axes(p, self.n_dims)
        total = 0.0
        for exps, coef in self.terms.items():
            term = coef
            for var, e in zip(list(x) + list(p), exps):
                if e:
                    term = term * var**e
            total = total + term
        return total

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.norm() <= tol


def _axes(values, n_dims: int) -> list:
    if n_dims == 1 and not (isinstance(values, (list, tuple)) and len(values) == 1):
        return [np.asarray(values)]
    if len(values) != n_dims:
        raise DimensionMismatch(f"expected {n_dims} coordinates, got {len(values)}")
    return [np.asarray(v) for v in values]


def _order(exps):
    # highest total degree first, then lexicographic in (x_1..x_n, p_1..p_n)
    return (-sum(exps), tuple(-e for e in exps))


def _number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def poisson_bracket(A: PolyObservable, B: PolyObservable) -> PolyObservable:
    A._check(B)
    n = A.n_dims
    out = PolyObservable(n)
    for k in range(n):
        ex = tuple(1 if i == k else 0 for i in range(2 * n))
        ep = tuple(1 if i == n + k else 0 for i in range(2 * n))
        out = out + A.derivative(ex) * B.derivative(ep) - A.derivative(ep) * B.derivative(ex)
    return out


def bidifferential_power(A: PolyObservable, B: PolyObservable, j: int) -> PolyObservable:
    """j-th power of the operator (d_x on A)(d_p on B) - (d_p on A)(d_x on B), summed over axes.

    The 2n commuting pieces X_k = dx_k (x) dp_k and P_k = dp_k (x) dx_k enter
    through the multinomial expansion of (sum_k X_k - P_k)^j.
    """
    A._check(B)
    n = A.n_dims
    out = PolyObservable(n)
    for counts in _compositions(j, 2 * n):
        alpha, beta = counts[:n], counts[n:]
        weight = factorial(j)
        for c in counts:
            weight //= factorial(c)
        sign = -1 if sum(beta) % 2 else 1
        left = A.derivative(tuple(alpha) + tuple(beta))
        if left.is_zero():
            continue
        right = B.derivative(tuple(beta) + tuple(alpha))
        out = out + (sign * weight) * (left * right)
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def moyal_bracket_poly(A: PolyObservable, B: PolyObservable, hbar: float) -> PolyObservable:
    """Sum over r of (-1)^r (hbar/2)^(2r) / (2r+1)! times the (2r+1)-th bidifferential power."""
    A._check(B)
    top = min(A.degree(), B.degree())
    out = PolyObservable(A.n_dims)
    for r in range(top // 2 + 1):
        j = 2 * r + 1
        if j > top:
            break
        coef = (-1) ** r * (hbar / 2) ** (2 * r) / factorial(j)
        out = out + coef * bidifferential_power(A, B, j)
    return out


@dataclass(frozen=True)
class ExponentialObservable:
    """exp[(i / hbar)(k.x + s.p)]; complex k, s give real exponentials."""

    k: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.k, dtype=complex))
        s = np.atleast_1d(np.asarray(self.s, dtype=complex))
        if k.shape != s.shape or k.ndim != 1:
            raise ValueError("k and s must be vectors of equal length")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(s))):
            raise ValueError("k and s must be finite")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "s", s)

    @property
    def n_dims(self) -> int:
        return self.k.size

    def evaluate(self, x, p, hbar: float):
        x = np.atleast_1d(x)
        p = np.atleast_1d(p)
        return np.exp(1j * (np.dot(self.k, x) + np.dot(self.s, p)) / hbar)


def moyal_bracket_exponential(e1: ExponentialObservable, e2: ExponentialObservable, hbar: float):
    """Moyal bracket of two exponentials: amplitude (2/hbar) sin[(k2.s1 - k1.s2) / 2 hbar] times exp(k1+k2, s1+s2)."""
    if e1.n_dims != e2.n_dims:
        raise DimensionMismatch(f"{e1.n_dims}D and {e2.n_dims}D exponentials")
    phase = (np.dot(e2.k, e1.s) - np.dot(e1.k, e2.s)) / (2 * hbar)
    amplitude = complex((2 / hbar) * np.sin(phase))
    return amplitude, ExponentialObservable(e1.k + e2.k, e1.s + e2.s)


def poisson_exponential_amplitude(e1: ExponentialObservable, e2: ExponentialObservable, hbar: float) -> complex:
    """Poisson bracket of two exponentials divided by their product."""
    return complex((np.dot(e2.k, e1.s) - np.dot(e1.k, e2.s)) / hbar**2)


@dataclass(frozen=True)
class SemiclassicalTable:
    hbar: list
    deviation: list
    exponent: float | None


def semiclassical_limit_check(A: PolyObservable, B: PolyObservable, hbar_sequence) -> SemiclassicalTable:
    """Coefficient norm of Moyal minus Poisson per hbar, and the fitted power of hbar."""
    hbars = [float(h) for h in hbar_sequence]
    if any(h <= 0 for h in hbars) or any(b >= a for a, b in zip(hbars, hbars[1:])):
        raise ValueError("hbar_sequence must be positive and decreasing")
    pb = poisson_bracket(A, B)
    dev = [(moyal_bracket_poly(A, B, h) - pb).norm() for h in hbars]
    exponent = None
    if all(d > 0 for d in dev) and len(hbars) > 1:
        exponent = float(np.polyfit(np.log(hbars), np.log(dev), 1)[0])
    return SemiclassicalTable(hbars, dev, exponent)


def taylor_exponential(n_dims: int, k, s, hbar: float, degree: int) -> PolyObservable:
    """Truncated Taylor polynomial of exp[(k.x + s.p) / hbar] for real k, s (total degree <= ``degree``)."""
    lin = PolyObservable(n_dims)
    for i in range(n_dims):
        lin = lin + PolyObservable.monomial(n_dims, x=[0] * i + [1], coef=float(np.atleast_1d(k)[i]) / hbar)
        lin = lin + PolyObservable.monomial(n_dims, p=[0] * i + [1], coef=float(np.atleast_1d(s)[i]) / hbar)
    out = PolyObservable.constant(n_dims, 1.0)
    power = PolyObservable.constant(n_dims, 1.0)
    for d in range(1, degree + 1):
        power = power * lin
        out = out + power * (1.0 / factorial(d))
    return out


__all__ = [
    "PolyObservable", "ExponentialObservable", "poisson_bracket", "moyal_bracket_poly", "bidifferential_power",
    "moyal_bracket_exponential", "poisson_exponential_amplitude", "semiclassical_limit_check",
    "SemiclassicalTable", "taylor_exponential",
]

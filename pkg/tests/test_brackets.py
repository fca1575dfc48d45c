import itertools

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from stochqm.brackets import (ExponentialObservable, PolyObservable, bidifferential_power, moyal_bracket_exponential,
                              moyal_bracket_poly, poisson_bracket, poisson_exponential_amplitude,
                              semiclassical_limit_check, taylor_exponential)
from stochqm.errors import DimensionMismatch

P = PolyObservable.parse


# -- operator oracle: Weyl quantization acting on a test function ---------------

HBAR = sp.Rational(7, 10)
XS = sp.symbols("x1 x2")
F = sp.Function("f")


def _weyl_monomial(f, x, a, b):
    """McCoy form of the Weyl-ordered x^a p^b applied to f."""
    def p_power(g):
        for _ in range(b):
            g = -sp.I * HBAR * sp.diff(g, x)
        return g
    return sum(sp.binomial(a, k) * x**k * p_power(x ** (a - k) * f) for k in range(a + 1)) / 2**a


def weyl_apply(poly, f):
    n = poly.n_dims
    total = 0
    for exps, coef in poly.terms.items():
        g = f
        for ax in range(n):
            g = _weyl_monomial(g, XS[ax], exps[ax], exps[n + ax])
        total += sp.nsimplify(coef, rational=True) * g
    return total


def commutator_oracle(A, B, f):
    return sp.expand((weyl_apply(A, weyl_apply(B, f)) - weyl_apply(B, weyl_apply(A, f))) / (sp.I * HBAR))


ORACLE_CASES = [
    ("x1^3", "p1^3", 1),
    ("x1^2 p1", "x1 p1^2", 1),
    ("x1^4 + p1^2", "p1^4 - x1^2", 1),
    ("x1^2 p2 + p1^3", "x2^3 p1 - x1 p1 p2", 2),
]


@pytest.mark.parametrize("a, b, n", ORACLE_CASES)
def test_moyal_bracket_matches_operator_commutator(a, b, n):
    A, B = P(a, n), P(b, n)
    f = F(*XS[:n])
    moyal = moyal_bracket_poly(A, B, float(HBAR))
    # round the float coefficients back onto the rationals they represent
    exact = PolyObservable(n, {k: v for k, v in moyal.terms.items()})
    diff = sp.expand(commutator_oracle(A, B, f) - weyl_apply(exact, f))
    residual = max([abs(complex(c)) for c in sp.Poly(diff, *XS[:n]).coeffs()] if diff != 0 else [0.0])
    assert residual < 1e-12


def test_poisson_bracket_basics():
    assert poisson_bracket(P("x1"), P("p1")).format() == "1"
    assert poisson_bracket(P("x1^2", 2), P("p1 p2", 2)).format() == "2 x1 p2"
    assert poisson_bracket(P("x2", 2), P("p1", 2)).is_zero()


def test_quadratic_brackets_have_no_corrections():
    quads = [P(t, 2) for t in ("x1^2", "p1^2", "x1 p1", "x1 x2 - p2^2", "3 p1 p2 + x2")]
    for A, B in itertools.product(quads, repeat=2):
        assert (moyal_bracket_poly(A, B, 0.9) - poisson_bracket(A, B)).is_zero()


def test_cubic_correction():
    for h in (1.0, 0.3):
        diff = moyal_bracket_poly(P("x1^3"), P("p1^3"), h) - P("9 x1^2 p1^2")
        assert (diff - PolyObservable.constant(1, -1.5 * h * h)).norm() < 1e-14


def test_semiclassical_exponent():
    table = semiclassical_limit_check(P("x1^3 p1"), P("p1^3 + x1^2"), [0.2, 0.1, 0.05])
    assert table.exponent == pytest.approx(2.0, abs=1e-10)
    assert semiclassical_limit_check(P("x1^2"), P("p1^2"), [0.2, 0.1]).exponent is None
    with pytest.raises(ValueError):
        semiclassical_limit_check(P("x1"), P("p1"), [0.1, 0.2])


def test_bidifferential_power_first_order_is_poisson():
    A, B = P("x1^2 p2 + p1 x2", 2), P("x1 p1^2 - x2^3", 2)
    assert (bidifferential_power(A, B, 1) - poisson_bracket(A, B)).is_zero()


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        moyal_bracket_poly(P("x1", 1), P("x1", 2), 1.0)
    with pytest.raises(DimensionMismatch):
        moyal_bracket_exponential(ExponentialObservable([1], [1]), ExponentialObservable([1, 0], [0, 1]), 1.0)


@pytest.mark.parametrize("text, n, expected", [
    ("3 x1^2 p1 - 0.5 p2^3", 2, "3 x1^2 p1 - 0.5 p2^3"),
    ("x1 + x1", 1, "2 x1"),
    ("-p1*x1", 1, "-x1 p1"),
    ("x1 - x1", 1, "0"),
    ("2.5", None, "2.5"),
])
def test_parse_and_format(text, n, expected):
    poly = P(text, n)
    assert poly.format() == expected
    assert P(poly.format(), poly.n_dims) == poly


@pytest.mark.parametrize("text", ["", "x1 +", "x1 ++ p1", "y1", "x0", "2 3", "x1^"])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        P(text)
    with pytest.raises(ValueError):
        P("x3", 2)


def test_evaluate():
    poly = P("x1^2 p2 - 3 p1", 2)
    assert poly.evaluate([2.0, 1.0], [0.5, 4.0]) == pytest.approx(16 - 1.5)
    grid = np.linspace(0, 1, 5)
    assert np.allclose(P("x1 p1").evaluate(grid, 2.0), 2 * grid)
    with pytest.raises(DimensionMismatch):
        poly.evaluate([1.0], [1.0, 2.0])


def test_invalid_exponents():
    with pytest.raises(ValueError):
        PolyObservable(1, {(1,): 1.0})
    with pytest.raises(ValueError):
        PolyObservable(1, {(-1, 0): 1.0})


# -- exponentials ---------------------------------------------------------------


def test_exponential_closed_form_against_taylor_series():
    hbar = 1.0
    k1, s1, k2, s2 = 0.3, 0.2, -0.1, 0.4
    series = moyal_bracket_poly(taylor_exponential(1, k1, s1, hbar, 16), taylor_exponential(1, k2, s2, hbar, 16),
                                hbar)
    amp, prod = moyal_bracket_exponential(ExponentialObservable([-1j * k1], [-1j * s1]),
                                          ExponentialObservable([-1j * k2], [-1j * s2]), hbar)
    for x, p in [(0.2, -0.1), (0.0, 0.5), (-0.3, 0.3)]:
        assert abs(amp * prod.evaluate(x, p, hbar) - series.evaluate([x], [p])) < 1e-12


def test_exponential_bracket_tends_to_poisson():
    hbar = 1.0
    for eps in (1e-2, 1e-3):
        f1 = ExponentialObservable([0.7 * eps], [-0.4 * eps])
        f2 = ExponentialObservable([0.2 * eps], [0.9 * eps])
        poisson = poisson_exponential_amplitude(f1, f2, hbar)
        phase = (0.2 * -0.4 - 0.7 * 0.9) * eps**2 / 2
        # sin(z)/z = 1 - z^2/6
        rel = abs(moyal_bracket_exponential(f1, f2, hbar)[0] - poisson) / abs(poisson)
        assert rel == pytest.approx(phase**2 / 6, rel=1e-3)


def test_exponential_product_phase_space_values():
    e = ExponentialObservable([1.0, 0.0], [0.0, 2.0])
    assert e.evaluate([0.5, 3.0], [9.0, 0.25], 1.0) == pytest.approx(np.exp(1j * (0.5 + 0.5)))
    with pytest.raises(ValueError):
        ExponentialObservable([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        ExponentialObservable([np.inf], [1.0])


def test_taylor_exponential_converges():
    poly = taylor_exponential(2, [0.3, -0.2], [0.1, 0.4], 0.5, 20)
    x, p = [0.4, -0.3], [0.2, 0.1]
    assert poly.evaluate(x, p) == pytest.approx(np.exp((0.3 * 0.4 + 0.2 * 0.3 + 0.02 + 0.04) / 0.5), rel=1e-14)


# -- algebraic properties -------------------------------------------------------

monomial = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))
polys = st.dictionaries(monomial, st.integers(-3, 3).filter(bool), min_size=1, max_size=3).map(
    lambda d: PolyObservable(2, {k: float(v) for k, v in d.items()}))
hbars = st.sampled_from([0.25, 0.5, 1.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(A=polys, B=polys, h=hbars)
def test_antisymmetry(A, B, h):
    assert (moyal_bracket_poly(A, B, h) + moyal_bracket_poly(B, A, h)).is_zero(1e-12)


@settings(max_examples=40, deadline=None)
@given(A=polys, B=polys, C=polys, h=hbars, a=st.integers(-3, 3))
def test_linearity(A, B, C, h, a):
    lhs = moyal_bracket_poly(A * a + B, C, h)
    rhs = a * moyal_bracket_poly(A, C, h) + moyal_bracket_poly(B, C, h)
    assert (lhs - rhs).is_zero(1e-10)


@settings(max_examples=25, deadline=None)
@given(A=polys, B=polys, C=polys, h=hbars)
def test_jacobi_identity(A, B, C, h):
    def m(u, v):
        return moyal_bracket_poly(u, v, h)
    total = m(A, m(B, C)) + m(B, m(C, A)) + m(C, m(A, B))
    scale = max(1.0, m(A, m(B, C)).norm(), m(B, m(C, A)).norm())
    assert total.norm() < 1e-10 * scale


@settings(max_examples=40, deadline=None)
@given(A=polys, B=polys)
def test_poisson_limit(A, B):
    # the first correction is O(hbar^2): halving hbar quarters the deviation
    pb = poisson_bracket(A, B)
    d1 = (moyal_bracket_poly(A, B, 1e-3) - pb).norm()
    d2 = (moyal_bracket_poly(A, B, 5e-4) - pb).norm()
    assert d2 <= d1 / 4 * (1 + 1e-6) + 1e-15


def test_spec_bracket_examples():
    assert poisson_bracket(P("x1^2"), P("p1^2")).format() == "4 x1 p1"
    B = P("x1^3 p1^2 + p1^4 - 2 x1 p1")
    assert (moyal_bracket_poly(P("x1"), B, 0.8) - B.derivative((0, 1))).is_zero()
    assert moyal_bracket_poly(B, B, 0.8).is_zero()
    table = semiclassical_limit_check(P("x1^4"), P("p1^4"), [0.1, 0.05, 0.025])
    assert table.exponent == pytest.approx(2.0, abs=0.01)


def test_exponential_amplitude_examples():
    hbar = 0.6
    e1 = ExponentialObservable([0.9], [0.0])
    e2 = ExponentialObservable([0.0], [1.3])
    amp, _ = moyal_bracket_exponential(e1, e2, hbar)
    assert amp == pytest.approx((2 / hbar) * np.sin(-0.9 * 1.3 / (2 * hbar)), abs=1e-15)
    assert moyal_bracket_exponential(e1, e1, hbar)[0] == 0

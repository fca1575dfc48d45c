import numpy as np
import pytest

from stochqm.grid import Grid
from stochqm.observables import (expect_energy, expect_momentum, expect_momentum_function, expect_momentum_squared,
                                 expect_position_function, kinetic_energy_split, momentum_routes,
                                 momentum_squared_from_fluid, uncertainty_report)
from stochqm.propagators import PotentialSpec
from stochqm.state import PhysicalConstants, WaveFunction, cat_state, coherent_state, gaussian, harmonic_eigenstate, \
    normalize


def test_gaussian_moments():
    c = PhysicalConstants(hbar=0.7, mass=1.3)
    g = Grid(1, 256, 24.0)
    sigma, x0, p0 = 0.9, 0.4, 0.6
    wf = gaussian(g, c, sigma, center=x0, momentum=p0)
    assert expect_position_function(wf, lambda x: x) == pytest.approx(x0, abs=1e-12)
    assert expect_momentum(wf)[0] == pytest.approx(p0, abs=1e-12)
    assert expect_momentum_squared(wf) == pytest.approx(p0**2 + c.hbar**2 / (4 * sigma**2), abs=1e-12)
    assert expect_momentum_function(wf, lambda p: p**2) == pytest.approx(expect_momentum_squared(wf), abs=1e-12)
    rep = uncertainty_report(wf)
    assert rep.var_x[0] == pytest.approx(sigma**2, abs=1e-12)
    assert rep.uncertainty_products[0] == pytest.approx(c.hbar / 2, abs=1e-10)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_harmonic_eigenstates(c, line, n):
    wf = harmonic_eigenstate(line, c, 1.0, n=n)
    rep = uncertainty_report(wf, PotentialSpec.harmonic(line, 1.0))
    assert rep.uncertainty_products[0] == pytest.approx(n + 0.5, abs=1e-10)
    assert rep.energy == pytest.approx(n + 0.5, abs=1e-10)
    assert rep.satisfies_heisenberg(c.hbar)


def test_coherent_state_means(c, line):
    rep = uncertainty_report(coherent_state(line, c, 1.0, x0=1.0, p0=0.5))
    assert rep.mean_x == pytest.approx([1.0], abs=1e-12)
    assert rep.mean_p == pytest.approx([0.5], abs=1e-12)
    assert set(rep.to_dict()) == {"mean_x", "mean_p", "var_x", "var_p", "energy", "uncertainty_products"}


def test_products_exceed_the_bound(c, line):
    x = line.axis
    states = [cat_state(line, c, 0.7, 4.0), normalize(WaveFunction(line, np.exp(-x**2 / 4 + 0.05j * x**3), c))]
    for wf in states:
        rep = uncertainty_report(wf)
        assert rep.uncertainty_products[0] > c.hbar / 2
        assert rep.satisfies_heisenberg(c.hbar)


def test_energy_of_free_gaussian():
    c = PhysicalConstants(mass=2.0)
    g = Grid(1, 256, 24.0)
    wf = gaussian(g, c, 1.0, momentum=1.0)
    assert expect_energy(wf, PotentialSpec.free(g)) == pytest.approx((1.0 + 0.25) / 4, abs=1e-12)


def test_kinetic_split():
    c = PhysicalConstants(hbar=0.9, mass=1.2)
    g = Grid(1, 512, 24.0)
    sigma, p0 = 0.8, 0.5
    split = kinetic_energy_split(gaussian(g, c, sigma, momentum=p0))
    assert split.flow == pytest.approx(p0**2 / (2 * c.mass), abs=1e-10)
    assert split.internal == pytest.approx(c.hbar**2 / (8 * c.mass * sigma**2), abs=1e-10)
    assert split.discrepancy < 1e-10


def test_fluid_momentum_squared(c, fine_line):
    x = fine_line.axis
    wf = normalize(WaveFunction(fine_line, np.exp(-(x - 0.5) ** 2 / 4 + 0.05j * x**3), c))
    assert abs(momentum_squared_from_fluid(wf) - expect_momentum_squared(wf)) < 1e-8


def test_momentum_routes_agree(c, line):
    for wf in (gaussian(line, c, 0.8, 0.3, 0.4), cat_state(line, c, 0.7, 4.0, momentum=0.3)):
        routes = momentum_routes(wf)
        assert set(routes.mean_p) == {"position", "momentum", "wigner"}
        assert routes.spread() < 1e-8


def test_momentum_routes_in_two_dimensions(c):
    g = Grid(2, 32, 16.0)
    routes = momentum_routes(gaussian(g, c, (1.0, 1.1), momentum=(0.2, -0.1)))
    assert routes.mean_p["position"] == pytest.approx([0.2, -0.1], abs=1e-10)
    assert routes.spread() < 1e-4


def test_complex_expectation_is_rejected(c, line):
    with pytest.raises(ValueError):
        expect_position_function(gaussian(line, c), lambda x: 1j * x + 1j)


def test_trivial_expectations(c, line):
    wf = gaussian(line, c, 0.9)
    assert expect_position_function(wf, 1.0) == pytest.approx(1.0, abs=1e-13)
    assert expect_momentum_function(wf, 1.0) == pytest.approx(1.0, abs=1e-13)
    assert abs(expect_position_function(wf, lambda x: x)) < 1e-12
    # real wavefunction carries no mean momentum
    assert abs(expect_momentum(harmonic_eigenstate(line, c, 1.0, n=2))[0]) < 1e-15


def test_mean_momentum_routes(c, line):
    wf = gaussian(line, c, 1.1, center=-0.4, momentum=0.8)
    assert expect_momentum(wf)[0] == pytest.approx(expect_momentum_function(wf, lambda p: p), abs=1e-9)


def test_broad_gaussian_limit():
    c = PhysicalConstants()
    g = Grid(1, 1024, 160.0)
    sigma, p0 = 8.0, 0.7
    wf = gaussian(g, c, sigma, momentum=p0)
    assert expect_momentum_squared(wf) == pytest.approx(p0**2 + 1 / (4 * sigma**2), abs=1e-7)
    assert expect_energy(wf, PotentialSpec.free(g)) == pytest.approx(p0**2 / 2 + 1 / (8 * sigma**2), abs=1e-7)


def test_half_normal_mean_of_abs_p():
    # |p| has a kink at p = 0, so the momentum lattice must be fine: dp = 2 pi hbar / L
    c = PhysicalConstants()
    g = Grid(1, 16384, 4096.0)
    sigma = 1.0
    sigma_p = c.hbar / (2 * sigma)
    assert expect_momentum_function(gaussian(g, c, sigma), np.abs) == pytest.approx(sigma_p * np.sqrt(2 / np.pi),
                                                                                     abs=1e-6)

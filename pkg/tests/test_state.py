import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochqm.errors import GridMismatch, ZeroState
from stochqm.fluctuations import velocity_jet
from stochqm.grid import Grid
from stochqm.state import (PhysicalConstants, WaveFunction, coherent_state, gaussian, hydrodynamic_fields,
                           momentum_representation, normalize, plane_wave, reassemble)


def test_constants_must_be_positive():
    with pytest.raises(ValueError):
        PhysicalConstants(hbar=0.0)
    with pytest.raises(ValueError):
        PhysicalConstants(mass=-1.0)


def test_wavefunction_shape_and_immutability(line, c):
    with pytest.raises(GridMismatch):
        WaveFunction(line, np.ones(10), c)
    wf = gaussian(line, c)
    with pytest.raises(ValueError):
        wf.psi[0] = 1.0


def test_normalize(line, c):
    unit = gaussian(line, c, 0.9)
    doubled = normalize(unit.replace(2 * unit.psi))
    assert np.abs(doubled.psi - unit.psi).max() < 1e-15
    assert np.abs(normalize(unit).psi - unit.psi).max() < 1e-15
    with pytest.raises(ZeroState):
        normalize(unit.replace(np.zeros(line.shape)))


def test_real_state_carries_no_current(line, c):
    h = hydrodynamic_fields(gaussian(line, c, 1.3))
    assert np.abs(h.velocity).max() == 0.0


def test_plane_wave_modulated_gaussian_velocity(line):
    c = PhysicalConstants(hbar=0.7, mass=2.0)
    p0 = 0.9
    h = hydrodynamic_fields(gaussian(line, c, 1.0, momentum=p0))
    bulk = line.bulk_mask(h.rho)
    assert np.abs(h.velocity[0] - p0 / c.mass)[bulk].max() < 1e-10


def test_coherent_state_velocity_is_uniform(line, c):
    t = 0.8
    x0, p0 = 1.0, 0.5
    h = hydrodynamic_fields(coherent_state(line, c, 1.0, x0, p0, t=t))
    pt = p0 * np.cos(t) - x0 * np.sin(t)
    bulk = line.bulk_mask(h.rho)
    assert np.abs(h.velocity[0] - pt)[bulk].max() < 1e-10


def test_log_density_uses_floor(line, c):
    h = hydrodynamic_fields(gaussian(line, c, 0.5))
    assert np.all(np.isfinite(h.logrho))
    assert h.logrho.min() >= np.log(1e-12 * h.rho.max()) - 1e-12


def _width(mom):
    d = mom.density
    mean = mom.integrate(mom.p * d)
    return np.sqrt(mom.integrate((mom.p - mean) ** 2 * d)), mean


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_momentum_width_of_gaussian(sigma):
    g = Grid(1, 512, 48.0)
    c = PhysicalConstants(hbar=1.3)
    mom = momentum_representation(gaussian(g, c, sigma))
    width, mean = _width(mom)
    assert abs(width - c.hbar / (2 * sigma)) < 1e-9
    assert abs(mean) < 1e-12


def test_momentum_shift_theorem(line, c):
    mom = momentum_representation(gaussian(line, c, 0.8, momentum=1.1))
    width, mean = _width(mom)
    assert abs(mean - 1.1) < 1e-9
    assert abs(mom.p[np.argmax(mom.density)] - 1.1) < mom.dp


def test_real_even_state_has_real_even_transform(line, c):
    mom = momentum_representation(gaussian(line, c, 0.8))
    vals = mom.values
    assert np.abs(vals.imag).max() < 1e-12
    # p lattice is -N/2..N/2-1; mirror about p = 0
    assert np.abs(vals[1:] - vals[1:][::-1]).max() < 1e-12


@settings(max_examples=15, deadline=None)
@given(sigma=st.floats(0.4, 2.0), x0=st.floats(-2, 2), p0=st.floats(-2, 2))
def test_parseval_between_representations(sigma, x0, p0):
    g = Grid(1, 256, 30.0)
    wf = gaussian(g, PhysicalConstants(), sigma, x0, p0)
    mom = momentum_representation(wf)
    assert abs(mom.integrate(mom.density) - wf.norm()) < 1e-11


def test_reassembly_1d(line, c):
    x = line.axis
    states = [coherent_state(line, c, 1.0, 1.0, 0.5),
              normalize(WaveFunction(line, np.exp(-((x - 0.5) ** 2) / 4 + 0.05j * x**3), c)),
              normalize(WaveFunction(line, np.exp(-(x**2) / 3 + 0.5j * np.sin(x)), c))]
    for wf in states:
        h = hydrodynamic_fields(wf)
        back = reassemble(h)
        bulk = line.bulk_mask(h.rho)
        assert np.abs(np.abs(back.psi) - np.abs(wf.psi)).max() < 1e-10
        assert np.abs(hydrodynamic_fields(back).current - h.current)[:, bulk].max() < 1e-8


def test_reassembly_2d(c):
    g = Grid(2, 128, 16.0)
    x1, x2 = g.coords
    phase = 0.1 * (x1**2 * x2 + x2**3 / 3) + 0.2 * x1
    wf = normalize(WaveFunction(g, np.exp(-(x1**2 + x2**2) / 3 + 1j * phase), c))
    h = hydrodynamic_fields(wf)
    back = reassemble(h)
    bulk = g.bulk_mask(h.rho)
    assert np.abs(np.abs(back.psi) - np.abs(wf.psi)).max() < 1e-10
    assert np.abs(hydrodynamic_fields(back).current - h.current)[:, bulk].max() < 1e-8


def test_velocity_is_irrotational_in_2d(c):
    g = Grid(2, 128, 16.0)
    wf = gaussian(g, c, (0.7, 1.1), (0.3, -0.2), (0.4, -0.6))
    # derivatives of v come from the pointwise jet; tails are excluded by construction
    vj = velocity_jet(wf, 1)
    curl = vj[1, (1, 0)] - vj[0, (0, 1)]
    assert np.abs(curl)[g.bulk_mask(wf.rho)].max() < 1e-10


def test_plane_wave_is_uniform(c):
    g = Grid(1, 64, 10.0)
    wf = plane_wave(g, c, 2)
    assert np.abs(wf.rho - 0.1).max() < 1e-15
    np.testing.assert_allclose(hydrodynamic_fields(wf).velocity[0], 2 * np.pi * 2 / 10, atol=1e-12)


def test_periodized_gaussian_is_smooth_at_boundary(c):
    g = Grid(1, 128, 6.0)
    wf = gaussian(g, c, 1.0, periodic=True)
    spectrum = np.abs(g.fft(wf.psi))
    assert spectrum[g.points // 4: 3 * g.points // 4].max() < 1e-12 * spectrum.max()

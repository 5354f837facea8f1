import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdiff.fields import NO_FLUX, DensityField, Grid, gaussian_density, observables, periodic_grid
from qdiff.model import ModelParams, derive_groups
from qdiff.potentials import (
    CosinePotential,
    EffectivePotentialSpec,
    HarmonicPotential,
    bohm_quantum_potential,
    equilibrium_density,
    harmonic_effective_dispersion,
    harmonic_effective_potential,
    quasi_equilibrium_Q,
)


def test_cosine_values():
    V = CosinePotential(2.0, 3.0)
    assert V.value(0.0) == pytest.approx(2.0)
    assert V.period == pytest.approx(2 * math.pi / 3)
    x = np.linspace(-2, 2, 9)
    h = 1e-6
    assert np.allclose(V.gradient(x), (V.value(x + h) - V.value(x - h)) / (2 * h), rtol=1e-7, atol=1e-8)
    assert np.allclose(V.force(x), -V.gradient(x))
    assert np.allclose(V.curvature(x), -9.0 * V.value(x))


def test_harmonic_values():
    V = HarmonicPotential(1.0, 2.0)
    assert V.value(1.0) == pytest.approx(2.0)
    assert V.force(1.0) == pytest.approx(-4.0)


@given(
    st.floats(min_value=0.0, max_value=20.0),
    st.floats(min_value=0.0, max_value=2.0),
)
def test_quasi_equilibrium_forms_agree(beta_u, theta):
    p = ModelParams.reduced_thermal(beta_u, theta)
    g = derive_groups(p)
    x = np.linspace(0, 2 * math.pi, 33)
    res = quasi_equilibrium_Q(CosinePotential(beta_u, 1.0), g, x)
    scale = max(1.0, theta * beta_u * (1 + beta_u))
    assert np.allclose(res.general, res.closed_form, atol=1e-12 * scale)


def test_quasi_equilibrium_needs_temperature():
    g = derive_groups(ModelParams.reduced_zero_temperature(0.5))
    with pytest.raises(ValueError):
        quasi_equilibrium_Q(CosinePotential(1.0, 1.0), g, 0.0)


def test_effective_potential():
    base = CosinePotential(1.0, 1.0)
    x = np.linspace(0, 6, 7)
    assert np.allclose(EffectivePotentialSpec(base, 0.0, 1.0)(x), base.value(x))
    assert np.allclose(EffectivePotentialSpec(base, 0.1, 1.0)(x), 0.9 * base.value(x))
    full = EffectivePotentialSpec(base, 0.3, 2.0, include_nonlinear=True)(x)
    V = base.value(x)
    assert np.allclose(full, 0.7 * V + 0.2 * V * V)
    # W = [1 - theta (1 - beta V / 3)] V
    assert np.allclose(full, (1 - 0.3 * (1 - 2.0 * V / 3)) * V)


def test_harmonic_effective_potential():
    V = HarmonicPotential(1.0, 1.0)
    W = harmonic_effective_potential(V, beta=0.5, hbar=1.0)
    assert W(2.0) == pytest.approx((1 - (0.25 ** 2) / 3) * 2.0)


def test_harmonic_dispersion():
    res = harmonic_effective_dispersion(HarmonicPotential(1.0, 1.0), beta=0.5, hbar=1.0)
    assert res.classical == pytest.approx(2.0)
    assert res.semiclassical / res.classical == pytest.approx(1.0212765957446808511, rel=1e-15)
    assert res.exact / res.classical == pytest.approx(1.0207470412683991421, rel=1e-14)
    assert abs(res.semiclassical / res.exact - 1) < 1e-3
    with pytest.raises(ValueError):
        harmonic_effective_dispersion(HarmonicPotential(1.0, 1.0), beta=2.0, hbar=1.0)


def test_bohm_potential_of_gaussian():
    # psi = exp(-x**2 / 4 s**2): psi''/psi = x**2 / 4 s**4 - 1 / 2 s**2
    g = Grid(2048, 40.0, origin=-20.0)
    s = 2.0
    rho = gaussian_density(g, 0.0, s)
    q = bohm_quantum_potential(rho, mass=1.0, hbar=1.0)
    x = g.centers
    exact = -(1.0 / 2.0) * ((x / (2 * s * s)) ** 2 - 1 / (2 * s * s))
    core = np.abs(x) < 8
    assert np.allclose(q.values[core], exact[core], atol=1e-4)
    # only the far tails fall below 1e-14 of the peak
    edge = s * math.sqrt(2 * math.log(1e14))
    assert q.floored_cells == pytest.approx(np.count_nonzero(np.abs(x) > edge), abs=2)


def test_bohm_potential_floor_and_uniform():
    g = periodic_grid(1.0, 4, 16)
    rho = DensityField(g, np.full(g.cell_count, 1.0 / g.domain_length))
    assert np.allclose(bohm_quantum_potential(rho, 1.0, 1.0).values, 0.0, atol=1e-12)
    vals = rho.values.copy()
    vals[:3] = 0.0
    res = bohm_quantum_potential(DensityField(g, vals), 1.0, 1.0)
    assert res.floored_cells == 3
    assert np.all(np.isfinite(res.values))


def test_bohm_potential_no_flux_ghost():
    g = Grid(64, 1.0, boundary=NO_FLUX)
    rho = DensityField(g, np.full(64, 1.0))
    assert np.allclose(bohm_quantum_potential(rho, 1.0, 1.0).values, 0.0)


def test_equilibrium_density():
    g = Grid(1024, 32.0, boundary=NO_FLUX, origin=-16.0)
    rho = equilibrium_density(lambda x: 0.5 * x * x, 1.0, g)
    assert rho.mass() == pytest.approx(1.0, rel=1e-14)
    assert observables(rho).dispersion == pytest.approx(1.0, rel=1e-10)
    with pytest.raises(ValueError):
        equilibrium_density(np.ones(3), 1.0, g)

import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from kinrelax.errors import DomainError
from kinrelax.field import (
    boundary_flux,
    exit_time_density,
    lp_error,
    lp_error_direct,
    not_exited_mass,
    reconstruct,
    time_average,
)
from kinrelax.geometry import PhasePoint, chord_to_wall, random_phase_points, reduced_coordinates
from kinrelax.sources import EquilibriumMultiple, maxwellian

SQRT_2PI = math.sqrt(2.0 * math.pi)
OMEGA = 4.0 * math.pi / 3.0


def _points(n, rng):
    return reduced_coordinates(*random_phase_points(n, rng))


def _gl(a, b, n):
    x, w = leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def test_equilibrium_reconstructs_to_one(equilibrium_solution, rng):
    rho, speed, xi = _points(500, rng)
    for t in (0.0, 0.7, 5.0, 60.0):
        g = reconstruct(equilibrium_solution, EquilibriumMultiple(1.0), t, rho, speed, xi)
        np.testing.assert_allclose(g, 1.0, atol=1e-9)


def test_monokinetic_depends_only_on_exit_time(grey_solution, grey, rng):
    rho = rng.uniform(0.0, 1.0, 200)
    xi = rng.uniform(-1.0, 1.0, 200)
    u = reconstruct(grey_solution, grey, 3.0, rho, np.ones_like(rho), xi)
    tau = chord_to_wall(rho, xi)
    np.testing.assert_array_equal(u, grey_solution.at(3.0 - tau))
    # two different points with the same exit time carry the same intensity
    a = reconstruct(grey_solution, grey, 3.0, PhasePoint(0.0, 1.0, 0.3))
    b = reconstruct(grey_solution, grey, 3.0, PhasePoint(0.6, 1.0, 0.3))
    assert chord_to_wall(0.6, 0.3) == pytest.approx(1.0)
    assert a == pytest.approx(b, abs=1e-15)


def test_initial_time_returns_data(short_bump_solution, bump, rng):
    rho, speed, xi = _points(300, rng)
    g = reconstruct(short_bump_solution, bump, 0.0, rho, speed, xi)
    np.testing.assert_allclose(g, bump.density(rho, speed) / maxwellian(speed), rtol=1e-12)


def test_zero_speed_keeps_initial_data(short_bump_solution, bump):
    g = reconstruct(short_bump_solution, bump, 5.0, PhasePoint(0.4, 0.0, 0.0))
    assert g == pytest.approx(float(bump.density(0.4, 0.0) / maxwellian(0.0)))


def test_reconstruct_outside_horizon(short_bump_solution, bump):
    with pytest.raises(DomainError):
        reconstruct(short_bump_solution, bump, 50.0, PhasePoint(0.1, 1.0, 0.0))


def test_equilibrium_lp_error_vanishes(equilibrium_solution):
    for t in (0.0, 1.0, 10.0, 80.0):
        assert lp_error(equilibrium_solution, EquilibriumMultiple(1.0), t, 2.0) < 1e-10


@pytest.mark.parametrize("p", [1.0, 2.0, 6.0])
def test_initial_lp_error_independent_quadrature(short_bump_solution, bump, p):
    g_inf = SQRT_2PI * short_bump_solution.mu_infinity_discrete
    rho, wrho = _gl(0.0, 1.0, 80)
    total = 0.0
    for a, b in ((0.0, 3.0), (3.0, 6.0), (6.0, 12.0)):
        r, wr = _gl(a, b, 80)
        R, Q = np.meshgrid(rho, r, indexing="ij")
        m = maxwellian(Q)
        h = np.abs(bump.density(R, Q) / m - g_inf) ** p * m
        total += np.sum(wrho[:, None] * wr[None, :] * 16 * math.pi ** 2 * R ** 2 * Q ** 2 * h)
    assert lp_error(short_bump_solution, bump, 0.0, p) == pytest.approx(total, rel=1e-4 if p == 1 else 1e-9)


@pytest.mark.parametrize("t", [0.5, 3.0, 8.0])
def test_lp_error_vs_direct(short_bump_solution, bump, t):
    ref = lp_error(short_bump_solution, bump, t, 2.0)
    fine = lp_error(short_bump_solution, bump, t, 2.0, nodes=64)
    assert fine == pytest.approx(ref, rel=1e-8)
    coarse = lp_error_direct(short_bump_solution, bump, t, 2.0, nodes=48)
    dense = lp_error_direct(short_bump_solution, bump, t, 2.0, nodes=96)
    assert dense == pytest.approx(ref, rel=1e-2)
    assert abs(dense - ref) <= abs(coarse - ref) + 1e-12


def test_split_matches_unsplit_at_smooth_time(short_bump_solution, bump):
    a = lp_error_direct(short_bump_solution, bump, 0.0, 2.0, nodes=48, split=True)
    b = lp_error_direct(short_bump_solution, bump, 0.0, 2.0, nodes=240, split=False)
    assert a == pytest.approx(b, rel=1e-6)


def test_not_exited_mass_bound():
    for t in (2.0, 5.0, 20.0, 100.0):
        bound = OMEGA * (4.0 * math.pi / 3.0) * (2.0 / t) ** 3 * (2.0 * math.pi) ** -1.5
        m = not_exited_mass(t)
        assert 0.0 < m <= bound
    # t^-3 decay
    assert not_exited_mass(100.0) / not_exited_mass(50.0) == pytest.approx(1 / 8, rel=1e-2)
    assert not_exited_mass(0.0) == OMEGA


def test_exit_time_density_normalized():
    s, w = _gl(0.0, 1.0, 64)
    total = 0.0
    for a, b in zip(np.r_[0.0, np.geomspace(0.5, 1e4, 40)][:-1], np.geomspace(0.5, 1e4, 40)):
        x, wx = _gl(a, b, 32)
        total += np.sum(wx * exit_time_density(x))
    total += (2 * math.pi) ** -1.5 / (3 * 1e4 ** 3)
    assert total == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-8)


def test_maximum_principle(bump_solution, bump, rng):
    rho, speed, xi = _points(2000, rng)
    cap = max(bump.bound_constant, SQRT_2PI * bump_solution.values.max())
    for t in (0.0, 0.3, 2.0, 30.0, 150.0):
        g = reconstruct(bump_solution, bump, t, rho, speed, xi)
        assert np.all(g >= 0.0) and np.all(g <= cap * (1 + 1e-12))


def test_normalized_norms_increase_with_p(short_bump_solution, bump):
    for t in (1.0, 4.0, 10.0):
        norms = [(lp_error(short_bump_solution, bump, t, p) / OMEGA) ** (1.0 / p) for p in (1.0, 2.0, 4.0, 6.0)]
        assert np.all(np.diff(norms) >= -1e-12)


def test_boundary_flux_independent_of_position(short_bump_solution, bump):
    pts = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0], [0.6, 0.8, 0], [0, -0.6, 0.8],
                    [0.48, 0.6, 0.64], [-0.36, -0.48, 0.8]], dtype=float)
    flux = boundary_flux(short_bump_solution, bump, 5.0, pts)
    assert np.ptp(flux) < 1e-8
    assert flux[0] == pytest.approx(short_bump_solution.at(5.0), rel=1e-4)


def test_time_average():
    t = np.linspace(0.0, 10.0, 1001)
    assert time_average(t, t ** 2, (0.0, 10.0)) == pytest.approx(100.0 / 3.0, rel=1e-5)
    with pytest.raises(DomainError):
        time_average(t, t, (20.0, 30.0))


def test_lp_error_rejects_grey(grey_solution, grey):
    with pytest.raises(DomainError):
        lp_error(grey_solution, grey, 1.0, 2.0)

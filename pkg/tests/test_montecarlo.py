import math

import numpy as np
import pytest

from kinrelax.errors import DomainError
from kinrelax.kernels import GAS
from kinrelax.montecarlo import (
    compare_intervals,
    compare_with_renewal,
    diffuse_resample,
    equilibrium_flux,
    evolve,
    grey_interval_cdf,
    sample_initial,
    simulate,
)
from kinrelax.renewal import solve
from kinrelax.sources import ConcentratedBox, EquilibriumMultiple

OMEGA = 4.0 * math.pi / 3.0


def _within_3sigma(samples, expected):
    return abs(samples.mean() - expected) < 3.0 * samples.std(ddof=1) / math.sqrt(len(samples))


def test_equilibrium_speed_mean():
    ens = sample_initial(EquilibriumMultiple(1.0), 200_000, seed=5)
    assert _within_3sigma(np.linalg.norm(ens.velocities, axis=1), 2.0 * math.sqrt(2.0 / math.pi))
    assert ens.total_mass == pytest.approx(OMEGA, rel=1e-12)
    assert np.all(np.linalg.norm(ens.positions, axis=1) <= 1.0)


def test_box_support():
    ens = sample_initial(ConcentratedBox(0.2), 50_000, seed=2)
    assert np.all(np.linalg.norm(ens.positions, axis=1) <= 0.2)
    assert np.all(np.linalg.norm(ens.velocities, axis=1) <= 0.2)
    assert ens.total_mass == pytest.approx(OMEGA ** 2, rel=1e-12)


def test_bump_positions_radial_law(bump):
    ens = sample_initial(bump, 100_000, seed=4)
    assert np.all(np.linalg.norm(ens.positions, axis=1) <= 1.0)
    assert ens.total_mass == pytest.approx(bump.total_mass(), rel=1e-12)


def test_sampling_deterministic():
    a = sample_initial(EquilibriumMultiple(1.0), 70_000, seed=9)
    b = sample_initial(EquilibriumMultiple(1.0), 70_000, seed=9)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.velocities, b.velocities)
    c = sample_initial(EquilibriumMultiple(1.0), 70_000, seed=10)
    assert not np.array_equal(a.positions, c.positions)


def test_resample_gas_moments():
    rng = np.random.default_rng(1)
    n = 1_000_000
    normals = np.tile([0.0, 0.0, -1.0], (n, 1))
    v = diffuse_resample(rng, normals)
    speed = np.linalg.norm(v, axis=1)
    cos = -v[:, 2] / speed
    assert _within_3sigma(speed, 1.5 * math.sqrt(math.pi / 2.0))
    assert _within_3sigma(cos, 2.0 / 3.0)
    assert np.all(cos > 0)


def test_resample_grey_unit_speed(rng):
    normals = rng.normal(size=(1000, 3))
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    v = diffuse_resample(rng, normals, kind="grey")
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, rtol=1e-14)
    assert np.all(np.einsum("ij,ij->i", v, normals) > 0)


def test_equilibrium_flux_flat():
    tally = simulate(EquilibriumMultiple(1.0), 200_000, 3, 10.0, 0.5, block_size=4096)
    level = equilibrium_flux(EquilibriumMultiple(1.0))
    assert level == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-12)
    z = (tally.counts - level) / tally.stderr
    assert np.mean(np.abs(z) <= 3.0) >= 0.9
    assert np.all(tally.counts >= 0.0) and np.all(np.isfinite(tally.counts))


def test_gas_intervals_follow_kernel():
    tally = simulate(EquilibriumMultiple(1.0), 100_000, 8, 10.0, 0.5)
    agr = compare_intervals(tally, GAS.cdf)
    assert agr.passed()
    assert tally.interval_total > 100_000


def test_grey_intervals_bounded_by_diameter(grey):
    tally = simulate(grey, 100_000, 6, 12.0, 0.5)
    assert tally.interval_edges[-1] == 2.0
    # every chord fits in the histogram range: nothing is lost above 2
    assert tally.interval_counts.sum() == tally.interval_total
    assert compare_intervals(tally, grey_interval_cdf).passed()


def test_mass_is_conserved():
    ens = sample_initial(EquilibriumMultiple(2.0), 40_000, seed=1)
    tally = evolve(ens, 5.0, 0.5)
    assert tally.total_mass == pytest.approx(2.0 * OMEGA, rel=1e-12)
    np.testing.assert_allclose(ens.weights, 2.0 * OMEGA / 40_000, rtol=1e-14)


def test_box_unthermalized_mass():
    eps, horizon = 0.2, 40.0
    tally = simulate(ConcentratedBox(eps), 400_000, 12, horizon, 1.0)
    mass = OMEGA ** 2
    lo = mass * ((1.0 - eps) / (horizon * eps)) ** 3
    hi = mass * ((1.0 + eps) / (horizon * eps)) ** 3
    assert lo * 0.8 < tally.unthermalized_mass < hi * 1.2
    assert tally.zero_speed_mass == 0.0


def test_workers_do_not_change_tally():
    ens = sample_initial(EquilibriumMultiple(1.0), 100_000, seed=21)
    a = evolve(ens, 4.0, 0.5, workers=1)
    b = evolve(ens, 4.0, 0.5, workers=4)
    np.testing.assert_array_equal(a.counts, b.counts)
    np.testing.assert_array_equal(a.interval_counts, b.interval_counts)


def test_bump_against_renewal(short_bump_solution, bump):
    tally = simulate(bump, 200_000, 13, 12.0, 0.5, block_size=4096)
    assert compare_with_renewal(tally, short_bump_solution).passed()


def test_box_against_renewal():
    box = ConcentratedBox(0.3)
    sol = solve(GAS, box, 10.0, 1e-2)
    tally = simulate(box, 200_000, 17, 10.0, 0.5, block_size=4096)
    assert compare_with_renewal(tally, sol).passed()


def test_invalid_horizon():
    ens = sample_initial(EquilibriumMultiple(1.0), 10, seed=0)
    with pytest.raises(DomainError):
        evolve(ens, 0.0, 0.5)

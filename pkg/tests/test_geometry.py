import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from kinrelax.errors import DomainError, InfiniteExitTimeError
from kinrelax.geometry import (
    PhasePoint,
    boundary_exit_time,
    forward_exit_time,
    interior_exit_time,
    random_phase_points,
    reduced_coordinates,
)


@pytest.mark.parametrize("cos_theta, speed, expected", [(1.0, 1.0, 2.0), (0.0, 5.0, 0.0), (0.5, 2.0, 0.5)])
def test_boundary_exit_time_examples(cos_theta, speed, expected):
    assert boundary_exit_time(cos_theta, speed) == pytest.approx(expected, abs=1e-15)


def test_boundary_exit_time_zero_speed():
    with pytest.raises(InfiniteExitTimeError):
        boundary_exit_time(0.5, 0.0)


def test_interior_exit_time_from_centre():
    for xi in (-1.0, 0.0, 0.3, 1.0):
        assert interior_exit_time(PhasePoint(0.0, 2.0, xi)) == pytest.approx(0.5, abs=1e-15)


def test_interior_exit_time_at_wall_matches_boundary_time():
    assert interior_exit_time(PhasePoint(1.0, 1.0, 1.0)) == pytest.approx(2.0, abs=1e-15)
    y = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(interior_exit_time(np.ones_like(y), 1.7, y), boundary_exit_time(y, 1.7), atol=1e-15)


def test_interior_exit_time_against_bisection():
    t = interior_exit_time(PhasePoint(0.5, 1.0, 0.0))
    x = np.array([0.5, 0.0, 0.0])
    v = np.array([0.0, 1.0, 0.0])
    oracle = brentq(lambda s: np.linalg.norm(x - s * v) - 1.0, 0.0, 2.0, xtol=1e-15)
    assert t == pytest.approx(math.sqrt(0.75), abs=1e-14)
    assert t == pytest.approx(oracle, abs=1e-13)


def test_zero_speed_raises_with_mask():
    with pytest.raises(InfiniteExitTimeError) as info:
        interior_exit_time(np.array([0.1, 0.2]), np.array([1.0, 0.0]), np.array([0.0, 0.0]))
    assert info.value.mask.tolist() == [False, True]


def test_phase_point_validation():
    with pytest.raises(DomainError):
        PhasePoint(1.5, 1.0, 0.0)
    with pytest.raises(DomainError):
        PhasePoint(0.5, -1.0, 0.0)
    with pytest.raises(DomainError):
        PhasePoint(0.5, 1.0, 1.2)


def test_exit_point_lies_on_sphere_for_random_points(rng):
    x, v = random_phase_points(10_000, rng)
    rho, speed, xi = reduced_coordinates(x, v)
    t = interior_exit_time(np.minimum(rho, 1.0), speed, xi)
    err = np.abs(np.linalg.norm(x - t[:, None] * v, axis=1) - 1.0)
    assert err.max() < 1e-12
    assert np.all(t * speed <= 2.0 + 1e-12)
    tf = forward_exit_time(np.minimum(rho, 1.0), speed, xi)
    assert np.abs(np.linalg.norm(x + tf[:, None] * v, axis=1) - 1.0).max() < 1e-12


def test_stable_root_near_grazing_exit():
    # rho ~ 1 and xi ~ -1: the backward ray leaves almost immediately
    rho, xi = 1.0 - 1e-12, -1.0
    t = interior_exit_time(rho, 1.0, xi)
    assert t == pytest.approx(1e-12, rel=1e-3)


@settings(max_examples=200, deadline=None)
@given(rho=st.floats(0.0, 1.0), speed=st.floats(1e-3, 50.0), xi=st.floats(-1.0, 1.0))
def test_chord_never_exceeds_diameter(rho, speed, xi):
    t = interior_exit_time(PhasePoint(rho, speed, xi))
    assert 0.0 <= t * speed <= 2.0 + 1e-12

"""Transport geometry of the unit ball.

Positions and velocities are handled in reduced radial coordinates: the radius
``rho = |x|``, the speed ``|v|`` and ``xi``, the cosine of the angle between
``x`` and ``v``.  All exit times are *backward*: the time ``s`` at which
``x - s v`` leaves the ball.  The forward exit time of the ray ``x + s v`` is the
backward exit time with ``xi`` negated (see :func:`forward_exit_time`).
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfiniteExitTimeError

BALL_VOLUME = 4.0 * np.pi / 3.0
SPHERE_AREA = 4.0 * np.pi
DIAMETER = 2.0


@dataclass(frozen=True)
class PhasePoint:
    rho: float
    speed: float
    xi: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [0, 1], got {self.rho}")
        if self.speed < 0.0:
            raise DomainError(f"speed must be nonnegative, got {self.speed}")
        if not -1.0 <= self.xi <= 1.0:
            raise DomainError(f"xi must lie in [-1, 1], got {self.xi}")

    @classmethod
    def from_vectors(cls, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        rho = float(np.linalg.norm(x))
        speed = float(np.linalg.norm(v))
        if rho == 0.0 or speed == 0.0:
            xi = 0.0
        else:
            xi = float(np.clip(x @ v / (rho * speed), -1.0, 1.0))
        return cls(min(rho, 1.0), speed, xi)


def _check_speed(speed):
    speed = np.asarray(speed, dtype=float)
    zero = speed == 0.0
    if np.any(zero):
        raise InfiniteExitTimeError(mask=zero if zero.ndim else None)
    if np.any(speed < 0.0):
        raise DomainError("speed must be nonnegative")
    return speed


def boundary_exit_time(cos_theta, speed):
    """Exit time ``2 cos(theta) / |v|`` from a wall point, ``theta`` measured from the normal."""
    speed = _check_speed(speed)
    cos_theta = np.asarray(cos_theta, dtype=float)
    if np.any((cos_theta < 0.0) | (cos_theta > 1.0)):
        raise DomainError("cos_theta must lie in [0, 1]")
    out = 2.0 * cos_theta / speed
    return float(out) if out.ndim == 0 else out


def chord_to_wall(rho, xi):
    """Distance from ``x`` back to the sphere along ``-v``: ``rho xi + sqrt(rho^2 xi^2 + 1 - rho^2)``.

    Uses the cancellation-free branch when ``rho xi < 0``.
    """
    rho = np.asarray(rho, dtype=float)
    xi = np.asarray(xi, dtype=float)
    b = rho * xi
    c = np.maximum(1.0 - rho * rho, 0.0)
    d = np.sqrt(b * b + c)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(b >= 0.0, b + d, c / (d - b))
    # rho = 1, xi = -1: zero chord, d - b = 2
    return out


def interior_exit_time(p, speed=None, xi=None):
    """Backward exit time of the characteristic through a phase point.

    Accepts a :class:`PhasePoint`, or arrays ``(rho, speed, xi)``.  Raises
    :class:`InfiniteExitTimeError` for zero speed.
    """
    if isinstance(p, PhasePoint):
        rho, speed, xi = p.rho, p.speed, p.xi
    else:
        rho = p
    speed = _check_speed(speed)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho > 1.0 + 1e-15) or np.any(rho < 0.0):
        raise DomainError("rho must lie in [0, 1]")
    out = chord_to_wall(np.minimum(rho, 1.0), xi) / speed
    return float(out) if np.ndim(out) == 0 else out


def forward_exit_time(rho, speed, xi):
    """Time at which ``x + s v`` reaches the sphere."""
    return interior_exit_time(rho, speed, -np.asarray(xi, dtype=float))


def random_phase_points(n, rng, max_speed=5.0):
    """Uniform positions in the ball and isotropic velocities, as 3D arrays."""
    x = _uniform_ball(n, rng)
    v = _isotropic(n, rng) * rng.uniform(0.0, max_speed, size=(n, 1))
    return x, v


def _uniform_ball(n, rng):
    d = _isotropic(n, rng)
    return d * rng.random((n, 1)) ** (1.0 / 3.0)


def _isotropic(n, rng):
    z = rng.uniform(-1.0, 1.0, size=n)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    s = np.sqrt(1.0 - z * z)
    return np.column_stack((s * np.cos(phi), s * np.sin(phi), z))


def reduced_coordinates(x, v):
    """``(rho, speed, xi)`` arrays from stacked 3-vectors."""
    rho = np.linalg.norm(x, axis=-1)
    speed = np.linalg.norm(v, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        xi = np.einsum("...i,...i->...", x, v) / (rho * speed)
    xi = np.where(np.isfinite(xi), np.clip(xi, -1.0, 1.0), 0.0)
    return rho, speed, xi

"""Phase-space field rebuilt from the wall flux, and its distance to equilibrium.

Along a backward characteristic a molecule either has not met the wall yet
(it still carries ``f_in``) or was last emitted at time ``t - tau`` with the wall
Maxwellian of weight ``sqrt(2 pi) mu(t - tau)``.  In the Maxwellian-weighted
unknown ``g = f / M``::

    g(t, x, v) = sqrt(2 pi) mu(t - tau) 1_{t > tau} + f_in(|x - t v|, |v|) / M(v) 1_{t < tau}

The weighted ``L^p`` distance ``int int |g - g_inf|^p M dv dx`` splits into the
two regions.  The emitted part only sees the law of the chord length behind a
uniform point in a random direction, ``3 (4 - l^2) / 16`` on ``[0, 2]``, so it
collapses to a one-dimensional convolution in time.  The not-yet-emitted part is
integrated in chord coordinates (chord length ``C`` and backward distance ``a``),
in which the integrand is smooth.
"""
import math

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gammainc

from .errors import DomainError
from .fitting import DecayFit, FitMode, FitModel, exponential_fit, power_fit  # noqa: F401
from .geometry import BALL_VOLUME, PhasePoint, chord_to_wall, reduced_coordinates
from .quadrature import composite_gauss_legendre, gauss_legendre
from .sources import MAXWELL_NORM, SPEED_CUTOFF, maxwellian

SQRT_2PI = math.sqrt(2.0 * math.pi)
FIELD_NODES = 32


def _unpack(p, speed=None, xi=None):
    if isinstance(p, PhasePoint):
        return np.float64(p.rho), np.float64(p.speed), np.float64(p.xi)
    return (np.asarray(p, dtype=float), np.asarray(speed, dtype=float), np.asarray(xi, dtype=float))


def _limit(sol, discrete=True):
    if discrete and math.isfinite(sol.mu_infinity_discrete):
        return sol.mu_infinity_discrete
    return sol.mu_infinity


def reconstruct(sol, f_in, t, p, speed=None, xi=None):
    """``g(t, x, v)`` for gas data, or the intensity ``u(t, x, omega)`` for grey data.

    ``p`` is a :class:`PhasePoint` or the ``rho`` array (then pass ``speed`` and
    ``xi``).  Zero-speed molecules never reach the wall and keep ``f_in / M``.
    """
    rho, r, xi_ = _unpack(p, speed, xi)
    rho, r, xi_ = np.broadcast_arrays(rho, r, xi_)
    if t < 0 or t > sol.horizon * (1 + 1e-12):
        raise DomainError("t outside the solved horizon")
    moving = r > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(moving, chord_to_wall(rho, xi_) / np.where(moving, r, 1.0), np.inf)
    # |x - t v|^2 with x.v = rho r xi
    back2 = np.clip(rho * rho + (t * r) ** 2 - 2.0 * t * rho * r * xi_, 0.0, 1.0)
    emitted = t > tau
    out = np.empty(rho.shape)
    lag = np.where(emitted, t - tau, 0.0)
    wall = sol.at(np.clip(lag, 0.0, sol.horizon))
    if f_in.kind == "grey":
        out = np.where(emitted, wall, f_in(back2))
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            inside = f_in.density(np.sqrt(back2), r) / maxwellian(r)
        out = np.where(emitted, SQRT_2PI * wall, inside)
    return float(out) if out.ndim == 0 else out


def exit_time_density(s):
    """``Q(s)``: density in ``s`` of ``r^2 M(r) x`` chord law, pushed to the exit time ``l / r``.

    ``int_0^inf Q = 1 / (4 pi)``; ``Q(s) ~ (2 pi)^{-3/2} s^{-4}`` for large ``s``.
    Closed form through regularized incomplete gamma functions with ``u = 2 / s^2``.
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    sp = s[pos]
    u = 2.0 / (sp * sp)
    out[pos] = 3.0 / 16.0 * MAXWELL_NORM * 8.0 * (gammainc(2, u) - sp * sp * gammainc(3, u))
    return out


def _emitted_part(sol, t, p_exp, g_inf, nodes=4):
    """``4 pi |Omega| int_0^t |sqrt(2 pi) mu(t - s) - g_inf|^p Q(s) ds`` on grid-aligned panels."""
    n = int(round(t / sol.dt))
    if n == 0:
        return 0.0
    # panels in the lag u = t - s: [t_i, t_{i+1}], i < n, where mu is linear
    lo = sol.dt * np.arange(n)
    x, w = gauss_legendre(lo, lo + sol.dt, nodes)
    frac = (x - lo[:, None]) / sol.dt
    mu = sol.values[:n, None] * (1.0 - frac) + sol.values[1:n + 1, None] * frac
    gdev = np.abs(SQRT_2PI * mu - g_inf) ** p_exp
    q = exit_time_density(t - x)
    return 4.0 * math.pi * BALL_VOLUME * float(np.sum(w * gdev * q))


def _inside_part(f_in, t, p_exp, g_inf, nodes=FIELD_NODES):
    """Not-yet-emitted region ``t < tau`` in chord coordinates.

    For a uniform point and direction, the chord through it has length ``C``
    with density ``3 C^2 / 8`` on ``[0, 2]`` and the point sits at backward
    distance ``a`` uniform on ``[0, C]``.  The molecule is still inside when
    ``a > t r``; its origin ``x - t v`` lies at distance ``d = a - t r`` from the
    chord end, at squared radius ``1 - d (C - d)``.
    """
    rmax = SPEED_CUTOFF if t == 0 else min(SPEED_CUTOFF, 2.0 / t)
    breaks = np.unique(np.minimum([0.0, 2.0, 4.0, 6.0, SPEED_CUTOFF], rmax))
    r, wr = composite_gauss_legendre(breaks, nodes)
    tr = t * r
    C, wc = gauss_legendre(tr, np.full_like(tr, 2.0), nodes)  # (nr, nc)
    a, wa = gauss_legendre(np.broadcast_to(tr[:, None], C.shape), C, nodes)  # (nr, nc, na)
    d = a - tr[:, None, None]
    rho2 = np.clip(1.0 - d * (C[..., None] - d), 0.0, 1.0)
    rr = np.broadcast_to(r[:, None, None], rho2.shape)
    h = f_in.density(np.sqrt(rho2), rr) / maxwellian(rr)
    dev = np.abs(h - g_inf) ** p_exp
    inner = np.sum(wa * dev, axis=-1) / C  # average over a, times (C - t r) / C via weights
    chord = np.sum(wc * 0.375 * C * C * inner, axis=-1)
    radial = np.sum(wr * 4.0 * math.pi * r * r * maxwellian(r) * chord)
    return BALL_VOLUME * float(radial)


def lp_error(sol, f_in, t, p_exponent, root=False, discrete=True, nodes=FIELD_NODES):
    """``int int |g(t) - sqrt(2 pi) mu_inf|^p M dv dx`` (or its ``p``-th root with ``root=True``)."""
    if p_exponent < 1:
        raise DomainError("p must be at least 1")
    if f_in.kind != "gas":
        raise DomainError("lp_error needs gas initial data")
    if t < 0 or t > sol.horizon * (1 + 1e-12):
        raise DomainError("t outside the solved horizon")
    g_inf = SQRT_2PI * _limit(sol, discrete)
    val = _inside_part(f_in, t, p_exponent, g_inf, nodes) + _emitted_part(sol, t, p_exponent, g_inf)
    return val ** (1.0 / p_exponent) if root else val


def lp_error_direct(sol, f_in, t, p_exponent, nodes=48, split=True, discrete=True):
    """Same functional by tensor Gauss-Legendre in ``(rho, speed, xi)``.

    Measure ``4 pi rho^2 d rho * 2 pi r^2 M(r) dr d xi``; with ``split`` the speed
    axis is cut at the characteristic boundary ``r = L(rho, xi) / t``.
    """
    g_inf = SQRT_2PI * _limit(sol, discrete)
    rho, wrho = gauss_legendre(0.0, 1.0, nodes)
    xi_lo, wlo = gauss_legendre(-1.0, 0.0, nodes)
    xi_hi, whi = gauss_legendre(0.0, 1.0, nodes)
    xi = np.concatenate([xi_lo, xi_hi])
    wxi = np.concatenate([wlo, whi])
    R, X = np.meshgrid(rho, xi, indexing="ij")
    L = chord_to_wall(R, X)
    if split and t > 0:
        cut = np.minimum(L / t, SPEED_CUTOFF)
        panels = [(np.zeros_like(cut), cut), (cut, np.full_like(cut, SPEED_CUTOFF))]
    else:
        panels = [(np.zeros_like(L), np.full_like(L, SPEED_CUTOFF))]
    total = np.zeros_like(L)
    for lo, hi in panels:
        r, wr = gauss_legendre(lo, hi, nodes)
        g = reconstruct(sol, f_in, t, R[..., None], r, X[..., None])
        dev = np.abs(g - g_inf) ** p_exponent
        total += np.sum(wr * r * r * maxwellian(r) * dev, axis=-1)
    w2 = (wrho * 4.0 * math.pi * rho * rho)[:, None] * (2.0 * math.pi * wxi)[None, :]
    return float(np.sum(w2 * total))


def error_curve(sol, f_in, times, p_exponents, root=False):
    """``{p: array}`` of :func:`lp_error` values over ``times``."""
    return {p: np.array([lp_error(sol, f_in, float(t), p, root=root) for t in times]) for p in p_exponents}


def time_average(times, values, window):
    """``(1 / (t1 - t0)) int_{t0}^{t1} values dt`` by the trapezoid rule on the samples in ``window``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    t0, t1 = window
    sel = (t >= t0) & (t <= t1)
    if np.count_nonzero(sel) < 2:
        raise DomainError("need at least two samples in the averaging window")
    ts, vs = t[sel], v[sel]
    return float(trapezoid(vs, ts) / (ts[-1] - ts[0]))


def not_exited_mass(t, nodes=FIELD_NODES):
    """``int int 1_{t < tau} M dv dx``: the Maxwellian mass that has not met the wall."""
    if t <= 0:
        return BALL_VOLUME
    r, wr = gauss_legendre(0.0, min(SPEED_CUTOFF, 2.0 / t), nodes)
    tr = t * r
    # P(a > t r) for the backward chord distance a with density 3 (4 - a^2) / 16
    surv = 1.0 - (3.0 * tr / 4.0 - tr ** 3 / 16.0)
    return BALL_VOLUME * float(np.sum(wr * 4.0 * math.pi * r * r * maxwellian(r) * surv))


def boundary_flux(sol, f_in, t, points, nodes=48, rng=None):
    """Outgoing wall flux ``int_{v.n > 0} f v.n dv`` at 3D boundary points.

    Each point gets its own randomly rotated velocity frame, and the field is
    evaluated through the 3D vectors ``x`` and ``v``, so agreement between
    points is a genuine check of the rotational invariance of the flux.
    """
    if f_in.kind != "gas":
        raise DomainError("boundary_flux needs gas initial data")
    rng = np.random.default_rng(0) if rng is None else rng
    xi, wxi = gauss_legendre(0.0, 1.0, nodes)
    phi = 2.0 * math.pi * (np.arange(nodes) + 0.5) / nodes
    wphi = np.full(nodes, 2.0 * math.pi / nodes)
    out = []
    for x in np.atleast_2d(points):
        n = x / np.linalg.norm(x)
        e1 = np.cross(n, rng.normal(size=3))
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        # speed axis split at the emission boundary r = 2 xi / t
        cut = np.minimum(2.0 * xi / t, SPEED_CUTOFF) if t > 0 else np.full_like(xi, SPEED_CUTOFF)
        total = 0.0
        for lo, hi in ((np.zeros_like(cut), cut), (cut, np.full_like(cut, SPEED_CUTOFF))):
            r, wr = gauss_legendre(lo, hi, nodes)  # (nxi, nr)
            sin = np.sqrt(1.0 - xi * xi)
            dirs = (xi[:, None, None] * n + sin[:, None, None] * (
                np.cos(phi)[None, :, None] * e1 + np.sin(phi)[None, :, None] * e2))  # (nxi, nphi, 3)
            v = dirs[:, :, None, :] * r[:, None, :, None]  # (nxi, nphi, nr, 3)
            X = np.broadcast_to(x, v.shape)
            rho, speed, cosang = reduced_coordinates(X, v)
            g = reconstruct(sol, f_in, t, np.minimum(rho, 1.0), speed, cosang)
            integrand = g * maxwellian(speed) * speed ** 3 * xi[:, None, None]
            total += float(np.sum(integrand * wxi[:, None, None] * wphi[None, :, None] * wr[:, None, :]))
        out.append(total)
    return np.array(out)
